"""Command-line front end: ``toa <scenario> --config run.json``.

One JSON config describes one run. Results go to ``<output>/<scenario>.csv``
or ``<output>/<scenario>.json``. Exit codes: 0 success, 2 invalid config,
3 file I/O failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, barrier, classical, free1d, free3d, wkb
from .errors import DomainError, InvalidParameterError, NumericalError
from .numerics import TimeGrid, resolve_threads
from .potential import gaussian_bump, tabulated_potential, zero_potential
from .wavepacket import UnitsConfig, gaussian_packet, negative_momentum_fraction, tabulated_packet

SCENARIOS = ("free1d", "free3d", "barrier", "hartman-scan", "wkb", "classical-oracle")
EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(Exception):
    """Config problems, one ``{"field", "message"}`` entry per offending field."""

    def __init__(self, problems):
        super().__init__("; ".join(f"{p['field']}: {p['message']}" for p in problems))
        self.problems = problems


@dataclass
class RunReport:
    scenario: str
    config: dict
    config_hash: str
    version: str = __version__
    results: dict = field(default_factory=dict)
    table: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "scenario": self.scenario,
            "version": self.version,
            "config_hash": self.config_hash,
            "config": self.config,
            "results": self.results,
            "table": self.table,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
            "timings": self.timings,
        }


def config_hash(config):
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---- config validation -------------------------------------------------


class _Checker:
    def __init__(self, config):
        self.config = config
        self.problems = []

    def fail(self, name, message):
        self.problems.append({"field": name, "message": message})

    def section(self, name, required=True):
        value = self.config.get(name)
        if value is None:
            if required:
                self.fail(name, "missing")
            return None
        if not isinstance(value, dict):
            self.fail(name, "must be an object")
            return None
        return value

    def number(self, obj, key, prefix="", required=True, default=None, positive=False, nonneg=False):
        name = f"{prefix}{key}"
        if obj is None:
            return default
        value = obj.get(key, None)
        if value is None:
            if required:
                self.fail(name, "missing")
            return default
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(name, "must be a finite number")
            return default
        if positive and value <= 0:
            self.fail(name, "must be positive")
        if nonneg and value < 0:
            self.fail(name, "must be non-negative")
        return float(value)

    def numbers(self, obj, key, prefix="", required=True, length=None):
        name = f"{prefix}{key}"
        value = None if obj is None else obj.get(key)
        if value is None:
            if required:
                self.fail(name, "missing")
            return None
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(name, "must be a list of numbers")
            return None
        if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
            self.fail(name, "must be a non-empty list of finite numbers")
            return None
        if length is not None and arr.size != length:
            self.fail(name, f"must have {length} entries")
            return None
        return arr


def _packet(ck):
    spec = ck.section("packet")
    if spec is None:
        return None
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        q0 = ck.number(spec, "q0", "packet.")
        p0 = ck.number(spec, "p0", "packet.")
        sp = ck.number(spec, "sigma_p", "packet.", positive=True)
        if None in (q0, p0, sp) or sp <= 0:
            return None
        return gaussian_packet(q0, p0, sp)
    if kind == "tabulated":
        p = ck.numbers(spec, "p", "packet.")
        re = ck.numbers(spec, "re", "packet.")
        im = ck.numbers(spec, "im", "packet.", required=False)
        if p is None or re is None:
            return None
        amp = re + 1j * (im if im is not None else 0.0)
        try:
            return tabulated_packet(p, amp)
        except InvalidParameterError as exc:
            ck.fail("packet", str(exc))
            return None
    ck.fail("packet.kind", "must be 'gaussian' or 'tabulated'")
    return None


def _potential(ck):
    spec = ck.section("potential")
    if spec is None:
        return None
    family = spec.get("family")
    try:
        if family == "zero":
            return zero_potential()
        if family == "gaussian_bump":
            h = ck.number(spec, "height", "potential.", nonneg=True)
            w = ck.number(spec, "width", "potential.", positive=True)
            c = ck.number(spec, "center", "potential.")
            if None in (h, w, c):
                return None
            return gaussian_bump(h, w, c)
        if family == "tabulated":
            q = ck.numbers(spec, "q", "potential.")
            v = ck.numbers(spec, "v", "potential.")
            if q is None or v is None:
                return None
            return tabulated_potential(q, v)
    except InvalidParameterError as exc:
        ck.fail("potential", str(exc))
        return None
    ck.fail("potential.family", "must be 'zero', 'gaussian_bump' or 'tabulated'")
    return None


def _grid(ck):
    spec = ck.section("grid", required=False)
    if spec is None:
        return None
    lo = ck.number(spec, "t_min", "grid.")
    hi = ck.number(spec, "t_max", "grid.")
    count = ck.number(spec, "count", "grid.", required=False, default=2001)
    if None in (lo, hi):
        return None
    if not lo < hi:
        ck.fail("grid", "t_min must be below t_max")
        return None
    if count < 2 or count != int(count):
        ck.fail("grid.count", "must be an integer >= 2")
        return None
    return TimeGrid(lo, hi, int(count))


def validate(scenario, config):
    """Check ``config`` for ``scenario`` and build the model objects it describes.

    Raises:
        ConfigError: listing every offending field.
    """
    if not isinstance(config, dict):
        raise ConfigError([{"field": "<root>", "message": "config must be a JSON object"}])
    ck = _Checker(config)
    if scenario not in SCENARIOS:
        ck.fail("scenario", f"must be one of {', '.join(SCENARIOS)}")
        raise ConfigError(ck.problems)
    if "scenario" in config and config["scenario"] != scenario:
        ck.fail("scenario", f"config is for {config['scenario']!r}, not {scenario!r}")
    mass = ck.number(config, "mass", required=False, default=1.0, positive=True)
    tol = ck.section("tolerances", required=False) or {}
    run = {"units": UnitsConfig(mass if mass and mass > 0 else 1.0)}
    run["truncation_tol"] = ck.number(tol, "truncation", "tolerances.", required=False,
                                      default=free1d.TRUNCATION_TOL, positive=True)

    if scenario == "free3d":
        prof = ck.section("profile")
        p_min = ck.number(prof, "p_min", "profile.", positive=True)
        p_max = ck.number(prof, "p_max", "profile.", positive=True)
        if prof is not None and prof.get("family", "bump") != "bump":
            ck.fail("profile.family", "only 'bump' is supported")
        center = ck.numbers(config, "center", required=False, length=3)
        run["times"] = ck.numbers(config, "times")
        run["T_half"] = ck.number(config, "T_half", required=False, default=None, nonneg=True)
        probes = config.get("probe_momenta")
        try:
            probes = np.asarray(probes, dtype=float)
            if probes.ndim != 2 or probes.shape[1] != 3 or not np.all(np.isfinite(probes)):
                raise ValueError
            run["probes"] = probes
        except (TypeError, ValueError):
            ck.fail("probe_momenta", "must be a list of 3-component momenta")
        if p_min is not None and p_max is not None:
            if not 0 < p_min < p_max:
                ck.fail("profile", "need 0 < p_min < p_max")
            else:
                run["state"] = free3d.bump_packet(p_min, p_max, tuple(center) if center is not None else (0, 0, 0),
                                                  units=run["units"])
        if ck.problems:
            raise ConfigError(ck.problems)
        return run

    run["packet"] = _packet(ck)
    run["x"] = ck.number(config, "x")
    run["grid"] = _grid(ck)
    if scenario in ("barrier", "hartman-scan"):
        spec = ck.section("barrier")
        run["height"] = ck.number(spec, "height", "barrier.", nonneg=True)
        run["start"] = ck.number(spec, "start", "barrier.", required=False, default=0.0)
        if scenario == "barrier":
            run["width"] = ck.number(spec, "width", "barrier.", positive=True)
        else:
            widths = ck.numbers(config, "widths")
            if widths is not None and (np.any(widths <= 0) or np.any(np.diff(widths) <= 0)):
                ck.fail("widths", "must be positive and strictly ascending")
            run["widths"] = widths
            run["resolution"] = ck.number(config, "resolution", required=False, default=1.0, positive=True)
        pk, x, start = run["packet"], run["x"], run["start"]
        if pk is not None and x is not None and start is not None:
            last = run.get("width") if scenario == "barrier" else (
                None if run.get("widths") is None else float(run["widths"][-1]))
            if not pk.center < start:
                ck.fail("packet.q0", "must lie left of barrier.start")
            if last is not None and not start + last < x:
                ck.fail("x", "must lie beyond the far edge of the (widest) barrier")
    if scenario in ("wkb", "classical-oracle"):
        run["potential"] = _potential(ck)
    if scenario == "classical-oracle":
        seed = config.get("seed", 0)
        samples = config.get("samples", 10_000)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            ck.fail("seed", "must be a non-negative integer")
        if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1000:
            ck.fail("samples", "must be an integer >= 1000")
        run["seed"], run["samples"] = seed, samples
        run["energies"] = ck.numbers(config, "energies", required=False)
        if run["packet"] is not None and run["packet"].kind != "gaussian":
            ck.fail("packet.kind", "the classical ensemble needs a gaussian packet")
    if ck.problems:
        raise ConfigError(ck.problems)
    return run


# ---- scenarios -----------------------------------------------------------


def _distribution_table(dist):
    return {"t": dist.times.tolist(), "density": dist.density.tolist()}


def _free1d(run, report, threads):
    pk, x, units = run["packet"], run["x"], run["units"]
    dist = free1d.arrival_distribution(pk, x, run["grid"], units, run["truncation_tol"])
    report.table = _distribution_table(dist)
    report.results = {
        "arrival_probability": dist.arrival_probability,
        "mean_time": dist.mean_time,
        "mean_time_phase": free1d.mean_arrival_time_phase(pk, x, units),
        "peak_time": dist.peak_time,
    }
    report.diagnostics.update(dist.diagnostics)
    report.diagnostics["negative_momentum_fraction"] = negative_momentum_fraction(pk)


def _free3d(run, report, threads):
    state, units, times = run["state"], run["units"], run["times"]
    if run["T_half"] is None:
        run["T_half"] = free3d.identity_window(state, units)
    amp = free3d.arrival_amplitude_3d(state, times, units)
    report.table = {"t": list(map(float, times)), "amplitude_re": amp.real.tolist(),
                    "amplitude_im": amp.imag.tolist(), "density": (np.abs(amp) ** 2).tolist()}
    report.results = {
        "norm": state.norm(),
        "T_half": run["T_half"],
        "identity_residual": free3d.subspace_identity_residual(state, run["probes"], run["T_half"], units),
        "identity_residual_averaged": free3d.subspace_identity_residual(
            state, run["probes"], run["T_half"], units, averaged=True),
    }


def _barrier(run, report, threads):
    pk, x, units = run["packet"], run["x"], run["units"]
    b = barrier.SquareBarrier(run["height"], run["width"], run["start"])
    dist = barrier.transmitted_arrival_distribution(pk, x, b, run["grid"], units, run["truncation_tol"])
    phase_mean = barrier.mean_transmitted_arrival(pk, x, b, units)
    free_mean = barrier.free_mean_right_movers(pk, x, units)
    report.table = _distribution_table(dist)
    report.results = {
        "transmitted_probability": barrier.transmitted_arrival_probability(pk, b, units),
        "mean_time": phase_mean,
        "mean_time_moment": dist.mean_time,
        "free_mean_time": free_mean,
        "advancement": phase_mean - free_mean,
    }
    report.diagnostics.update(dist.diagnostics)
    report.diagnostics["negative_momentum_fraction"] = negative_momentum_fraction(pk)


def _hartman(run, report, threads):
    pk, x, units = run["packet"], run["x"], run["units"]
    scan = barrier.hartman_scan(pk, x, run["height"], run["widths"], units, run["start"], threads, run["resolution"])
    report.table = {"width": list(scan.widths), "mean_time": list(scan.mean_times),
                    "advancement": list(scan.advancements)}
    report.results = {
        "free_mean_time": scan.free_mean,
        "sign_changes": scan.sign_changes,
        "crossover_bracket": list(scan.bracket) if scan.bracket else None,
        "crossover_width": scan.crossover,
        "transmitted_probabilities": list(scan.transmitted_probabilities),
    }
    report.diagnostics["negative_momentum_fraction"] = negative_momentum_fraction(pk)


def _wkb(run, report, threads):
    pk, x, units, pot = run["packet"], run["x"], run["units"], run["potential"]
    dist = wkb.wkb_arrival_distribution(pk, pot, x, run["grid"], units, run["truncation_tol"])
    report.table = _distribution_table(dist)
    report.results = {
        "arrival_probability": wkb.wkb_arrival_probability(pk, pot, x, units),
        "mean_time": wkb.wkb_mean_arrival(pk, pot, x, units),
        "mean_time_moment": dist.mean_time,
    }
    report.diagnostics.update(dist.diagnostics)


def _classical(run, report, threads):
    pk, x, units, pot = run["packet"], run["x"], run["units"], run["potential"]
    m = units.mass
    energies = run["energies"] if run["energies"] is not None else [pk.p0**2 / (2 * m)]
    rows = {"energy": [], "t_trajectory": [], "t_hj": [], "relative_difference": []}
    for E in energies:
        start = classical.PhaseSpacePoint(pk.q0, math.sqrt(2.0 * m * E) * (1.0 if x >= pk.q0 else -1.0))
        t_traj = classical.arrival_time_trajectory(start, pot, x, units)
        try:
            t_hj = classical.arrival_time_hj(E, pot, pk.q0, x, units)
        except DomainError:
            t_hj = None
        rows["energy"].append(float(E))
        rows["t_trajectory"].append(t_traj)
        rows["t_hj"].append(t_hj)
        rows["relative_difference"].append(
            abs(t_traj - t_hj) / abs(t_hj) if t_traj is not None and t_hj else None)
    ens = classical.ensemble_mean_arrival(pk, pot, x, run["samples"], run["seed"], units, threads)
    report.table = rows
    report.results = {"ensemble_mean": ens.mean, "ensemble_stderr": ens.stderr,
                      "no_arrival_fraction": ens.no_arrival_fraction, "samples": ens.samples, "seed": run["seed"]}


_RUNNERS = {"free1d": _free1d, "free3d": _free3d, "barrier": _barrier, "hartman-scan": _hartman,
            "wkb": _wkb, "classical-oracle": _classical}


def run(scenario, config, threads=None):
    """Validate ``config``, execute ``scenario`` and return its RunReport.

    Numerical warnings raised during the run are recorded in the report.
    """
    parsed = validate(scenario, config)
    report = RunReport(scenario, config, config_hash(config))
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _RUNNERS[scenario](parsed, report, resolve_threads(threads))
    report.warnings = [f"{w.category.__name__}: {w.message}" for w in caught]
    report.timings = {"seconds": time.perf_counter() - start}
    return report


# ---- output --------------------------------------------------------------


def _number(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def to_json(obj):
    """JSON text with every float written to 17 significant digits; NaN and inf become null."""
    if obj is None:
        return "null"
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, float, np.integer, np.floating, bool, np.bool_)):
        return _number(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_csv(report):
    lines = [
        f"# toa {report.version}",
        f"# scenario: {report.scenario}",
        f"# config_sha256: {report.config_hash}",
    ]
    for key, value in report.results.items():
        if key == "crossover_bracket":
            continue
        if isinstance(value, (list, tuple)):
            value = " ".join(_number(v) if v is not None else "null" for v in value)
        elif value is None:
            value = "null"
        else:
            value = _number(value)
        lines.append(f"# {key}: {value}")
    for key, value in report.diagnostics.items():
        lines.append(f"# diagnostic {key}: {_number(value)}")
    for w in report.warnings:
        lines.append(f"# warning: {w}")
    columns = list(report.table)
    lines.append(",".join(columns))
    for row in zip(*(report.table[c] for c in columns)):
        lines.append(",".join("" if v is None else _number(v) for v in row))
    bracket = report.results.get("crossover_bracket")
    if bracket:
        lines.append(f"# crossover_bracket,{_number(bracket[0])},{_number(bracket[1])}")
    return "\n".join(lines) + "\n"


_PLOT_TEMPLATE = '''"""Plot {name} written by toa {version}."""
import sys

import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt("{name}", delimiter=",", comments="#", names=True)
x, y = data.dtype.names[0], data.dtype.names[{ycol}]
plt.plot(data[x], data[y], marker=".")
plt.xlabel(x)
plt.ylabel(y)
plt.title("{scenario}")
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "{stem}.png", dpi=150)
'''


def emit(report, fmt, path, plot_script=False):
    """Write ``report`` as ``fmt`` ("csv" or "json") to ``path``; returns the paths written."""
    path = Path(path)
    if fmt == "json":
        text = to_json(report.as_dict()) + "\n"
    elif fmt == "csv":
        text = to_csv(report)
    else:
        raise InvalidParameterError(f"format must be 'csv' or 'json', got {fmt!r}")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    written = [path]
    if plot_script and fmt == "csv":
        ycol = 2 if report.scenario == "hartman-scan" else len(report.table) - 1
        script = path.with_name(f"plot_{path.stem}.py")
        script.write_text(_PLOT_TEMPLATE.format(name=path.name, version=report.version, ycol=ycol,
                                                scenario=report.scenario, stem=path.stem))
        written.append(script)
    return written


# ---- entry point ---------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="toa", description="Quantum and classical time-of-arrival calculations.")
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--output", default=".", help="output directory (default: current directory)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $TOA_THREADS or 1)")
    parser.add_argument("--plot-script", action="store_true", help="also write a matplotlib script for the CSV")
    return parser


def _error(kind, message, fields=None):
    payload = {"error": kind, "message": message}
    if fields is not None:
        payload["fields"] = fields
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        _error("io", f"cannot read config: {exc}")
        return EXIT_IO
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        _error("config", f"config is not valid JSON: {exc}", [{"field": "<root>", "message": str(exc)}])
        return EXIT_CONFIG
    try:
        report = run(args.scenario, config, args.threads)
    except ConfigError as exc:
        _error("config", str(exc), exc.problems)
        return EXIT_CONFIG
    except (InvalidParameterError, DomainError) as exc:
        _error("config", str(exc), [{"field": "<model>", "message": str(exc)}])
        return EXIT_CONFIG
    except NumericalError as exc:
        _error("numerical", f"{type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL
    try:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        for p in emit(report, args.format, out / f"{args.scenario}.{args.format}", args.plot_script):
            print(p)
    except OSError as exc:
        _error("io", f"cannot write output: {exc}")
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
