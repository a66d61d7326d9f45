"""Classical and quantum time of arrival: free particles, square barriers,
quasi-classical potentials and a classical-mechanics oracle."""

__version__ = "0.1.0"
