"""Performance analysis of multi-RIS assisted dual-hop UAV links."""

__version__ = "0.1.0"
