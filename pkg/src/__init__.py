"""Exact cross-ratio degrees and matching bounds for 4-uniform hypergraphs"""

__version__ = "0.1.0"
