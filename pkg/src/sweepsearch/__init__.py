"""Multi-drone sweep-and-search for user clusters, with baselines and a deterministic simulator."""

__version__ = "0.1.0"
