"""Central-controller scheduling engine and simulator for generate-when-requested quantum networks."""

__version__ = "0.1.0"
