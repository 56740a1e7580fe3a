"""Link-level simulation of FBMC-based massive MIMO uplinks."""

__version__ = "0.1.0"
