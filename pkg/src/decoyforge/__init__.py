"""Four-intensity decoy-state estimation for BB84 and MDI-QKD."""

__version__ = "0.1.0"
