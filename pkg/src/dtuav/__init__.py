"""Digital-twin-assisted UAV edge-computing simulator and joint optimizer."""

__version__ = "0.1.0"
