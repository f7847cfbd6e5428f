"""Graph neural networks and classic solvers for wireless resource allocation."""

__version__ = "0.1.0"
