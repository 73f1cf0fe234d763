"""Transfer maps, capitulation kernels and small-group cohomology by exact integer arithmetic."""

__version__ = "0.1.0"
