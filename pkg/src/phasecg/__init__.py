"""Phase-space classical wave functions, coarse graining and quantum observables."""
__version__ = "0.1.0"
