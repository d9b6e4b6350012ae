"""Near-linear kernels of non-branching matrices and persistent Laplacians built on them."""

__version__ = "0.1.0"
