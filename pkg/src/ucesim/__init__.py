"""Random unitary circuit ensemble simulator and CUE convergence statistics."""

__version__ = "0.1.0"
