"""Stein-method bounds between bridge laws of continuous-time Markov chains.

The package simulates bridge-valued Markov chains on the hypercube and the
integer lattice, couples them to measure contraction, samples the bridge
laws exactly where possible, estimates Wasserstein distances between
configuration samples, and evaluates the closed-form and Monte Carlo
distance bounds, including the filtering bounds for a linear observation
model.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
