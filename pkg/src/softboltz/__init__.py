"""Deterministic discrete-velocity solver for the spatially homogeneous
Boltzmann equation with soft-potential collision kernels, plus numerical
checks of the entropy/moment machinery that drives strong convergence to
equilibrium."""

__version__ = "0.1.0"
