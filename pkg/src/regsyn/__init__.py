"""Robust sampled-data regulators for linear delay systems.

Modules
-------
linalg
    Dense complex matrix primitives.
rational
    Scalar and matrix rational functions.
nevanlinna
    Tangential Nevanlinna-Pick interpolation with boundary conditions.
plant
    Delay plants, their unstable spectrum and transfer functions.
synthesis
    Coprime factorization, interpolation data and controller construction.
simulate
    Sampled-data closed-loop simulation and tracking metrics.
cli
    Command-line front end.
"""

__version__ = "0.1.0"
