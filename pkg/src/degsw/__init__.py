"""Degenerate-viscosity compressible flow and shallow water on the periodic square.

Solves the (phi, psi, u) reformulation by Picard iteration over linearized
problems: semi-Lagrangian transport for phi and psi, a Fourier Lame solve for u.
"""
from .grid import Grid2D, NormSpec, differentiate, norm
from .model import ModelSpec, RegularizationParams, State, Variant
from .picard import IterationTrace, Trajectory, picard_solve

__all__ = ["Grid2D", "NormSpec", "differentiate", "norm", "ModelSpec", "RegularizationParams",
           "State", "Variant", "IterationTrace", "Trajectory", "picard_solve"]
__version__ = "0.1.0"
