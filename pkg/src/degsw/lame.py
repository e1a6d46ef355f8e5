"""Fourier-symbol solves for the Lame operator.

On each wavevector k the symbol alpha|k|^2 I + (alpha+beta) k k^T splits into
the longitudinal direction (eigenvalue (2 alpha + beta)|k|^2) and the
transverse one (alpha|k|^2), so every solve is a scalar division per
projection.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid2D, check_finite


class LameError(ValueError):
    pass


def _check_coeffs(alpha: float, beta: float) -> None:
    if not (alpha > 0 and alpha + beta >= 0):
        raise LameError(f"Lame operator needs alpha>0, alpha+beta>=0 (alpha={alpha}, beta={beta})")


def lame_symbol(k, alpha: float, beta: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return alpha * (k @ k) * np.eye(2) + (alpha + beta) * np.outer(k, k)


def lame_symbol_eigen(k, alpha: float, beta: float) -> tuple[float, float]:
    """(longitudinal, transverse) eigenvalues of the symbol at wavevector k."""
    k = np.asarray(k, dtype=float)
    k2 = float(k @ k)
    if k2 == 0:
        raise LameError("k = 0 is the mean mode; handle it separately")
    return (2 * alpha + beta) * k2, alpha * k2


def _odd_wavevector(grid: Grid2D):
    """Wavevector with Nyquist entries dropped, matching first-derivative symbols."""
    k1 = (grid.multiplier(1, 0) / 1j).real
    k2 = (grid.multiplier(0, 1) / 1j).real
    k1, k2 = np.broadcast_arrays(k1, k2)
    return k1, k2, k1**2 + k2**2


def _eigenvalues(grid: Grid2D, alpha: float, beta: float):
    """Discrete (longitudinal, transverse) eigenvalues consistent with lame_apply."""
    _, _, kodd = _odd_wavevector(grid)
    return alpha * grid.k_squared + (alpha + beta) * kodd, alpha * grid.k_squared


def _apply_split(grid: Grid2D, uh: np.ndarray, long_fac, trans_fac) -> np.ndarray:
    """Multiply the longitudinal part by long_fac and the transverse part by trans_fac."""
    k1, k2, ksq = _odd_wavevector(grid)
    safe = np.where(ksq > 0, ksq, 1.0)
    kdotu = np.where(ksq > 0, (k1 * uh[0] + k2 * uh[1]) / safe, 0.0)
    long0, long1 = k1 * kdotu, k2 * kdotu
    out = np.empty_like(uh)
    out[0] = long_fac * long0 + trans_fac * (uh[0] - long0)
    out[1] = long_fac * long1 + trans_fac * (uh[1] - long1)
    return out


def lame_elliptic_solve(grid: Grid2D, F: np.ndarray, alpha: float, beta: float,
                        mean_tol: float = 1e-10) -> np.ndarray:
    """Zero-mean u with L u = F on the torus."""
    _check_coeffs(alpha, beta)
    F = check_finite(F, "F")
    scale = max(float(np.max(np.abs(F))), 1.0)
    mean = grid.mean(F)
    if np.max(np.abs(mean)) > mean_tol * scale:
        raise LameError(f"F must have zero mean on the torus; measured mean {mean.tolist()}")
    Fh = grid.fft(F)
    lam_long, lam_trans = _eigenvalues(grid, alpha, beta)
    lam_long[0, 0] = lam_trans[0, 0] = 1.0
    uh = _apply_split(grid, Fh, 1.0 / lam_long, 1.0 / lam_trans)
    uh[:, 0, 0] = 0.0
    return grid.ifft(uh)


def parabolic_step(grid: Grid2D, u_n: np.ndarray, rhs: np.ndarray, dt: float,
                   alpha: float, beta: float, scheme: str = "crank-nicolson") -> np.ndarray:
    """One step of u_t + L u = rhs with rhs frozen over the step.

    The mean mode sees no L and just integrates the mean of rhs.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_coeffs(alpha, beta)
    lam_long, lam_trans = _eigenvalues(grid, alpha, beta)
    uh = grid.fft(u_n)
    rh = grid.fft(rhs)
    if scheme == "implicit-euler":
        b = uh + dt * rh
        out = _apply_split(grid, b, 1.0 / (1 + dt * lam_long), 1.0 / (1 + dt * lam_trans))
    elif scheme == "crank-nicolson":
        ex = _apply_split(grid, uh, 1 - 0.5 * dt * lam_long, 1 - 0.5 * dt * lam_trans)
        b = ex + dt * rh
        out = _apply_split(grid, b, 1.0 / (1 + 0.5 * dt * lam_long),
                           1.0 / (1 + 0.5 * dt * lam_trans))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    out[:, 0, 0] = uh[:, 0, 0] + dt * rh[:, 0, 0]
    return grid.ifft(out)


def lame_exponential(grid: Grid2D, u: np.ndarray, t: float, alpha: float, beta: float) -> np.ndarray:
    """exp(-t L) u, the exact flow of u_t + L u = 0."""
    _check_coeffs(alpha, beta)
    lam_long, lam_trans = _eigenvalues(grid, alpha, beta)
    uh = grid.fft(u)
    out = _apply_split(grid, uh, np.exp(-t * lam_long), np.exp(-t * lam_trans))
    out[:, 0, 0] = uh[:, 0, 0]
    return grid.ifft(out)
