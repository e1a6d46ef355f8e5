import numpy as np
import pytest
from hypothesis import given, strategies as st

from degsw.grid import Grid2D, laplacian
from degsw.lame import (LameError, lame_elliptic_solve, lame_exponential, lame_symbol,
                        lame_symbol_eigen, parabolic_step)
from degsw.model import ModelSpec, lame_apply


def _zero_mean(grid, seed):
    f = np.random.default_rng(seed).standard_normal((2,) + grid.shape)
    return f - grid.mean(f)[:, None, None]


@given(st.integers(0, 10**6), st.floats(0.1, 3.0), st.floats(-0.9, 3.0))
def test_solve_inverts_apply(seed, alpha, bfrac):
    g = Grid2D(32, 5.0)
    beta = bfrac * alpha
    u = _zero_mean(g, seed)
    F = lame_apply(g, u, ModelSpec(alpha=alpha, beta=beta))
    back = lame_elliptic_solve(g, F, alpha, beta)
    Fb = lame_apply(g, back, ModelSpec(alpha=alpha, beta=beta))
    assert np.max(np.abs(Fb - F)) <= 1e-10 * np.max(np.abs(F))


def test_nonzero_mean_rejected(grid32):
    F = np.ones((2,) + grid32.shape)
    with pytest.raises(LameError, match="measured mean"):
        lame_elliptic_solve(grid32, F, 1.0, 0.0)


def test_coefficient_guard(grid32):
    with pytest.raises(LameError, match="alpha>0"):
        lame_elliptic_solve(grid32, np.zeros((2,) + grid32.shape), 0.0, 0.0)
    with pytest.raises(LameError, match="alpha\\+beta>=0"):
        parabolic_step(grid32, np.zeros((2,) + grid32.shape), np.zeros((2,) + grid32.shape),
                       0.1, 1.0, -1.5)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 2), st.floats(-0.1, 2))
def test_symbol_eigenvalues_match_matrix(k1, k2, alpha, beta):
    k = np.array([k1, k2])
    if k @ k < 1e-6:
        return
    got = sorted(lame_symbol_eigen(k, alpha, beta))
    want = sorted(np.linalg.eigvalsh(lame_symbol(k, alpha, beta)))
    assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


def test_parabolic_step_single_mode(grid32):
    x1, x2 = grid32.mesh()
    u = np.stack([np.cos(2 * x1), np.cos(3 * x1)])  # longitudinal k=2, transverse k=3
    alpha, beta, dt = 0.5, 1.0, 0.01
    cn = parabolic_step(grid32, u, np.zeros_like(u), dt, alpha, beta)
    lam_l, lam_t = (2 * alpha + beta) * 4, alpha * 9
    r = lambda lam: (1 - 0.5 * dt * lam) / (1 + 0.5 * dt * lam)
    assert np.allclose(cn[0], r(lam_l) * u[0], atol=1e-13)
    assert np.allclose(cn[1], r(lam_t) * u[1], atol=1e-13)
    ie = parabolic_step(grid32, u, np.zeros_like(u), dt, alpha, beta, "implicit-euler")
    assert np.allclose(ie[0], u[0] / (1 + dt * lam_l), atol=1e-13)
    with pytest.raises(ValueError, match="unknown scheme"):
        parabolic_step(grid32, u, u, dt, alpha, beta, "rk4")


def test_mean_mode_integrates_forcing(grid32):
    u = np.zeros((2,) + grid32.shape)
    rhs = np.full_like(u, 2.0)
    out = parabolic_step(grid32, u, rhs, 0.1, 1.0, 0.0)
    assert np.allclose(out, 0.2)


def test_exponential_matches_closed_form(grid32):
    x1, x2 = grid32.mesh()
    u = np.stack([np.sin(x2), np.sin(x1)])
    out = lame_exponential(grid32, u, 0.3, 1.0, 0.0)
    assert np.allclose(out, np.exp(-0.3) * u, atol=1e-13)


def test_isotropic_limit_is_vector_laplacian(grid32):
    F = _zero_mean(grid32, 5)
    u = lame_elliptic_solve(grid32, F, 1.0, -1.0)
    assert np.max(np.abs(-laplacian(grid32, u) - F)) < 1e-10
