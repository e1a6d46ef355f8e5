import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from degsw.grid import Grid2D, laplacian, seminorm
from degsw.inequalities import (LCG64, InequalityError, commutator_sides, commutator_verify,
                                gn_sides, gn_theta, gn_verify, lame_elliptic_solve, lame_sides,
                                lame_regularity_verify, random_field)

INF = math.inf


def test_gn_theta_common_versions():
    assert gn_theta(2, 3, 2) == Fraction(1, 3)
    assert gn_theta(2, 6, 2) == Fraction(2, 3)
    assert gn_theta(3, INF, 6) == Fraction(1, 2)
    assert gn_theta(2, 5, 5) == 0


@pytest.mark.parametrize("q", [3, 4, 6])
def test_gn_theta_p_equals_r_equals_two(q):
    assert gn_theta(2, q, 2) == Fraction(q - 2, q)


@given(st.integers(2, 50), st.integers(2, 50))
def test_gn_theta_p2_range(r, q):
    if q < r:
        with pytest.raises(InequalityError, match="q in \\[r, inf\\)"):
            gn_theta(2, q, r)
    else:
        th = gn_theta(2, q, r)
        assert 0 <= th < 1


def test_gn_admissibility_messages():
    with pytest.raises(InequalityError, match="p=2 needs q in \\[r, inf\\)"):
        gn_theta(2, INF, 2)
    with pytest.raises(InequalityError, match="2p/\\(2-p\\)=4"):
        gn_theta(Fraction(4, 3), 6, 2)
    with pytest.raises(InequalityError, match="r must lie in"):
        gn_theta(2, 3, 1)
    assert gn_theta(Fraction(4, 3), 3, 2) == Fraction(2, 3)


def test_gn_single_mode_against_quadrature():
    g = Grid2D(256)
    x1, _ = g.mesh()
    lhs, rhs = gn_sides(g, np.sin(x1), 2, 3, 2)
    L = 2 * math.pi
    l3 = (L * quad(lambda x: abs(math.sin(x)) ** 3, 0, L, limit=200)[0]) ** (1 / 3)
    l2 = math.sqrt(L * L / 2)
    assert lhs / rhs == pytest.approx(l3 / l2, rel=1e-6)


@given(st.floats(0.01, 100))
def test_gn_homogeneity(scale):
    g = Grid2D(32)
    h = random_field(g, LCG64(5))
    a = gn_sides(g, h, 2, 6, 2)
    b = gn_sides(g, scale * h, 2, 6, 2)
    assert a[0] / a[1] == pytest.approx(b[0] / b[1], rel=1e-12)


def test_lcg_recurrence():
    r = LCG64(7)
    assert r.next_u64() == (6364136223846793005 * 7 + 1442695040888963407) % 2**64
    u = LCG64(1).uniform(1000)
    assert 0 < u.min() and u.max() < 1


def test_random_field_properties():
    g = Grid2D(32)
    f = random_field(g, LCG64(3))
    assert abs(f.mean()) < 1e-14
    fh = np.fft.fft2(f)
    k = np.fft.fftfreq(32, 1 / 32)
    band = np.hypot(k[:, None], k[None, :]) > 8
    assert np.max(np.abs(fh[band])) < 1e-10


def test_reports_deterministic(tmp_path):
    a = gn_verify(10, 2, 6, 2, seed=7, n=32)
    b = gn_verify(10, 2, 6, 2, seed=7, n=32)
    c = gn_verify(10, 2, 6, 2, seed=8, n=32)
    assert a.lhs == b.lhs and a.rhs == b.rhs
    assert a.lhs != c.lhs
    a.write_csv(tmp_path / "gn.csv")
    rows = (tmp_path / "gn.csv").read_text().splitlines()
    assert rows[0] == "sample_id,lhs,rhs,ratio"
    assert rows[-1].startswith("max_ratio,,,")
    assert len(rows) == 12


def test_commutator_constant_f_vanishes():
    g = Grid2D(32)
    rng = LCG64(1)
    gfield = random_field(g, rng)
    for s in (1, 2):
        lhs, _ = commutator_sides(g, np.full(g.shape, 3.0), gfield, s, 2, 3, 6)
        assert lhs < 1e-10


def test_commutator_constant_g_ratio_at_most_one():
    g = Grid2D(64)
    f = random_field(g, LCG64(2))
    lhs, rhs = commutator_sides(g, f, np.full(g.shape, 1.7), 1, 2, 2, INF)
    assert lhs == pytest.approx(1.7 * seminorm(g, f, 1, 2), rel=1e-10)
    assert lhs / rhs <= 1 + 1e-12


def test_commutator_guards():
    with pytest.raises(InequalityError, match="unknown exponent choice"):
        commutator_verify(1, "a4-b4", 1, 0)
    with pytest.raises(InequalityError, match="s must be 1 or 2"):
        commutator_verify(3, "a3-b6", 1, 0)


@pytest.mark.parametrize("form", ["top-b", "top-a"])
def test_commutator_batches_finite(form):
    rep = commutator_verify(2, "a2-binf", 8, 3, form=form, n=32)
    assert np.all(np.isfinite(rep.ratios)) and rep.max_ratio > 0


def test_lame_single_mode_symbol_ratio():
    g = Grid2D(32)
    x1, _ = g.mesh()
    alpha, beta = 0.5, 1.0
    long = np.stack([np.cos(3 * x1), np.zeros_like(x1)])
    trans = np.stack([np.zeros_like(x1), np.cos(3 * x1)])
    for F, lam in ((long, 2 * alpha + beta), (trans, alpha)):
        for k in (0, 1):
            lhs, rhs = lame_sides(g, F, k, 2, alpha, beta)
            assert lhs / rhs == pytest.approx(1 / lam, rel=1e-10)


def test_lame_q2_bounded_by_inverse_alpha():
    rep = lame_regularity_verify(0, 2, 10, 4, alpha=0.5, beta=0.3, n=32)
    assert rep.max_ratio <= 1 / 0.5 + 1e-12


def test_lame_isotropic_limit_matches_scalar_laplacian():
    g = Grid2D(32)
    rng = LCG64(9)
    for _ in range(3):
        F = random_field(g, rng, components=2)
        u = lame_elliptic_solve(g, F, 1.0, -1.0)
        w = np.stack([lame_elliptic_solve(g, np.stack([c, np.zeros_like(c)]), 1.0, -1.0)[0]
                      for c in F])
        assert np.max(np.abs(u - w)) < 1e-10
        assert np.max(np.abs(-laplacian(g, u) - F)) < 1e-10
    a = lame_regularity_verify(1, 6, 5, 2, alpha=1.0, beta=-1.0, n=32)
    assert np.all(np.isfinite(a.ratios))


def test_lame_guards():
    with pytest.raises(InequalityError, match="q must be 2 or 6"):
        lame_regularity_verify(0, 3, 1, 0)
    with pytest.raises(InequalityError, match="alpha>0"):
        lame_regularity_verify(0, 2, 1, 0, alpha=0.0)
