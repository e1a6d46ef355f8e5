import numpy as np
import pytest
from hypothesis import given, strategies as st

from degsw.grid import gradient
from degsw.model import (ModelError, ModelSpec, RegularizationParams, State, Variant, convert,
                         initial_state, lame_apply, pressure_force, psi_from_phi, q_apply,
                         q_matrix, theta)


@given(st.floats(1.05, 4.0), st.floats(1e-6, 1e3))
def test_convert_roundtrip(gamma, rho):
    spec = ModelSpec(gamma=gamma)
    phi = convert(np.array([rho]), "rho->phi", spec)
    back = convert(phi, "phi->rho", spec)
    assert back[0] == pytest.approx(rho, rel=1e-10)


def test_convert_vacuum_and_negatives():
    spec = ModelSpec()
    assert convert(np.array([0.0, -1e-16]), "rho->phi", spec).tolist() == [0.0, 0.0]
    with pytest.raises(ModelError, match="negative input"):
        convert(np.array([-1e-3]), "rho->phi", spec)
    assert convert(np.array([2.0]), "rho->pressure", ModelSpec(A=3.0))[0] == pytest.approx(12.0)
    with pytest.raises(ValueError, match="unknown direction"):
        convert(np.ones(1), "phi->u", spec)


def test_theta():
    assert theta(ModelSpec(gamma=2.0, A=1.0)) == 2.0
    assert ModelSpec(gamma=1.4, A=0.5).theta == pytest.approx(0.5 * 1.4 / 0.4)


def test_spec_validation_names_fields():
    with pytest.raises(ModelError, match="^gamma"):
        ModelSpec(gamma=1.0)
    with pytest.raises(ModelError, match="alpha>0, alpha\\+beta>=0"):
        ModelSpec(alpha=1.0, beta=-2.0)
    with pytest.raises(ModelError, match="^alpha: variant Gent requires alpha=0.5"):
        ModelSpec(alpha=1.0, variant="Gent")


def test_variant_pins():
    assert ModelSpec.for_variant("MarcheBN") == ModelSpec(2.0, 1.0, 1.0, 2.0, Variant.MARCHE_BN)
    g = ModelSpec.for_variant(Variant.GENT)
    assert (g.alpha, g.beta, g.gamma) == (0.5, 0.0, 2.0)
    assert not ModelSpec.for_variant("LaplacianOnly").uses_psi


def test_lame_apply_on_mode(grid32):
    x1, x2 = grid32.mesh()
    # longitudinal mode (cos x1, 0): L = (2 alpha + beta) * mode
    u = np.stack([np.cos(x1), np.zeros_like(x1)])
    spec = ModelSpec(alpha=0.7, beta=0.4)
    assert np.allclose(lame_apply(grid32, u, spec), (2 * 0.7 + 0.4) * u, atol=1e-10)
    # transverse mode (cos x2, 0): L = alpha * mode
    w = np.stack([np.cos(x2), np.zeros_like(x2)])
    assert np.allclose(lame_apply(grid32, w, spec), 0.7 * w, atol=1e-10)


def test_q_matrix_full(grid32):
    x1, x2 = grid32.mesh()
    v = np.stack([np.sin(x2), np.zeros_like(x2)])
    Q = q_matrix(grid32, v, ModelSpec(alpha=1.0, beta=3.0))
    # grad v + grad v^T has off-diagonals cos x2, div v = 0
    assert np.allclose(Q[0, 1], np.cos(x2), atol=1e-10)
    assert np.allclose(Q[1, 0], np.cos(x2), atol=1e-10)
    assert np.allclose(Q[0, 0], 0, atol=1e-10)


def test_saint_venant_matches_half_full_q_on_symmetric_gradient(grid32):
    # v = grad s has a symmetric Jacobian, so grad v = (grad v + grad v^T) / 2
    x1, x2 = grid32.mesh()
    v = gradient(grid32, np.sin(x1) * np.cos(x2) + 0.2 * np.cos(2 * x1))
    psi = np.stack([np.cos(x2), np.sin(x1 + x2)])
    sv = q_apply(grid32, psi, v, ModelSpec.for_variant("SaintVenant"))
    full = q_apply(grid32, psi, v, ModelSpec(alpha=0.5, beta=0.0))
    assert np.max(np.abs(sv - full)) < 1e-12


def test_laplacian_only_has_no_q(grid32):
    v = np.random.default_rng(0).standard_normal((2,) + grid32.shape)
    assert not np.any(q_matrix(grid32, v, ModelSpec.for_variant("LaplacianOnly")))


def test_psi_from_phi_exponential(grid32):
    x1, x2 = grid32.mesh()
    s = 0.3 * np.sin(x1) + 0.1 * np.cos(x2)
    spec = ModelSpec(gamma=3.0)
    psi = psi_from_phi(grid32, np.exp(s), spec)
    want = (2 / (spec.gamma - 1)) * gradient(grid32, s)
    assert np.max(np.abs(psi - want)) < 1e-8


def test_pressure_force(grid32):
    x1, _ = grid32.mesh()
    phi = 1 + 0.1 * np.sin(x1)
    spec = ModelSpec()
    f = pressure_force(grid32, phi, spec)
    want = 2 * spec.theta * phi * 0.1 * np.cos(x1)
    assert np.max(np.abs(f[0] - want)) < 1e-10


def test_initial_state_lift(grid32):
    x1, x2 = grid32.mesh()
    phi0 = 1 + 0.3 * np.sin(x1) * np.cos(x2)
    spec = ModelSpec()
    st = initial_state(grid32, phi0, np.zeros((2,) + grid32.shape), spec,
                       RegularizationParams(delta=0.01))
    assert np.allclose(st.phi, phi0 + 0.01)
    assert np.allclose(st.psi, 2 * gradient(grid32, phi0) / (phi0 + 0.01))
    st.validate(spec)


def test_initial_state_laplacian_only_carries_zero_psi(grid32):
    X, Y = grid32.centered_mesh()
    h = np.where(X**2 + Y**2 < 1, 1 - X**2 - Y**2, 0.0)
    st = initial_state(grid32, np.sqrt(h), np.zeros((2,) + grid32.shape),
                       ModelSpec.for_variant("LaplacianOnly"))
    assert not np.any(st.psi)
    st.validate(ModelSpec.for_variant("LaplacianOnly"))


def test_state_validate_rejects_vacuum_for_psi_variants(grid32):
    st = State(grid32, np.zeros(grid32.shape), np.zeros((2,) + grid32.shape),
               np.zeros((2,) + grid32.shape))
    with pytest.raises(ModelError, match="phi must be > 0"):
        st.validate(ModelSpec())


def test_regularization_params():
    with pytest.raises(ModelError, match="^delta"):
        RegularizationParams(delta=-1.0)
    assert RegularizationParams().floor_for(np.array([2.0])) == pytest.approx(2e-10)
    assert RegularizationParams(eps_vac=1e-3).floor_for(np.ones(1)) == 1e-3
