import math

import numpy as np
import pytest

from degsw.grid import Grid2D, sobolev
from degsw.model import ModelSpec, psi_from_phi
from degsw.monitors import (MONITOR_COLUMNS, blowup_functionals, c_ladder_report,
                            conservation_checks, datum_constant, monitor)
from degsw.picard import Trajectory, picard_solve
from degsw.model import initial_state


def _steady(g, phi, u, m=11, dt=0.01):
    times = np.arange(m) * dt
    psi = np.zeros((2,) + g.shape)
    return Trajectory(g, times, np.broadcast_to(phi, (m,) + g.shape).copy(),
                      np.broadcast_to(psi, (m, 2) + g.shape).copy(),
                      np.broadcast_to(u, (m, 2) + g.shape).copy())


def test_zero_solution(grid32):
    traj = _steady(grid32, np.ones(grid32.shape), np.zeros((2,) + grid32.shape))
    rep = blowup_functionals(traj, ModelSpec())
    assert not np.any(rep.cum_du_inf) and not np.any(rep.cum_du_inf_d16) and not np.any(rep.psi_l6)
    assert rep.bounded


def test_shear_deformation_closed_form(grid64):
    x1, x2 = grid64.mesh()
    u = np.stack([np.sin(x2), np.zeros_like(x2)])
    traj = _steady(grid64, np.ones(grid64.shape), u)
    rep = blowup_functionals(traj, ModelSpec())
    assert np.allclose(rep.cum_du_inf, 0.5 * traj.times, rtol=1e-12, atol=1e-15)
    assert rep.nondecreasing()


def test_saint_venant_uses_full_gradient(grid64):
    x1, x2 = grid64.mesh()
    # rotation-like sample: sup|grad u| = 1 while sup|D(u)| = 3/4
    u = np.stack([-np.sin(x2), 0.5 * np.sin(x1)])
    traj = _steady(grid64, np.ones(grid64.shape), u)
    d = blowup_functionals(traj, ModelSpec())
    g = blowup_functionals(traj, ModelSpec.for_variant("SaintVenant"))
    assert g.functional == "grad_u" and d.functional == "D_u"
    assert g.cum_du_inf[-1] == pytest.approx(4 / 3 * d.cum_du_inf[-1], rel=1e-6)


def test_ceiling_flag(grid32):
    x1, x2 = grid32.mesh()
    u = 50 * np.stack([np.sin(x2), np.sin(x1)])
    traj = _steady(grid32, np.ones(grid32.shape), u, m=21, dt=0.1)
    rep = blowup_functionals(traj, ModelSpec(), ceiling=10.0)
    assert rep.flagged_at is not None and not rep.bounded


def test_ladder_zero_data(grid32):
    traj = _steady(grid32, np.zeros(grid32.shape), np.zeros((2,) + grid32.shape))
    lad = c_ladder_report(traj, ModelSpec())
    assert lad.c0 == 2.0
    assert not np.any(lad.groups)


def test_ladder_constant_phi(grid32):
    traj = _steady(grid32, np.full(grid32.shape, 0.8), np.zeros((2,) + grid32.shape))
    lad = c_ladder_report(traj, ModelSpec())
    want = 0.8**2 + sobolev(grid32, traj.phi[0], 3) ** 2
    assert lad.groups[4] == pytest.approx(want, rel=1e-12)
    assert lad.c0 == pytest.approx(2 + 0.8 + 0.8 * math.sqrt(grid32.area), rel=1e-12)


def test_ladder_sup_entries_order_free():
    g = Grid2D(16)
    x1, x2 = g.mesh()
    st = initial_state(g, 1 + 0.2 * np.sin(x1), 0.2 * np.stack([np.sin(x2), np.cos(x1)]), ModelSpec())
    traj, _ = picard_solve(st, ModelSpec(), 0.02, 2e-3, tol=1e-10)
    a = c_ladder_report(traj, ModelSpec())
    b = c_ladder_report(traj.reversed(), ModelSpec())
    assert np.allclose(a.sup_parts, b.sup_parts, rtol=1e-12)
    assert a.finite and np.all(np.isfinite(a.c)) and 0 < a.T_star <= 0.02


def test_datum_constant_counts_every_slot(grid32):
    x1, _ = grid32.mesh()
    phi0 = 1 + 0.1 * np.sin(x1)
    spec = ModelSpec()
    psi0 = psi_from_phi(grid32, phi0, spec)
    c0 = datum_constant(grid32, phi0, psi0, np.zeros((2,) + grid32.shape))
    assert c0 > 2 + 1.1 + sobolev(grid32, phi0, 3)


def test_conservation_zero_velocity(grid32):
    x1, x2 = grid32.mesh()
    phi = 1 + 0.2 * np.sin(x1) * np.cos(x2)
    traj = _steady(grid32, phi, np.zeros((2,) + grid32.shape))
    spec = ModelSpec()
    traj.psi[:] = psi_from_phi(grid32, phi, spec)
    rep = conservation_checks(traj, spec)
    assert rep.mass_drift == 0.0
    assert rep.psi_curl_defect < 1e-12 and rep.psi_phi_consistency == 0.0
    assert rep.positivity_min == pytest.approx(0.8, abs=1e-3)


def test_monitor_csv(tmp_path, grid32):
    traj = _steady(grid32, np.ones(grid32.shape), np.zeros((2,) + grid32.shape), m=4)
    monitor(traj, ModelSpec()).write_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0].split(",") == MONITOR_COLUMNS
    assert len(lines) == 5
