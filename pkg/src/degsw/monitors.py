"""Blow-up functionals, conservation checks and the a-priori norm ladder.

Everything here reads a finished :class:`~degsw.picard.Trajectory` and never
mutates it.  Time derivatives are rebuilt from the stored levels with
``np.gradient`` (centred inside, second-order one-sided at the ends).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .grid import Grid2D, curl_defect, jacobian, lebesgue, seminorm, sup_norm
from .model import ModelSpec, Variant, convert, psi_from_phi
from .picard import Trajectory

DEFAULT_CEILING = 1e3

# c_i = C^{a_i} c0^{b_i}, i = 1..4
LADDER_EXPONENTS = ((0.5, 1.0), (2.0, 2.5), (23 / 4, 25 / 4), (71 / 4, 75 / 4))


def _operator_norm(M: np.ndarray) -> np.ndarray:
    """Largest singular value of a (2, 2, n, n) matrix field, pointwise."""
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    return np.sqrt(0.5 * (s + np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))))


def deformation(grid: Grid2D, u: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """D(u) for the viscous variants, grad u for Saint-Venant."""
    J = jacobian(grid, u)
    if spec.variant is Variant.SAINT_VENANT:
        return J
    return 0.5 * (J + J.transpose(1, 0, 2, 3))


@dataclass
class BlowupReport:
    times: np.ndarray
    psi_l6: np.ndarray
    du_inf: np.ndarray
    du_d16: np.ndarray
    cum_du_inf: np.ndarray
    cum_du_inf_d16: np.ndarray
    functional: str
    ceiling: float = DEFAULT_CEILING
    flagged_at: float | None = None

    @property
    def bounded(self) -> bool:
        return self.flagged_at is None and bool(np.all(np.isfinite(self.cum_du_inf_d16)))

    def nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.cum_du_inf) >= 0) and np.all(np.diff(self.cum_du_inf_d16) >= 0))


def blowup_functionals(traj: Trajectory, spec: ModelSpec,
                       ceiling: float = DEFAULT_CEILING) -> BlowupReport:
    """|psi|_6, and the running integrals of sup|D u| and sup|D u| + |grad D u|_6."""
    g = traj.grid
    m = len(traj.times)
    psi6 = np.array([lebesgue(g, traj.psi[i], 6) for i in range(m)])
    dinf = np.empty(m)
    d16 = np.empty(m)
    for i in range(m):
        D = deformation(g, traj.u[i], spec)
        dinf[i] = float(_operator_norm(D).max())
        d16[i] = seminorm(g, D, 1, 6)
    cum = cumulative_trapezoid(dinf, traj.times, initial=0.0)
    cum16 = cumulative_trapezoid(dinf + d16, traj.times, initial=0.0)
    # trapezoid sums of nonnegative samples; clip the last-bit noise
    cum = np.maximum.accumulate(cum)
    cum16 = np.maximum.accumulate(cum16)
    over = (psi6 > ceiling) | (cum16 > ceiling)
    flagged = float(traj.times[np.argmax(over)]) if over.any() else None
    name = "grad_u" if spec.variant is Variant.SAINT_VENANT else "D_u"
    return BlowupReport(traj.times.copy(), psi6, dinf, d16, cum, cum16, name, ceiling, flagged)


# norm ladder ---------------------------------------------------------------

def _dk_sq(grid: Grid2D, f: np.ndarray, k: int) -> float:
    """|grad^k f|_2^2 by Parseval; components of f summed."""
    fh = grid.fft(f)
    w = np.full(grid.k2.shape, 2.0)
    w[..., 0] = 1.0
    if grid.n % 2 == 0:
        w[..., -1] = 1.0
    spec = np.abs(fh) ** 2 * (grid.k_squared**k * w)
    return float(np.sum(spec)) * grid.area / grid.n**4


def _h_sq(grid: Grid2D, f: np.ndarray, s: int) -> float:
    return sum(_dk_sq(grid, f, k) for k in range(s + 1))


@dataclass
class CLadderReport:
    groups: np.ndarray          # six measured left-hand sides
    sup_parts: np.ndarray       # unweighted sup contributions per group
    c0: float
    implied_C: np.ndarray       # per-group minimal C
    C: float
    c: np.ndarray               # c1..c4 from the implied C
    T_star: float
    endpoint_flag: str = "u_t, u_tt, phi_t at the end levels are one-sided (lower accuracy)"

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.groups)) and math.isfinite(self.c0))


def datum_constant(grid: Grid2D, phi0: np.ndarray, psi0: np.ndarray, u0: np.ndarray,
                   phi_inf: float = 0.0) -> float:
    """2 + phi_inf + |phi0|_inf + ||phi0 - phi_inf||_3 + |psi0|_{L6∩D1∩D2} + ||u0||_3."""
    psi_part = lebesgue(grid, psi0, 6) + math.sqrt(_dk_sq(grid, psi0, 1)) + math.sqrt(_dk_sq(grid, psi0, 2))
    return (2.0 + phi_inf + sup_norm(phi0) + math.sqrt(_h_sq(grid, phi0 - phi_inf, 3))
            + psi_part + math.sqrt(_h_sq(grid, u0, 3)))


def _implied(group: float, c0: float, a: float, b: float) -> float:
    # group <= c_i^2 = C^{2a} c0^{2b}
    if group <= 0:
        return 0.0
    return (math.sqrt(group) / c0**b) ** (1.0 / a)


def c_ladder_report(traj: Trajectory, spec: ModelSpec, phi_inf: float = 0.0,
                    horizon_T: float | None = None) -> CLadderReport:
    g = traj.grid
    t = traj.times
    m = len(t)
    if m < 3:
        raise ValueError("c-ladder needs at least 3 time levels")
    u_t = np.gradient(traj.u, t, axis=0, edge_order=2)
    u_tt = np.gradient(u_t, t, axis=0, edge_order=2)
    phi_t = np.gradient(traj.phi, t, axis=0, edge_order=2)
    phi_tt = np.gradient(phi_t, t, axis=0, edge_order=2)
    psi_t = np.gradient(traj.psi, t, axis=0, edge_order=2)
    psi_tt = np.gradient(psi_t, t, axis=0, edge_order=2)

    def series(fun):
        return np.array([fun(i) for i in range(m)])

    def integ(y):
        return float(trapezoid(y, t))

    ud = {k: series(lambda i, k=k: _dk_sq(g, traj.u[i], k)) for k in range(5)}
    utd = {k: series(lambda i, k=k: _dk_sq(g, u_t[i], k)) for k in range(4)}
    uttd = {k: series(lambda i, k=k: _dk_sq(g, u_tt[i], k)) for k in range(2)}

    s1 = ud[0] + ud[1]
    g1 = s1.max() + integ(ud[1] + ud[2] + utd[0])
    s2 = ud[2] + utd[0]
    g2 = s2.max() + integ(ud[3] + utd[1])
    s3 = ud[3] + utd[1]
    g3 = s3.max() + integ(ud[4] + utd[2] + uttd[0])
    s4 = utd[2] + ud[4] + uttd[0]
    g4 = float((t * s4).max()) + integ(t * (uttd[1] + utd[3]))

    s5 = series(lambda i: sup_norm(traj.phi[i]) ** 2 + _h_sq(g, traj.phi[i] - phi_inf, 3)
                + _h_sq(g, phi_t[i], 2) + _dk_sq(g, phi_tt[i], 0))
    g5 = s5.max() + integ(series(lambda i: _h_sq(g, phi_tt[i], 1)))
    s6 = series(lambda i: sup_norm(traj.psi[i]) ** 2
                + (lebesgue(g, traj.psi[i], 6) + math.sqrt(_dk_sq(g, traj.psi[i], 1))
                   + math.sqrt(_dk_sq(g, traj.psi[i], 2))) ** 2
                + _h_sq(g, psi_t[i], 1))
    g6 = s6.max() + integ(series(lambda i: _dk_sq(g, psi_tt[i], 0)))

    groups = np.array([g1, g2, g3, g4, g5, g6])
    sups = np.array([s1.max(), s2.max(), s3.max(), 0.0, s5.max(), s6.max()])
    c0 = datum_constant(g, traj.phi[0], traj.psi[0], traj.u[0], phi_inf)
    exps = list(LADDER_EXPONENTS) + [LADDER_EXPONENTS[3]] * 2
    implied = np.array([_implied(gi, c0, a, b) for gi, (a, b) in zip(groups, exps)])
    C = float(implied.max()) if implied.size else 0.0
    c = np.array([C**a * c0**b for a, b in LADDER_EXPONENTS])
    T = float(t[-1]) if horizon_T is None else horizon_T
    with np.errstate(over="ignore"):
        T_star = min(T, float((1.0 + c[2]) ** -8))
    return CLadderReport(groups, sups, c0, implied, C, c, T_star)


# conservation -------------------------------------------------------------

@dataclass
class ConservationReport:
    times: np.ndarray
    mass: np.ndarray
    mass_drift_series: np.ndarray
    curl_series: np.ndarray
    consistency_series: np.ndarray
    min_phi_series: np.ndarray

    @property
    def mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass_drift_series)))

    @property
    def psi_curl_defect(self) -> float:
        return float(np.max(self.curl_series))

    @property
    def psi_phi_consistency(self) -> float:
        return float(np.nanmax(self.consistency_series)) if np.any(np.isfinite(self.consistency_series)) else math.nan

    @property
    def positivity_min(self) -> float:
        return float(np.min(self.min_phi_series))

    def as_dict(self) -> dict[str, float]:
        return {"mass_drift": self.mass_drift, "psi_curl_defect": self.psi_curl_defect,
                "psi_phi_consistency": self.psi_phi_consistency,
                "positivity_min": self.positivity_min}


def conservation_checks(traj: Trajectory, spec: ModelSpec) -> ConservationReport:
    """Relative drift of int rho, curl defect and phi-consistency of psi, min phi."""
    g = traj.grid
    m = len(traj.times)
    mass = np.array([g.integrate(convert(np.maximum(traj.phi[i], 0.0), "phi->rho", spec))
                     for i in range(m)])
    drift = (mass - mass[0]) / mass[0] if mass[0] != 0 else np.zeros(m)
    curl = np.array([curl_defect(g, traj.psi[i]) for i in range(m)])
    if spec.uses_psi:
        cons = np.array([lebesgue(g, traj.psi[i] - psi_from_phi(g, traj.phi[i], spec), 2)
                         for i in range(m)])
    else:
        cons = np.full(m, math.nan)
    mins = traj.phi.reshape(m, -1).min(axis=1)
    return ConservationReport(traj.times.copy(), mass, drift, curl, cons, mins)


MONITOR_COLUMNS = ["t", "psi_l6", "cum_Du_inf", "cum_Du_inf_d16", "mass_drift", "curl_defect",
                   "consistency", "min_phi"]


@dataclass
class MonitorSeries:
    blowup: BlowupReport
    conservation: ConservationReport
    extra: dict = field(default_factory=dict)

    def rows(self):
        b, c = self.blowup, self.conservation
        for i, t in enumerate(b.times):
            yield [t, b.psi_l6[i], b.cum_du_inf[i], b.cum_du_inf_d16[i], c.mass_drift_series[i],
                   c.curl_series[i], c.consistency_series[i], c.min_phi_series[i]]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(MONITOR_COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])


def monitor(traj: Trajectory, spec: ModelSpec, ceiling: float = DEFAULT_CEILING) -> MonitorSeries:
    return MonitorSeries(blowup_functionals(traj, spec, ceiling), conservation_checks(traj, spec))
