"""Linearize-and-iterate construction of regular solutions.

Sweep 0 takes the heat flow of u0 as the advecting field.  Sweep k+1 freezes
v = u^k, transports phi and psi along the characteristics of v and solves the
momentum equation u_t + L u = -v.grad v - 2 theta phi grad phi + psi.Q(v)
with a Fourier-symbol Crank-Nicolson step.  Sweeps stop once the Gamma
distance between consecutive iterates drops below ``tol``.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid2D, check_finite, divergence, gradient, l6_d1, lebesgue, sobolev
from .lame import parabolic_step
from .model import (ModelSpec, RegularizationParams, State, advective, initial_state,
                    lame_apply, pressure_force, q_apply)
from .transport import VelocityHistory, backtrace, phi_from_map, psi_from_map

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, msg: str, step: int | None = None):
        self.step = step
        super().__init__(msg if step is None else f"{msg} (step {step})")


@dataclass
class Trajectory:
    grid: Grid2D
    times: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    u: np.ndarray

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.steps else 0.0

    def state(self, i: int) -> State:
        return State(self.grid, self.phi[i], self.psi[i], self.u[i], float(self.times[i]))

    def final(self) -> State:
        return self.state(-1)

    def velocity(self) -> VelocityHistory:
        return VelocityHistory(self.grid, self.times, self.u)

    def reversed(self) -> Trajectory:
        return Trajectory(self.grid, self.times[-1] - self.times[::-1], self.phi[::-1],
                          self.psi[::-1], self.u[::-1])

    @classmethod
    def allocate(cls, grid: Grid2D, times) -> Trajectory:
        m = len(times)
        return cls(grid, np.asarray(times, dtype=float), np.empty((m,) + grid.shape),
                   np.empty((m, 2) + grid.shape), np.empty((m, 2) + grid.shape))

    @classmethod
    def frozen(cls, state: State, u_levels: np.ndarray, times) -> Trajectory:
        """phi, psi held at their initial values, u given per level (the sweep-0 iterate)."""
        m = len(times)
        return cls(state.grid, np.asarray(times, dtype=float),
                   np.broadcast_to(state.phi, (m,) + state.phi.shape),
                   np.broadcast_to(state.psi, (m,) + state.psi.shape), u_levels)


def time_levels(horizon: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if horizon < dt:
        raise ValueError(f"horizon {horizon} shorter than dt {dt}")
    steps = int(round(horizon / dt))
    if abs(steps * dt - horizon) > 1e-9 * horizon:
        raise ValueError(f"horizon {horizon} is not a multiple of dt {dt}")
    return np.arange(steps + 1) * dt


def heat_initialize(grid: Grid2D, u0: np.ndarray, horizon: float, dt: float) -> np.ndarray:
    """Samples of exp(t lap) u0 at every step time, shape (steps+1, 2, n, n)."""
    u0 = check_finite(u0, "u0")
    times = time_levels(horizon, dt)
    uh = grid.fft(u0)
    decay = np.exp(-np.multiply.outer(times, grid.k_squared))
    return grid.ifft(uh[None] * decay[:, None])


def momentum_rhs(grid: Grid2D, v: np.ndarray, phi: np.ndarray, psi: np.ndarray,
                 spec: ModelSpec) -> np.ndarray:
    """-v.grad v - 2 theta phi grad phi + psi.Q(v), dealiased."""
    rhs = -advective(grid, v, v) - pressure_force(grid, phi, spec)
    if spec.uses_psi:
        rhs += q_apply(grid, psi, v, spec)
    return grid.dealias(rhs)


def linearized_solve(initial: State, v: VelocityHistory, spec: ModelSpec,
                     horizon: float, dt: float, width: int = 4,
                     scheme: str = "crank-nicolson", cfl_max: float = 1.0) -> Trajectory:
    """Solve the problem linearized about the known velocity ``v`` on [0, horizon]."""
    grid = initial.grid
    times = time_levels(horizon, dt)
    mismatch = float(np.max(np.abs(v.at(0.0) - initial.u)))
    if mismatch > 1e-12 * max(1.0, float(np.max(np.abs(initial.u)))):
        log.debug("advecting field differs from u0 at t=0 by %.3e", mismatch)
    traj = Trajectory.allocate(grid, times)
    traj.phi[0], traj.psi[0], traj.u[0] = initial.phi, initial.psi, initial.u
    rhs_prev = momentum_rhs(grid, v.at(0.0), initial.phi, initial.psi, spec)
    for n in range(len(times) - 1):
        t0, t1 = times[n], times[n + 1]
        fmap = backtrace(v, t1, t0, 1, width, cfl_max, with_psi=spec.uses_psi)
        phi = phi_from_map(traj.phi[n], fmap, spec, width)
        psi = psi_from_map(traj.psi[n], fmap, width) if spec.uses_psi else traj.psi[n]
        rhs = momentum_rhs(grid, v.at(t1), phi, psi, spec)
        forcing = 0.5 * (rhs_prev + rhs) if scheme == "crank-nicolson" else rhs
        u = parabolic_step(grid, traj.u[n], forcing, dt, spec.alpha, spec.beta, scheme)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi)) and np.all(np.isfinite(u))):
            raise SolverError("non-finite intermediate", step=n + 1)
        traj.phi[n + 1], traj.psi[n + 1], traj.u[n + 1] = phi, psi, u
        rhs_prev = rhs
    return traj


# distances ----------------------------------------------------------------

def _check_pair(a: Trajectory, b: Trajectory) -> None:
    if a.grid != b.grid:
        raise ValueError("trajectories live on different grids")
    if a.times.shape != b.times.shape or np.max(np.abs(a.times - b.times)) > 1e-12:
        raise ValueError("trajectories have different step times")


def gamma_series(a: Trajectory, b: Trajectory, metric: str = "picard") -> np.ndarray:
    """Per-level distance; the Gamma distance is its running sup.

    ``picard``: ||dphi||_1^2 + |dpsi|_2^2 + ||du||_1^2.
    ``stability``: ||dphi||_2^2 + |dpsi|_{L6∩D1}^2 + ||du||_2^2.
    """
    _check_pair(a, b)
    g = a.grid
    out = np.empty(len(a.times))
    for i in range(len(a.times)):
        dphi = a.phi[i] - b.phi[i]
        dpsi = a.psi[i] - b.psi[i]
        du = a.u[i] - b.u[i]
        if metric == "picard":
            out[i] = sobolev(g, dphi, 1) ** 2 + lebesgue(g, dpsi, 2) ** 2 + sobolev(g, du, 1) ** 2
        elif metric == "stability":
            out[i] = sobolev(g, dphi, 2) ** 2 + l6_d1(g, dpsi) ** 2 + sobolev(g, du, 2) ** 2
        else:
            raise ValueError(f"unknown metric {metric!r}")
    return out


def gamma_distance(a: Trajectory, b: Trajectory, metric: str = "picard") -> float:
    return float(np.max(gamma_series(a, b, metric)))


# residual -----------------------------------------------------------------

def nonlinear_residual(traj: Trajectory, spec: ModelSpec) -> dict[str, float]:
    """L2 residual of each nonlinear equation, max over interior time levels.

    Time derivatives are centred differences; the advecting field is u itself.
    """
    if len(traj.times) < 3:
        raise ValueError("need at least 3 time levels for a centred residual")
    g = traj.grid
    res = {"phi": 0.0, "psi": 0.0, "u": 0.0}
    for i in range(1, len(traj.times) - 1):
        h2 = traj.times[i + 1] - traj.times[i - 1]
        phi, psi, u = traj.phi[i], traj.psi[i], traj.u[i]
        div = divergence(g, u)
        phi_t = (traj.phi[i + 1] - traj.phi[i - 1]) / h2
        r_phi = phi_t + np.sum(u * gradient(g, phi), axis=0) + 0.5 * (spec.gamma - 1) * phi * div
        psi_t = (traj.psi[i + 1] - traj.psi[i - 1]) / h2
        r_psi = psi_t + gradient(g, np.sum(u * psi, axis=0)) + gradient(g, div)
        u_t = (traj.u[i + 1] - traj.u[i - 1]) / h2
        r_u = u_t + advective(g, u, u) + pressure_force(g, phi, spec) + lame_apply(g, u, spec)
        if spec.uses_psi:
            r_u -= q_apply(g, psi, u, spec)
        res["phi"] = max(res["phi"], lebesgue(g, r_phi, 2))
        if spec.uses_psi:
            res["psi"] = max(res["psi"], lebesgue(g, r_psi, 2))
        res["u"] = max(res["u"], lebesgue(g, r_u, 2))
    return res


# iteration ----------------------------------------------------------------

@dataclass
class SweepRecord:
    k: int
    gamma_distance: float
    residual_phi: float
    residual_psi: float
    residual_u: float
    wall_time: float


@dataclass
class IterationTrace:
    sweeps: list[SweepRecord] = field(default_factory=list)
    converged: bool = False
    T_star_used: float = 0.0

    @property
    def gammas(self) -> np.ndarray:
        return np.array([s.gamma_distance for s in self.sweeps])

    def ratios(self) -> np.ndarray:
        """Gamma_k / Gamma_{k-1} for k >= 2."""
        g = self.gammas
        if len(g) < 2:
            return np.array([])
        with np.errstate(divide="ignore", invalid="ignore"):
            return g[1:] / g[:-1]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "gamma_distance", "residual_phi", "residual_psi", "residual_u",
                        "wall_time_s"])
            for s in self.sweeps:
                w.writerow([s.k, repr(s.gamma_distance), repr(s.residual_phi),
                            repr(s.residual_psi), repr(s.residual_u), f"{s.wall_time:.6f}"])


def picard_solve(initial: State, spec: ModelSpec, horizon: float, dt: float,
                 tol: float = 1e-8, max_sweeps: int = 30, width: int = 4,
                 scheme: str = "crank-nicolson", cfl_max: float = 1.0,
                 metric: str = "picard", residuals: bool = True,
                 timer=time.perf_counter) -> tuple[Trajectory, IterationTrace]:
    """Iterate linearized solves until the Gamma distance falls below ``tol``.

    Returns the last iterate and the trace; non-convergence is flagged in the
    trace rather than raised.
    """
    grid = initial.grid
    times = time_levels(horizon, dt)
    prev = Trajectory.frozen(initial, heat_initialize(grid, initial.u, horizon, dt), times)
    trace = IterationTrace(T_star_used=float(times[-1]))
    for k in range(1, max_sweeps + 1):
        start = timer()
        cur = linearized_solve(initial, prev.velocity(), spec, horizon, dt, width, scheme, cfl_max)
        gd = gamma_distance(cur, prev, metric)
        if residuals and len(times) >= 3:
            r = nonlinear_residual(cur, spec)
        else:
            r = {"phi": math.nan, "psi": math.nan, "u": math.nan}
        trace.sweeps.append(SweepRecord(k, gd, r["phi"], r["psi"], r["u"], timer() - start))
        log.info("sweep %d: gamma=%.3e residual_u=%.3e", k, gd, r["u"])
        prev = cur
        if gd < tol:
            trace.converged = True
            break
    return prev, trace


def self_map_change(traj: Trajectory, initial: State, spec: ModelSpec, width: int = 4,
                    scheme: str = "crank-nicolson") -> float:
    """Gamma distance between ``traj`` and one more sweep fed with its own u."""
    nxt = linearized_solve(initial, traj.velocity(), spec, float(traj.times[-1]), traj.dt,
                           width, scheme)
    return gamma_distance(nxt, traj)


@dataclass
class ContinuationResult:
    deltas: list[float]
    trajectories: list[Trajectory]
    traces: list[IterationTrace]
    distances: list[float]
    all_converged: bool


def delta_continuation(grid: Grid2D, phi0: np.ndarray, u0: np.ndarray, spec: ModelSpec, deltas,
                       horizon: float, dt: float, reg: RegularizationParams | None = None,
                       **solve_kw) -> ContinuationResult:
    """Solve for each vacuum lift phi0 + delta and measure consecutive distances."""
    deltas = [float(d) for d in deltas]
    if not deltas or any(d <= 0 for d in deltas):
        raise ValueError("deltas must be positive")
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be decreasing")
    reg = reg or RegularizationParams()
    trajs, traces = [], []
    for d in deltas:
        st = initial_state(grid, phi0, u0, spec, RegularizationParams(d, reg.eps_vac))
        traj, trace = picard_solve(st, spec, horizon, dt, **solve_kw)
        trajs.append(traj)
        traces.append(trace)
        if not trace.converged:
            log.warning("delta=%g did not converge; partial report", d)
            break
    dists = [gamma_distance(a, b) for a, b in zip(trajs, trajs[1:])]
    return ContinuationResult(deltas[:len(trajs)], trajs, traces, dists,
                              all(t.converged for t in traces) and len(trajs) == len(deltas))
