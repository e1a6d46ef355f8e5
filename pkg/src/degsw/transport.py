"""Characteristics flow map and the semi-Lagrangian phi / psi updates.

A step from time ``s`` to ``t`` traces each arrival node back along
dW/dtau = v(tau, W) with classical RK4, sampling ``v`` off-grid by Lagrange
interpolation (bicubic by default).  The divergence line integral needed by
the phi representation formula reuses the RK4 stage points with Simpson
weights.  psi is carried along the same characteristics by solving
dpsi/dtau = -B psi - grad div v with B frozen per substep, B[j, i] = d_j v_i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .grid import Grid2D, divergence, gradient, jacobian
from .interp import interpolate
from .model import ModelSpec


class CFLError(ValueError):
    def __init__(self, courant: float, advisory_dt: float):
        self.courant = courant
        self.advisory_dt = advisory_dt
        super().__init__(f"CFL violated: max|v| dt / h = {courant:.3g}; "
                         f"use dt <= {advisory_dt:.3e}")


class VelocityHistory:
    """Velocity samples at increasing times, linearly interpolated in between."""

    def __init__(self, grid: Grid2D, times, fields):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.fields = np.asarray(fields, dtype=float)
        if self.fields.shape != (len(self.times), 2) + grid.shape:
            raise ValueError(f"fields shape {self.fields.shape} does not match "
                             f"{len(self.times)} times on an n={grid.n} grid")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        self._cache: dict = {}

    @classmethod
    def constant(cls, grid: Grid2D, v: np.ndarray, t0: float = 0.0, t1: float = 1.0):
        return cls(grid, [t0, t1], np.stack([v, v]))

    def _locate(self, t: float) -> tuple[int, float]:
        ts = self.times
        if len(ts) == 1:
            return 0, 0.0
        tol = 1e-9 * max(1.0, abs(ts[-1]))
        if t < ts[0] - tol or t > ts[-1] + tol:
            raise ValueError(f"time {t} outside velocity history [{ts[0]}, {ts[-1]}]")
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        return i, float(np.clip(w, 0.0, 1.0))

    def _derived(self, key: str, i: int) -> np.ndarray:
        ck = (key, i)
        if ck not in self._cache:
            if len(self._cache) > 16:
                self._cache.pop(next(iter(self._cache)))
            v = self.fields[i]
            if key == "kin":
                val = np.concatenate([v, divergence(self.grid, v)[None]])
            else:
                J = jacobian(self.grid, v)
                gd = gradient(self.grid, J[0, 0] + J[1, 1])
                val = np.concatenate([J.reshape(4, *self.grid.shape), gd])
            self._cache[ck] = val
        return self._cache[ck]

    def _blend(self, key: str, t: float) -> np.ndarray:
        i, w = self._locate(t)
        a = self._derived(key, i)
        if w == 0.0 or len(self.times) == 1:
            return a
        b = self._derived(key, i + 1)
        if w == 1.0:
            return b
        return (1 - w) * a + w * b

    def at(self, t: float) -> np.ndarray:
        return self._blend("kin", t)[:2]

    def kinematics(self, t: float) -> np.ndarray:
        """(v1, v2, div v) at time t."""
        return self._blend("kin", t)

    def psi_coefficients(self, t: float) -> np.ndarray:
        """(B00, B01, B10, B11, f1, f2) with B[j, i] = d_j v_i and f = grad div v."""
        return self._blend("psi", t)

    def max_speed(self, s: float, t: float) -> float:
        lo, _ = self._locate(s)
        hi, w = self._locate(t)
        hi = min(hi + (1 if w > 0 else 0), len(self.times) - 1)
        sl = self.fields[lo:hi + 1]
        return float(np.sqrt(np.max(np.sum(sl**2, axis=1))))


@dataclass
class FlowMap:
    """Departure points W(s, t, x) for every arrival node x.

    ``departure`` is unwrapped (not reduced mod the box).  ``log_jacobian`` is
    the line integral of div v along each characteristic, ``propagator`` the
    affine psi map as a (n, n, 3, 3) field (None unless requested).
    """

    grid: Grid2D
    departure: np.ndarray
    span: tuple[float, float]
    log_jacobian: np.ndarray
    propagator: np.ndarray | None = None

    def wrapped(self) -> np.ndarray:
        return np.mod(self.departure, self.grid.box_length)


@numba.njit(cache=True)
def _expm3(M, out):
    """Batched 3x3 exponential: scaling and squaring around a Taylor series."""
    E = np.empty((3, 3))
    T = np.empty((3, 3))
    S = np.empty((3, 3))
    for p in range(M.shape[0]):
        nrm = 0.0
        for i in range(3):
            r = 0.0
            for j in range(3):
                r += abs(M[p, i, j])
            nrm = max(nrm, r)
        s = 0
        if nrm > 0.5:
            s = int(math.ceil(math.log2(nrm / 0.5)))
        scale = 2.0 ** (-s)
        for i in range(3):
            for j in range(3):
                E[i, j] = 1.0 if i == j else 0.0
                T[i, j] = E[i, j]
        for k in range(1, 16):
            for i in range(3):
                for j in range(3):
                    acc = 0.0
                    for l in range(3):
                        acc += T[i, l] * M[p, l, j]
                    S[i, j] = acc * scale / k
            for i in range(3):
                for j in range(3):
                    T[i, j] = S[i, j]
                    E[i, j] += S[i, j]
        for _ in range(s):
            for i in range(3):
                for j in range(3):
                    acc = 0.0
                    for l in range(3):
                        acc += E[i, l] * E[l, j]
                    S[i, j] = acc
            for i in range(3):
                for j in range(3):
                    E[i, j] = S[i, j]
        for i in range(3):
            for j in range(3):
                out[p, i, j] = E[i, j]


def batched_expm3(M: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(M.reshape(-1, 3, 3), dtype=float)
    out = np.empty_like(flat)
    _expm3(flat, out)
    return out.reshape(M.shape)


def _sample(hist: VelocityHistory, what: str, t: float, pts, width: int, on_grid: bool):
    f = hist.kinematics(t) if what == "kin" else hist.psi_coefficients(t)
    if on_grid:
        return f
    return interpolate(f, pts, hist.grid.spacing, width)


def backtrace(hist: VelocityHistory, t: float, s: float, substeps: int = 1,
              width: int = 4, cfl_max: float = 1.0, with_psi: bool = False) -> FlowMap:
    """Trace every node back from time ``t`` to ``s`` with ``substeps`` RK4 steps."""
    if s > t:
        raise ValueError(f"departure time {s} after arrival time {t}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    grid = hist.grid
    tau = (t - s) / substeps
    vmax = hist.max_speed(s, t)
    courant = vmax * tau / grid.spacing
    if courant > cfl_max:
        raise CFLError(courant, 0.9 * cfl_max * grid.spacing / vmax)
    x1, x2 = grid.mesh()
    P = np.stack([x1, x2])
    logj = np.zeros(grid.shape)
    acc = None
    if with_psi:
        acc = np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy()
    if tau == 0.0:
        return FlowMap(grid, P, (s, t), logj, acc)
    ta = t
    for step in range(substeps):
        tm, tb = ta - 0.5 * tau, ta - tau
        k1 = _sample(hist, "kin", ta, P, width, step == 0)
        P2 = P - 0.5 * tau * k1[:2]
        k2 = _sample(hist, "kin", tm, P2, width, False)
        P3 = P - 0.5 * tau * k2[:2]
        k3 = _sample(hist, "kin", tm, P3, width, False)
        P4 = P - tau * k3[:2]
        k4 = _sample(hist, "kin", tb, P4, width, False)
        foot = P - tau / 6 * (k1[:2] + 2 * k2[:2] + 2 * k3[:2] + k4[:2])
        logj += tau / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if with_psi:
            c = _sample(hist, "psi", tm, 0.5 * (P + foot), width, False)
            M = np.zeros(grid.shape + (3, 3))
            M[..., 0, 0] = -tau * c[0]
            M[..., 0, 1] = -tau * c[1]
            M[..., 1, 0] = -tau * c[2]
            M[..., 1, 1] = -tau * c[3]
            M[..., 0, 2] = -tau * c[4]
            M[..., 1, 2] = -tau * c[5]
            acc = np.matmul(acc, batched_expm3(M))
        P = foot
        ta = tb
    return FlowMap(grid, P, (s, t), logj, acc)


def phi_from_map(phi_s: np.ndarray, fmap: FlowMap, spec: ModelSpec, width: int = 4) -> np.ndarray:
    vals = interpolate(phi_s, fmap.departure, fmap.grid.spacing, width)
    vals = np.maximum(vals, 0.0)
    return vals * np.exp(-0.5 * (spec.gamma - 1) * fmap.log_jacobian)


def psi_from_map(psi_s: np.ndarray, fmap: FlowMap, width: int = 4) -> np.ndarray:
    if fmap.propagator is None:
        raise ValueError("flow map was built without the psi propagator")
    foot = interpolate(psi_s, fmap.departure, fmap.grid.spacing, width)
    G = fmap.propagator
    out = np.empty_like(foot)
    out[0] = G[..., 0, 0] * foot[0] + G[..., 0, 1] * foot[1] + G[..., 0, 2]
    out[1] = G[..., 1, 0] * foot[0] + G[..., 1, 1] * foot[1] + G[..., 1, 2]
    return out


def advance_phi(phi_s: np.ndarray, hist: VelocityHistory, s: float, t: float,
                spec: ModelSpec, substeps: int = 1, width: int = 4,
                cfl_max: float = 1.0) -> np.ndarray:
    """phi(t, x) = phi_s(W(s,t,x)) exp(-(gamma-1)/2 * int_s^t div v along W)."""
    if np.any(phi_s < 0):
        raise ValueError("phi_s must be nonnegative")
    fmap = backtrace(hist, t, s, substeps, width, cfl_max)
    return phi_from_map(phi_s, fmap, spec, width)


def advance_psi(psi_s: np.ndarray, hist: VelocityHistory, s: float, t: float,
                spec: ModelSpec | None = None, substeps: int = 1, width: int = 4,
                cfl_max: float = 1.0) -> np.ndarray:
    """Semi-Lagrangian solve of psi_t + (v.grad) psi + B psi + grad div v = 0."""
    fmap = backtrace(hist, t, s, substeps, width, cfl_max, with_psi=True)
    return psi_from_map(psi_s, fmap, width)
