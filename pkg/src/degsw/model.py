"""Equation of state, viscous-model variants and the (phi, psi, u) reformulation."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid2D, check_finite, curl_defect, divergence, gradient, jacobian, laplacian

# Rounding noise below this is treated as exact vacuum before taking powers.
VACUUM_NOISE = 1e-14


class Variant(str, enum.Enum):
    FULL_Q = "FullQ"
    GENT = "Gent"
    MARCHE_BN = "MarcheBN"
    SAINT_VENANT = "SaintVenant"
    LAPLACIAN_ONLY = "LaplacianOnly"


# (alpha, beta, gamma) pinned by each shallow-water variant; None = free.
_PINNED = {
    Variant.FULL_Q: (None, None, None),
    Variant.GENT: (0.5, 0.0, 2.0),
    Variant.MARCHE_BN: (1.0, 2.0, 2.0),
    # div(h grad U)/h = lap U + psi . grad U, so L = -lap.
    Variant.SAINT_VENANT: (1.0, -1.0, 2.0),
    # h lap U / h = lap U with Q = 0.
    Variant.LAPLACIAN_ONLY: (1.0, -1.0, 2.0),
}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    gamma: float = 2.0
    A: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    variant: Variant = Variant.FULL_Q

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.gamma > 1:
            raise ModelError(f"gamma: adiabatic exponent must satisfy gamma > 1, got {self.gamma}")
        if not self.A > 0:
            raise ModelError(f"A: pressure constant must be positive, got {self.A}")
        a, b, g = _PINNED[self.variant]
        for name, want in (("alpha", a), ("beta", b), ("gamma", g)):
            if want is not None and getattr(self, name) != want:
                raise ModelError(
                    f"{name}: variant {self.variant.value} requires {name}={want}, "
                    f"got {getattr(self, name)}")
        if self.variant in (Variant.FULL_Q, Variant.GENT, Variant.MARCHE_BN):
            if not (self.alpha > 0 and self.alpha + self.beta >= 0):
                raise ModelError(
                    f"alpha/beta: need alpha>0, alpha+beta>=0 (got alpha={self.alpha}, "
                    f"beta={self.beta})")

    @classmethod
    def for_variant(cls, variant, A: float = 1.0, **kw) -> ModelSpec:
        """Spec with the variant's pinned coefficients filled in."""
        variant = Variant(variant)
        a, b, g = _PINNED[variant]
        vals = dict(alpha=kw.pop("alpha", 1.0), beta=kw.pop("beta", 0.0),
                    gamma=kw.pop("gamma", 2.0))
        for name, want in (("alpha", a), ("beta", b), ("gamma", g)):
            if want is not None:
                vals[name] = want
        if kw:
            raise TypeError(f"unexpected arguments {sorted(kw)}")
        return cls(A=A, variant=variant, **vals)

    @property
    def theta(self) -> float:
        return theta(self)

    @property
    def uses_psi(self) -> bool:
        return self.variant is not Variant.LAPLACIAN_ONLY

    def with_(self, **kw) -> ModelSpec:
        return replace(self, **kw)


@dataclass(frozen=True)
class RegularizationParams:
    delta: float = 0.0
    eps_vac: float | None = None  # None -> 1e-10 * max(phi0)

    def __post_init__(self):
        if self.delta < 0:
            raise ModelError(f"delta: vacuum lift must be >= 0, got {self.delta}")
        if self.eps_vac is not None and not self.eps_vac > 0:
            raise ModelError(f"eps_vac: floor must be > 0, got {self.eps_vac}")

    def floor_for(self, phi: np.ndarray) -> float:
        if self.eps_vac is not None:
            return self.eps_vac
        return max(1e-10 * float(np.max(phi)), 1e-300)


@dataclass
class State:
    grid: Grid2D
    phi: np.ndarray
    psi: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def copy(self) -> State:
        return State(self.grid, self.phi.copy(), self.psi.copy(), self.u.copy(), self.t)

    def validate(self, spec: ModelSpec, curl_tol: float = 1e-6) -> None:
        check_finite(self.phi, "phi")
        check_finite(self.psi, "psi")
        check_finite(self.u, "u")
        if spec.uses_psi and not np.all(self.phi > 0):
            raise ModelError(f"phi must be > 0 for variant {spec.variant.value}")
        if np.any(self.phi < 0):
            raise ModelError("phi must be nonnegative")
        defect = curl_defect(self.grid, self.psi)
        if spec.uses_psi and defect > curl_tol:
            raise ModelError(f"psi curl defect {defect:.3e} exceeds {curl_tol:.1e}")


def theta(spec: ModelSpec) -> float:
    if not spec.gamma > 1:
        raise ModelError("theta requires gamma > 1")
    return spec.A * spec.gamma / (spec.gamma - 1)


def _clean(f: np.ndarray) -> np.ndarray:
    f = check_finite(f)
    if np.any(f < -VACUUM_NOISE):
        raise ModelError(f"negative input (min {f.min():.3e})")
    return np.where(f < 0, 0.0, f)


def convert(f: np.ndarray, direction: str, spec: ModelSpec) -> np.ndarray:
    """Pointwise power laws: ``rho->phi``, ``phi->rho`` or ``rho->pressure``."""
    f = _clean(f)
    g = spec.gamma
    if direction == "rho->phi":
        return f ** ((g - 1) / 2)
    if direction == "phi->rho":
        return f ** (2 / (g - 1))
    if direction == "rho->pressure":
        return spec.A * f**g
    raise ValueError(f"unknown direction {direction!r}")


def psi_from_phi(grid: Grid2D, phi: np.ndarray, spec: ModelSpec,
                 reg: RegularizationParams | None = None) -> np.ndarray:
    reg = reg or RegularizationParams()
    phi = _clean(phi)
    floor = reg.floor_for(phi)
    return (2 / (spec.gamma - 1)) * gradient(grid, phi) / np.maximum(phi, floor)


def lame_apply(grid: Grid2D, u: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """L u = -alpha lap u - (alpha + beta) grad div u."""
    return (-spec.alpha * laplacian(grid, u)
            - (spec.alpha + spec.beta) * gradient(grid, divergence(grid, u)))


def q_matrix(grid: Grid2D, v: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """Q(v) as a (2, 2, n, n) field, indexed Q[i, j] with J[i, j] = d_i v_j."""
    if spec.variant is Variant.LAPLACIAN_ONLY:
        return np.zeros((2, 2) + grid.shape)
    J = jacobian(grid, v)
    if spec.variant is Variant.SAINT_VENANT:
        return J
    Q = spec.alpha * (J + J.transpose(1, 0, 2, 3))
    div = J[0, 0] + J[1, 1]
    Q[0, 0] += spec.beta * div
    Q[1, 1] += spec.beta * div
    return Q


def q_apply(grid: Grid2D, psi: np.ndarray, v: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """psi . Q(v): (psi Q)_j = sum_i psi_i Q_ij."""
    Q = q_matrix(grid, v, spec)
    return np.einsum("inm,ijnm->jnm", psi, Q)


def pressure_force(grid: Grid2D, phi: np.ndarray, spec: ModelSpec) -> np.ndarray:
    """2 theta phi grad phi, taken as theta grad(phi^2) (smoother near vacuum)."""
    return theta(spec) * gradient(grid, phi * phi)


def advective(grid: Grid2D, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(v . grad) w for vector w."""
    J = jacobian(grid, w)
    return np.einsum("inm,ijnm->jnm", v, J)


def initial_state(grid: Grid2D, phi0: np.ndarray, u0: np.ndarray, spec: ModelSpec,
                  reg: RegularizationParams | None = None) -> State:
    """State at t=0 with the vacuum lift applied: phi0 + delta, psi from the unlifted gradient.

    Variants without psi carry it as zero.
    """
    reg = reg or RegularizationParams()
    phi0 = _clean(phi0)
    lifted = phi0 + reg.delta
    if not spec.uses_psi:
        # psi never enters this variant and is undefined on the vacuum set
        psi0 = np.zeros((2,) + grid.shape)
    elif reg.delta > 0:
        psi0 = (2 / (spec.gamma - 1)) * gradient(grid, phi0) / lifted
    else:
        psi0 = psi_from_phi(grid, phi0, spec, reg)
    return State(grid, lifted, psi0, np.array(u0, dtype=float), 0.0)
