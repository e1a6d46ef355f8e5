"""Periodic 2D grid, spectral differentiation and the norms used by the estimates.

Fields are plain numpy arrays whose last two axes are the grid axes
(axis -2 is x1, axis -1 is x2).  Scalars have shape ``(n, n)``, vectors
``(2, n, n)`` and tensors ``(2, 2, n, n)``; any leading axes are treated as
field components when norms are taken.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft


class FieldError(ValueError):
    """Raised for non-finite or malformed field input."""


def check_finite(f: np.ndarray, what: str = "field") -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        bad = int(np.size(f) - np.count_nonzero(np.isfinite(f)))
        raise FieldError(f"{what}: {bad} non-finite entries")
    return f


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on ``[0, box_length)^2`` with ``n`` points per axis."""

    n: int
    box_length: float = 2 * math.pi

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    @property
    def area(self) -> float:
        return self.box_length**2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nodes, self.nodes, indexing="ij")

    def centered_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates shifted so the box centre sits at the origin."""
        x1, x2 = self.mesh()
        half = self.box_length / 2
        return x1 - half, x2 - half

    # spectral machinery -------------------------------------------------

    @cached_property
    def k1(self) -> np.ndarray:
        return (2 * np.pi * sfft.fftfreq(self.n, self.spacing))[:, None]

    @cached_property
    def k2(self) -> np.ndarray:
        return (2 * np.pi * sfft.rfftfreq(self.n, self.spacing))[None, :]

    @cached_property
    def k_squared(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kmax = np.pi / self.spacing
        cut = 2.0 / 3.0 * kmax
        return (np.abs(self.k1) < cut) & (np.abs(self.k2) < cut)

    def multiplier(self, a: int, b: int) -> np.ndarray:
        """Fourier symbol of the mixed partial d1^a d2^b.

        Odd powers drop the Nyquist row/column so real input stays real.
        """
        k1 = self.k1.copy()
        k2 = self.k2.copy()
        if a % 2:
            k1[self.n // 2, 0] = 0.0
        if b % 2:
            k2[0, self.n // 2] = 0.0
        return (1j * k1) ** a * (1j * k2) ** b

    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.rfft2(f, axes=(-2, -1))

    def ifft(self, fh: np.ndarray) -> np.ndarray:
        return sfft.irfft2(fh, s=self.shape, axes=(-2, -1))

    def dealias(self, f: np.ndarray) -> np.ndarray:
        return self.ifft(self.fft(f) * self.dealias_mask)

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f) * self.cell_area)

    def mean(self, f: np.ndarray) -> np.ndarray:
        return np.mean(f, axis=(-2, -1))


# differentiation ---------------------------------------------------------

def partial(grid: Grid2D, f: np.ndarray, a: int, b: int) -> np.ndarray:
    if a + b > 4:
        raise ValueError(f"derivative order {a + b} exceeds 4")
    if a == b == 0:
        return np.array(f, dtype=float)
    return grid.ifft(grid.fft(f) * grid.multiplier(a, b))


def gradient(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    """Gradient along a new leading axis: scalar -> vector, vector u -> (d_i u_j)."""
    fh = grid.fft(f)
    return np.stack([grid.ifft(fh * grid.multiplier(1, 0)),
                     grid.ifft(fh * grid.multiplier(0, 1))])


def divergence(grid: Grid2D, u: np.ndarray) -> np.ndarray:
    if u.shape[0] != 2:
        raise FieldError(f"divergence needs a vector field, got shape {u.shape}")
    return grid.ifft(grid.fft(u[0]) * grid.multiplier(1, 0)
                     + grid.fft(u[1]) * grid.multiplier(0, 1))


def laplacian(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    return grid.ifft(-grid.k_squared * grid.fft(f))


def differentiate(grid: Grid2D, f, request):
    """Spectral derivative of ``f``.

    ``request`` is ``"gradient"``, ``"divergence"``, ``"laplacian"`` or a
    multi-index ``(a, b)`` meaning d1^a d2^b with ``a + b <= 4``.
    """
    f = check_finite(f)
    if request == "gradient":
        return gradient(grid, f)
    if request == "divergence":
        return divergence(grid, f)
    if request == "laplacian":
        return laplacian(grid, f)
    a, b = request
    return partial(grid, f, int(a), int(b))


def jacobian(grid: Grid2D, u: np.ndarray) -> np.ndarray:
    """``J[i, j] = d_i u_j``."""
    return gradient(grid, u)


def sym_gradient(grid: Grid2D, u: np.ndarray) -> np.ndarray:
    """Deformation tensor D(u) = (grad u + grad u^T) / 2."""
    g = jacobian(grid, check_finite(u))
    return 0.5 * (g + g.transpose(1, 0, 2, 3))


def vorticity(grid: Grid2D, u: np.ndarray) -> np.ndarray:
    u = check_finite(u)
    return grid.ifft(grid.fft(u[1]) * grid.multiplier(1, 0)
                     - grid.fft(u[0]) * grid.multiplier(0, 1))


def curl_defect(grid: Grid2D, psi: np.ndarray) -> float:
    """sup |d1 psi2 - d2 psi1|; zero for an exact gradient."""
    return float(np.max(np.abs(vorticity(grid, psi))))


# norms -------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    """One of ``lebesgue(p)``, ``seminorm(k, r)``, ``sobolev(s)``, ``sup``."""

    kind: str
    p: float = 2.0
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("lebesgue", "seminorm", "sobolev", "sup"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind in ("lebesgue", "seminorm") and not self.p >= 1:
            raise ValueError(f"exponent must be >= 1, got {self.p}")
        if self.k < 0:
            raise ValueError("derivative order must be nonnegative")

    @classmethod
    def lebesgue(cls, p: float) -> NormSpec:
        return cls("lebesgue", p=p)

    @classmethod
    def seminorm(cls, k: int, r: float) -> NormSpec:
        return cls("seminorm", p=r, k=k)

    @classmethod
    def sobolev(cls, s: int) -> NormSpec:
        return cls("sobolev", k=s)

    @classmethod
    def sup(cls) -> NormSpec:
        return cls("sup", p=math.inf)


def pointwise_magnitude(f: np.ndarray) -> np.ndarray:
    """Euclidean/Frobenius magnitude over all leading component axes."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        return np.abs(f)
    return np.sqrt(np.sum(f.reshape(-1, *f.shape[-2:]) ** 2, axis=0))


def lebesgue(grid: Grid2D, f: np.ndarray, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"L^p needs p >= 1, got {p}")
    mag = pointwise_magnitude(f)
    if math.isinf(p):
        return float(mag.max())
    return float((np.sum(mag**p) * grid.cell_area) ** (1.0 / p))


def sup_norm(f: np.ndarray) -> float:
    """Grid-sup approximation of the L^inf norm."""
    return float(pointwise_magnitude(f).max())


def derivative_energy(grid: Grid2D, f: np.ndarray, k: int) -> np.ndarray:
    """Pointwise |grad^k f|^2 over the full (ordered) derivative tensor."""
    f = np.asarray(f, dtype=float)
    if k == 0:
        return pointwise_magnitude(f) ** 2
    fh = grid.fft(f)
    acc = np.zeros(grid.shape)
    for j in range(k + 1):
        d = grid.ifft(fh * grid.multiplier(k - j, j))
        acc += math.comb(k, j) * np.sum(d.reshape(-1, *grid.shape) ** 2, axis=0)
    return acc


def seminorm(grid: Grid2D, f: np.ndarray, k: int, r: float) -> float:
    """|f|_{D^{k,r}} = |grad^k f|_{L^r}."""
    if k == 0:
        return lebesgue(grid, f, r)
    mag = np.sqrt(derivative_energy(grid, f, k))
    if math.isinf(r):
        return float(mag.max())
    return float((np.sum(mag**r) * grid.cell_area) ** (1.0 / r))


def sobolev(grid: Grid2D, f: np.ndarray, s: int) -> float:
    """||f||_{H^s} as (sum_{k<=s} |f|_{D^k}^2)^(1/2)."""
    total = sum(float(np.sum(derivative_energy(grid, f, k))) for k in range(s + 1))
    return math.sqrt(total * grid.cell_area)


def norm(grid: Grid2D, f: np.ndarray, spec: NormSpec) -> float:
    f = check_finite(f)
    if spec.kind == "sup":
        return sup_norm(f)
    if spec.kind == "lebesgue":
        return lebesgue(grid, f, spec.p)
    if spec.kind == "seminorm":
        return seminorm(grid, f, spec.k, spec.p)
    if spec.k == 0:
        return lebesgue(grid, f, 2)
    return sobolev(grid, f, spec.k)


def l6_d1_d2(grid: Grid2D, f: np.ndarray) -> float:
    """Mixed norm on L^6 ∩ D^1 ∩ D^2, realized as the sum of the three."""
    return lebesgue(grid, f, 6) + seminorm(grid, f, 1, 2) + seminorm(grid, f, 2, 2)


def l6_d1(grid: Grid2D, f: np.ndarray) -> float:
    return lebesgue(grid, f, 6) + seminorm(grid, f, 1, 2)


def l2_spectral(grid: Grid2D, f: np.ndarray) -> float:
    """L^2 norm from Fourier coefficients (Parseval), for cross-checking."""
    fh = sfft.fft2(np.asarray(f, dtype=float), axes=(-2, -1))
    return math.sqrt(float(np.sum(np.abs(fh) ** 2)) * grid.area / grid.n**4)


# far field ---------------------------------------------------------------

def seam_max(grid: Grid2D, f: np.ndarray, cells: int = 3) -> float:
    """Largest magnitude within ``cells`` nodes of the periodic seam.

    The seam sits at the box edge for fields built on centred coordinates.
    """
    mag = pointwise_magnitude(f)
    idx = np.r_[0:cells + 1, grid.n - cells:grid.n]
    return float(max(mag[idx, :].max(), mag[:, idx].max()))


def farfield_ok(grid: Grid2D, f: np.ndarray, tol: float = 1e-6, cells: int = 3) -> bool:
    return seam_max(grid, f, cells) < tol


# snapshots ---------------------------------------------------------------

def write_snapshot(path, grid: Grid2D, values: np.ndarray, name: str, t: float) -> None:
    header = {"n": grid.n, "box_length": grid.box_length, "name": name, "t": t}
    values = np.ascontiguousarray(values, dtype="<f8")
    if len(values.shape) > 2:
        header["components"] = int(np.prod(values.shape[:-2]))
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        fh.write(values.tobytes())


def read_snapshot(path) -> tuple[dict, np.ndarray]:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    data = np.frombuffer(raw[nl + 1:], dtype="<f8")
    n = header["n"]
    ncomp = data.size // (n * n)
    if ncomp * n * n != data.size:
        raise FieldError(f"{path}: payload of {data.size} values is not a multiple of n^2")
    shape = (n, n) if ncomp == 1 else (ncomp, n, n)
    return header, data.reshape(shape).copy()
