"""Sampled checks of the functional inequalities behind the energy estimates.

Each driver draws seeded random band-limited fields, evaluates both sides of
an inequality without its constant and reports the ratios.  The largest ratio
over the batch is the empirical constant.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grid import Grid2D, lebesgue, seminorm
from .lame import lame_elliptic_solve

INF = math.inf


class InequalityError(ValueError):
    pass


def _recip(x) -> Fraction:
    """1/x as an exact rational; infinity maps to 0."""
    if isinstance(x, str):
        x = float(x)
    if isinstance(x, float) and math.isinf(x):
        return Fraction(0)
    f = Fraction(x)
    if f <= 0:
        raise InequalityError(f"exponent must be positive, got {x}")
    return 1 / f


def _show(x) -> str:
    return "inf" if isinstance(x, float) and math.isinf(x) else str(x)


def gn_theta(p, q, r) -> Fraction:
    """Interpolation exponent of |h|_q <= C |grad h|_p^theta |h|_r^(1-theta) in two dimensions.

    theta = (1/r - 1/q) / (1/r - 1/p + 1/2), with the admissible ranges:
    p < 2: q between r and 2p/(2-p); p = 2: r <= q < inf; p > 2: r <= q <= inf.
    """
    ip, iq, ir = _recip(p), _recip(q), _recip(r)
    if not (ir > 0 and ir < 1):
        raise InequalityError(f"r must lie in (1, inf), got r={_show(r)}")
    if ip > 1:
        raise InequalityError(f"p must be >= 1, got p={_show(p)}")
    if ip > Fraction(1, 2):
        # p < 2; 1/p* = 1/p - 1/2 is the Sobolev endpoint
        istar = ip - Fraction(1, 2)
        lo, hi = (ir, istar) if ir >= istar else (istar, ir)
        if not (hi <= iq <= lo):
            star = "inf" if istar == 0 else str(1 / istar)
            raise InequalityError(
                f"p={_show(p)}<2 needs q between r={_show(r)} and 2p/(2-p)={star}, got q={_show(q)}")
    elif ip == Fraction(1, 2):
        if not (iq > 0 and iq <= ir):
            raise InequalityError(f"p=2 needs q in [r, inf) with r={_show(r)}, got q={_show(q)}")
    else:
        if not iq <= ir:
            raise InequalityError(f"p={_show(p)}>2 needs q in [r, inf] with r={_show(r)}, got q={_show(q)}")
    den = ir - ip + Fraction(1, 2)
    if den == 0:
        raise InequalityError("degenerate triple: 1/r - 1/p + 1/2 = 0")
    return (ir - iq) / den


# seeded fields --------------------------------------------------------------

class LCG64:
    """x <- a x + c mod 2^64 (Knuth's MMIX constants); top 53 bits give uniforms."""

    A = 6364136223846793005
    C = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = int(seed) & self.MASK

    def next_u64(self) -> int:
        self.state = (self.A * self.state + self.C) & self.MASK
        return self.state

    def uniform(self, size: int) -> np.ndarray:
        out = np.empty(size)
        for i in range(size):
            out[i] = ((self.next_u64() >> 11) + 0.5) / 9007199254740992.0
        return out

    def normal(self, size: int) -> np.ndarray:
        """Box-Muller on consecutive uniform pairs."""
        m = (size + 1) // 2
        u = self.uniform(2 * m).reshape(m, 2)
        rad = np.sqrt(-2.0 * np.log(u[:, 0]))
        z = np.concatenate([rad * np.cos(2 * np.pi * u[:, 1]), rad * np.sin(2 * np.pi * u[:, 1])])
        return z[:size]


def random_field(grid: Grid2D, rng: LCG64, components: int = 1, decay: float = 2.0) -> np.ndarray:
    """Zero-mean real field with Gaussian Fourier coefficients, |k| <= n/4, amplitude |k|^-decay.

    Wavenumbers are counted in modes (integer index), independent of the box length.
    """
    n = grid.n
    idx = np.fft.fftfreq(n, 1.0 / n)
    K1, K2 = np.meshgrid(idx, idx, indexing="ij")
    kk = np.hypot(K1, K2)
    band = (kk > 0) & (kk <= n / 4)
    amp = np.where(band, np.where(band, kk, 1.0) ** -decay, 0.0)
    out = np.empty((components, n, n))
    for c in range(components):
        z = rng.normal(2 * n * n)
        G = (z[: n * n] + 1j * z[n * n:]).reshape(n, n) * amp
        # Hermitian part so the inverse transform is exactly real
        Gr = np.conj(np.roll(G[::-1, ::-1], 1, axis=(0, 1)))
        F = 0.5 * (G + Gr)
        out[c] = np.fft.ifft2(F).real * n
    return out[0] if components == 1 else out


# reports --------------------------------------------------------------------

@dataclass
class InequalityReport:
    name: str
    lhs: list[float] = field(default_factory=list)
    rhs: list[float] = field(default_factory=list)
    skipped: int = 0

    @property
    def ratios(self) -> np.ndarray:
        return np.asarray(self.lhs) / np.asarray(self.rhs)

    @property
    def max_ratio(self) -> float:
        r = self.ratios
        return float(r.max()) if r.size else math.nan

    def add(self, lhs: float, rhs: float, floor: float = 1e-300) -> None:
        if rhs <= floor:
            self.skipped += 1
            return
        self.lhs.append(float(lhs))
        self.rhs.append(float(rhs))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_id", "lhs", "rhs", "ratio"])
            for i, (a, b) in enumerate(zip(self.lhs, self.rhs)):
                w.writerow([i, repr(a), repr(b), repr(a / b)])
            w.writerow(["max_ratio", "", "", repr(self.max_ratio)])


def _lp(grid: Grid2D, f: np.ndarray, p) -> float:
    return lebesgue(grid, f, float(p))


def gn_sides(grid: Grid2D, h: np.ndarray, p, q, r) -> tuple[float, float]:
    th = float(gn_theta(p, q, r))
    lhs = _lp(grid, h, q)
    rhs = seminorm(grid, h, 1, float(p)) ** th * _lp(grid, h, r) ** (1 - th)
    return lhs, rhs


def gn_verify(samples: int, p, q, r, seed: int, n: int = 64,
              box_length: float = 2 * math.pi) -> InequalityReport:
    gn_theta(p, q, r)  # admissibility
    grid = Grid2D(n, box_length)
    rng = LCG64(seed)
    rep = InequalityReport(f"gn(p={_show(p)},q={_show(q)},r={_show(r)})")
    for _ in range(samples):
        h = random_field(grid, rng)
        if not np.any(h):
            rep.skipped += 1
            continue
        rep.add(*gn_sides(grid, h, p, q, r))
    return rep


# commutator -----------------------------------------------------------------

COMMUTATOR_CHOICES = {
    "a2-binf": (2, 2, INF),   # (r, a, b)
    "ainf-b2": (2, INF, 2),
    "a3-b6": (2, 3, 6),
}


def _holder(r, a, b) -> None:
    if _recip(r) != _recip(a) + _recip(b):
        raise InequalityError(f"Hölder relation 1/r = 1/a + 1/b fails for r={_show(r)}, "
                              f"a={_show(a)}, b={_show(b)}")


def _tensor(grid: Grid2D, fh: np.ndarray, s: int):
    """Components of grad^s with binomial multiplicities (ordered index count)."""
    return [(math.comb(s, j), grid.ifft(fh * grid.multiplier(s - j, j))) for j in range(s + 1)]


def _tensor_mag(parts) -> np.ndarray:
    return np.sqrt(sum(w * c**2 for w, c in parts))


def _mag_lp(grid: Grid2D, mag: np.ndarray, p) -> float:
    p = float(p)
    if math.isinf(p):
        return float(mag.max())
    return float((np.sum(mag**p) * grid.cell_area) ** (1 / p))


def commutator_sides(grid: Grid2D, f: np.ndarray, g: np.ndarray, s: int, r, a, b,
                     form: str = "top-b") -> tuple[float, float]:
    """|D^s(fg) - f D^s g|_r against the right side of the chosen form.

    Both forms bound it by |grad f|_a |D^(s-1) g|_b plus a top-order term:
    ``top-b`` uses |D^s f|_b |g|_a and ``top-a`` uses |D^s f|_a |g|_b.
    """
    fh, gh = grid.fft(f), grid.fft(g)
    dfg = _tensor(grid, grid.fft(f * g), s)
    dg = _tensor(grid, gh, s)
    comm = [(w, c - f * d) for (w, c), (_, d) in zip(dfg, dg)]
    lhs = _mag_lp(grid, _tensor_mag(comm), r)
    grad_f = _mag_lp(grid, _tensor_mag(_tensor(grid, fh, 1)), a)
    low_g = _tensor_mag(_tensor(grid, gh, s - 1))
    top_f = _tensor_mag(_tensor(grid, fh, s))
    if form == "top-b":
        rhs = grad_f * _mag_lp(grid, low_g, b) + _mag_lp(grid, top_f, b) * _mag_lp(grid, np.abs(g), a)
    elif form == "top-a":
        rhs = grad_f * _mag_lp(grid, low_g, b) + _mag_lp(grid, top_f, a) * _mag_lp(grid, np.abs(g), b)
    else:
        raise InequalityError(f"unknown commutator form {form!r}; use top-b or top-a")
    return lhs, rhs


def commutator_verify(s: int, choice: str, samples: int, seed: int, form: str = "top-b",
                      n: int = 64, box_length: float = 2 * math.pi) -> InequalityReport:
    if s not in (1, 2):
        raise InequalityError(f"s must be 1 or 2, got {s}")
    if choice not in COMMUTATOR_CHOICES:
        raise InequalityError(f"unknown exponent choice {choice!r}; options {sorted(COMMUTATOR_CHOICES)}")
    r, a, b = COMMUTATOR_CHOICES[choice]
    _holder(r, a, b)
    grid = Grid2D(n, box_length)
    rng = LCG64(seed)
    rep = InequalityReport(f"commutator(s={s},{choice},{form})")
    for _ in range(samples):
        f = random_field(grid, rng)
        g = random_field(grid, rng)
        rep.add(*commutator_sides(grid, f, g, s, r, a, b, form))
    return rep


# Lame regularity --------------------------------------------------------------

def lame_sides(grid: Grid2D, F: np.ndarray, k: int, q, alpha: float, beta: float) -> tuple[float, float]:
    u = lame_elliptic_solve(grid, F, alpha, beta)
    return seminorm(grid, u, k + 2, float(q)), seminorm(grid, F, k, float(q))


def lame_regularity_verify(k: int, q, samples: int, seed: int, alpha: float = 1.0,
                           beta: float = 0.0, n: int = 64,
                           box_length: float = 2 * math.pi) -> InequalityReport:
    if k not in (0, 1):
        raise InequalityError(f"k must be 0 or 1, got {k}")
    if float(q) not in (2.0, 6.0):
        raise InequalityError(f"q must be 2 or 6, got {q}")
    if not (alpha > 0 and alpha + beta >= 0):
        raise InequalityError(f"need alpha>0, alpha+beta>=0 (alpha={alpha}, beta={beta})")
    grid = Grid2D(n, box_length)
    rng = LCG64(seed)
    rep = InequalityReport(f"lame(k={k},q={q},alpha={alpha},beta={beta})")
    for _ in range(samples):
        F = random_field(grid, rng, components=2)
        rep.add(*lame_sides(grid, F, k, q, alpha, beta))
    return rep
