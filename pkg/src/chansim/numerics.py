"""Low-level numerics: stable trigonometric kernels, Hermitian log-determinants,
Bessel evaluation, and reproducible seeded random streams.

Everything in this module is pure except :class:`RandomStream`, which owns a
private generator state and must be confined to one task at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import j0 as _j0


class DomainError(ValueError):
    """Input lies outside the mathematical domain of the operation."""


class ContractViolation(ValueError):
    """Structural precondition broken (shape, symmetry, emptiness)."""


HERMITIAN_RTOL = 1e-12

# Switchover point below which the raw kernels use their (Laurent) series.
KERNEL_SERIES_CUTOFF = 1e-2
# Switchover for the combined brackets, whose direct evaluation cancels
# catastrophically much earlier than the raw kernels do.
BRACKET_SERIES_CUTOFF = 0.5


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    """True if ``m`` equals its conjugate transpose to relative tolerance."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = np.linalg.norm(m)
    if scale == 0.0:
        return True
    return np.linalg.norm(m - m.conj().T) <= rtol * scale


def hermitian_logdet2(m: np.ndarray) -> float:
    """Base-2 log-determinant of a Hermitian positive-definite matrix.

    Computed as the sum of log2 of the eigenvalues, which is the numerically
    robust route for the mutual-information determinants this package needs.

    Raises
    ------
    ContractViolation
        If ``m`` is not square Hermitian.
    DomainError
        If any eigenvalue is not strictly positive.
    """
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a):
        raise ContractViolation("matrix is not Hermitian to 1e-12 relative tolerance")
    w = np.linalg.eigvalsh(a)
    if w[0] <= 0.0:
        raise DomainError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return float(np.sum(np.log2(w)))


def bessel_j0(x) -> np.ndarray | float:
    """Bessel function of the first kind, order zero."""
    out = _j0(x)
    return float(out) if np.isscalar(x) else out


# ---------------------------------------------------------------------------
# Spherical trigonometric kernels
# ---------------------------------------------------------------------------

# Laurent/Taylor coefficients (even powers, constant term first), valid for
# |x| < KERNEL_SERIES_CUTOFF.  Pole terms are handled explicitly.
_S1 = (1.0, -1.0 / 6, 1.0 / 120, -1.0 / 5040)
_S2 = (-0.5, 1.0 / 24, -1.0 / 720, 1.0 / 40320)            # + 1/x^2
_S3 = (-1.0 / 6, 1.0 / 120, -1.0 / 5040, 1.0 / 362880)     # + 1/x^2
_S4 = (1.0 / 24, -1.0 / 720, 1.0 / 40320, -1.0 / 3628800)  # + 1/x^4 - 1/(2x^2)
_S5 = (1.0 / 120, -1.0 / 5040, 1.0 / 362880, -1.0 / 39916800)  # + 1/x^4 - 1/(6x^2)


def _even_poly(x2: np.ndarray, coeffs) -> np.ndarray:
    acc = np.zeros_like(x2)
    for c in reversed(coeffs):
        acc = acc * x2 + c
    return acc


def sphere_kernels(x) -> dict[str, np.ndarray | float]:
    """The five sin/cos power kernels entering every diffuse-field moment.

    Returns ``{"s1": sin x/x, "s2": cos x/x^2, "s3": sin x/x^3,
    "s4": cos x/x^4, "s5": sin x/x^5}`` with series evaluation below
    ``KERNEL_SERIES_CUTOFF`` so the removable part of each kernel stays
    accurate to better than 1e-12.  The kernels s2..s5 individually diverge
    at x = 0 (the divergence cancels only in combinations; see the bracket
    functions below) and evaluate to +inf there.

    Raises DomainError for negative arguments.
    """
    scalar = np.isscalar(x)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("kernel argument must be nonnegative")

    small = xa < KERNEL_SERIES_CUTOFF
    xs = np.where(small, 1.0, xa)  # safe denominator for the direct branch
    sin_x, cos_x = np.sin(xs), np.cos(xs)
    s1 = sin_x / xs
    s2 = cos_x / xs**2
    s3 = sin_x / xs**3
    s4 = cos_x / xs**4
    s5 = sin_x / xs**5

    if np.any(small):
        x2 = xa**2
        safe2 = np.where(xa > 0, x2, 1.0)
        inv2 = 1.0 / safe2
        inv4 = inv2 * inv2
        s1 = np.where(small, _even_poly(x2, _S1), s1)
        s2 = np.where(small, inv2 + _even_poly(x2, _S2), s2)
        s3 = np.where(small, inv2 + _even_poly(x2, _S3), s3)
        s4 = np.where(small, inv4 - 0.5 * inv2 + _even_poly(x2, _S4), s4)
        s5 = np.where(small, inv4 - inv2 / 6.0 + _even_poly(x2, _S5), s5)
        zero = small & (xa == 0.0)
        if np.any(zero):
            for arr in (s2, s3, s4, s5):
                arr[...] = np.where(zero, np.inf, arr)

    out = {"s1": s1, "s2": s2, "s3": s3, "s4": s4, "s5": s5}
    if scalar:
        out = {k: float(v) for k, v in out.items()}
    return out


# Combined brackets.  Direct evaluation subtracts large 1/x^2 and 1/x^4 terms,
# so each bracket switches to its own even Taylor series (terms through x^16)
# below BRACKET_SERIES_CUTOFF; worst-case truncation there is < 1e-18.
_TRANS_MEAN = (2 / 3, -2 / 15, 1 / 140, -1 / 5670, 1 / 399168, -1 / 43243200,
               1 / 6671808000, -1 / 1389404016000, 1 / 375447840768000)
_LONG_MEAN = (1 / 3, -1 / 30, 1 / 840, -1 / 45360, 1 / 3991680, -1 / 518918400,
              1 / 93405312000, -1 / 22230464256000, 1 / 6758061133824000)
_TRANS_SQ = (8 / 3, -4 / 15, 1 / 70, -1 / 2835, 1 / 199584, -1 / 21621600,
             1 / 3335904000, -1 / 694702008000, 1 / 187723920384000)
_LONG_SQ = (16 / 15, -4 / 105, 1 / 945, -1 / 62370, 1 / 6486480, -1 / 972972000,
            1 / 198486288000, -1 / 52797352608000, 1 / 17739910476288000)
_CROSS_T_SQ = (128 / 15, -32 / 35, 16 / 315, -8 / 6237, 1 / 54054, -1 / 5791500,
               1 / 886099500, -1 / 183324141000, 1 / 49277529100800)
_CROSS_L_SQ = (8 / 15, -4 / 105, 1 / 630, -1 / 31185, 1 / 2594592, -1 / 324324000,
               1 / 56710368000, -1 / 13199338152000, 1 / 3942202328064000)


def _bracket(x, direct, series_coeffs):
    scalar = np.isscalar(x)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("bracket argument must be nonnegative")
    small = xa < BRACKET_SERIES_CUTOFF
    xs = np.where(small, 1.0, xa)
    out = direct(xs)
    if np.any(small):
        out = np.where(small, _even_poly(xa**2, series_coeffs), out)
    return float(out) if scalar else out


def transverse_mean_bracket(x):
    """sin x/x + cos x/x^2 - sin x/x^3, stable down to x = 0 (limit 2/3)."""
    return _bracket(
        x,
        lambda t: np.sin(t) / t + np.cos(t) / t**2 - np.sin(t) / t**3,
        _TRANS_MEAN,
    )


def longitudinal_mean_bracket(x):
    """(sin x - x cos x)/x^3, stable down to x = 0 (limit 1/3)."""
    return _bracket(
        x,
        lambda t: (np.sin(t) - t * np.cos(t)) / t**3,
        _LONG_MEAN,
    )


def transverse_square_bracket(y):
    """4/3 + 2 sin y/y + 2 cos y/y^2 - 2 sin y/y^3 (limit 8/3 at y = 0)."""
    return _bracket(
        y,
        lambda t: 4 / 3 + 2 * np.sin(t) / t + 2 * np.cos(t) / t**2 - 2 * np.sin(t) / t**3,
        _TRANS_SQ,
    )


def longitudinal_square_bracket(y):
    """8/15 - 8 sin y/y^3 - 24 cos y/y^4 + 24 sin y/y^5 (limit 16/15)."""
    return _bracket(
        y,
        lambda t: 8 / 15 - 8 * np.sin(t) / t**3 - 24 * np.cos(t) / t**4
        + 24 * np.sin(t) / t**5,
        _LONG_SQ,
    )


def cross_transverse_square_bracket(y):
    """64/15 + 8 s1 + 16 s2 - 40 s3 - 72 s4 + 72 s5 at y (limit 128/15)."""
    return _bracket(
        y,
        lambda t: 64 / 15 + 8 * np.sin(t) / t + 16 * np.cos(t) / t**2
        - 40 * np.sin(t) / t**3 - 72 * np.cos(t) / t**4 + 72 * np.sin(t) / t**5,
        _CROSS_T_SQ,
    )


def cross_longitudinal_square_bracket(y):
    """4/15 - 2 s2 + 8 s3 + 18 s4 - 18 s5 at y (limit 8/15)."""
    return _bracket(
        y,
        lambda t: 4 / 15 - 2 * np.cos(t) / t**2 + 8 * np.sin(t) / t**3
        + 18 * np.cos(t) / t**4 - 18 * np.sin(t) / t**5,
        _CROSS_L_SQ,
    )


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------


@dataclass
class RandomStream:
    """Reproducible random source identified by a (seed, stream_id) pair.

    Identical pairs replay an identical bit stream; distinct ``stream_id``
    values give statistically independent streams (PCG64 seeded through a
    SeedSequence over both integers).  Gaussian variates use the Box-Muller
    transform applied to the uniform stream, so every consumer sees the same
    documented mapping from uniforms to normals.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence([int(self.seed) & (2**64 - 1),
                                     int(self.stream_id) & (2**64 - 1)])
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, offset: int) -> "RandomStream":
        """Independent stream derived by offsetting the stream id."""
        return RandomStream(self.seed, self.stream_id + int(offset))

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniform variates on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normal variates via Box-Muller on the uniform stream."""
        if size is None:
            return float(self.normal(1)[0])
        shape = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        u1 = self._gen.random(m)
        u2 = self._gen.random(m)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        ang = 2.0 * math.pi * u2
        z = np.concatenate([r * np.cos(ang), r * np.sin(ang)])[:n]
        return z.reshape(shape)

    def signs(self, size=None) -> np.ndarray | float:
        """Independent +-1 values with equal probability."""
        s = np.where(self._gen.random(size) < 0.5, -1.0, 1.0)
        return float(s) if size is None else s
