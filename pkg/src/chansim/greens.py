"""Free-space dyadic propagation tensor and the deterministic (line-of-sight)
polarization channel block built from its real part."""

from __future__ import annotations

import math

import numpy as np

from .geometry import CavityEnvironment, PairGeometry, PairTable

AXES = ("x", "y", "z")


class SingularityError(ValueError):
    """Field requested at zero separation."""


def dyadic_green(pair: PairGeometry, k: float) -> np.ndarray:
    """Free-space dyadic propagation tensor for one element pair.

    Returns the 3x3 complex tensor

        (1 - j/kR - 1/(kR)^2) I e^{-jkR}/(4 pi R)
      + (3/(kR)^2 + 3j/kR - 1) rr e^{-jkR}/(4 pi R)

    with rr the outer product of the pair's direction cosines.
    """
    R = pair.distance
    if R <= 0:
        raise SingularityError("propagation tensor is singular at zero separation")
    kr = k * R
    phase = np.exp(-1j * kr) / (4.0 * math.pi * R)
    iso = (1.0 - 1j / kr - 1.0 / kr**2) * phase
    lon = (3.0 / kr**2 + 3.0j / kr - 1.0) * phase
    rr = np.outer(pair.cosines, pair.cosines)
    return iso * np.eye(3) + lon * rr


def coherent_block(pair: PairGeometry, env: CavityEnvironment) -> np.ndarray:
    """Line-of-sight channel tensor: field_scale times Re of the dyadic tensor.

    The deterministic part of the channel keeps only the real part of the
    propagation tensor; the full complex tensor stays available through
    :func:`dyadic_green` for diagnostics.
    """
    return env.field_scale * np.real(dyadic_green(pair, env.wavenumber))


def coherent_blocks(table: PairTable, env: CavityEnvironment) -> np.ndarray:
    """Vectorised :func:`coherent_block` over a pair table.

    Returns an array of shape (3, 3, N_r, N_s).
    """
    R = table.distance
    if np.any(R <= 0):
        raise SingularityError("pair table contains zero separations")
    k = env.wavenumber
    kr = k * R
    iso, lon = _real_brackets(kr, R)
    out = np.einsum("pq,mn->pqmn", np.eye(3), iso)
    out += np.einsum("mnp,mnq,mn->pqmn", table.cosines, table.cosines, lon)
    return env.field_scale * out


def coherent_transverse(R, k):
    """Isotropic-part scalar of the line-of-sight tensor:
    cos(kR)/4piR - sin(kR)/4pi k R^2 - cos(kR)/4pi k^2 R^3."""
    iso, _ = _real_brackets(np.asarray(k * R, dtype=float), np.asarray(R, dtype=float))
    return iso if np.ndim(R) else float(iso)


def coherent_longitudinal(R, k):
    """Outer-product-part scalar of the line-of-sight tensor:
    3cos(kR)/4pi k^2 R^3 + 3sin(kR)/4pi k R^2 - cos(kR)/4piR."""
    _, lon = _real_brackets(np.asarray(k * R, dtype=float), np.asarray(R, dtype=float))
    return lon if np.ndim(R) else float(lon)


def _real_brackets(kr, R):
    c, s = np.cos(kr), np.sin(kr)
    amp = 1.0 / (4.0 * math.pi * R)
    iso = amp * (c - s / kr - c / kr**2)
    lon = amp * (3.0 * c / kr**2 + 3.0 * s / kr - c)
    return iso, lon
