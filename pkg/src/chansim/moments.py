"""Closed-form statistics of the diffuse polarization kernel, eigenmode
spacing parameters, per-pair channel moments, and an independent plane-wave
Monte Carlo estimator used to validate the closed forms."""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import CavityEnvironment, PairGeometry, PairTable
from .greens import AXES, coherent_block, coherent_blocks
from .numerics import (
    DomainError,
    RandomStream,
    cross_longitudinal_square_bracket,
    cross_transverse_square_bracket,
    longitudinal_mean_bracket,
    longitudinal_square_bracket,
    transverse_mean_bracket,
    transverse_square_bracket,
)


class DegenerateMomentError(ValueError):
    """Moment combination vanished where a ratio of moments is required."""


class PrecisionWarning(UserWarning):
    """Monte Carlo ensemble too small for the requested comparison."""


def worker_count() -> int:
    """Worker cap for internally parallel Monte Carlo (CHANSIM_THREADS)."""
    raw = os.environ.get("CHANSIM_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = min(4, os.cpu_count() or 1)
    return n


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def _check_volume(V) -> None:
    if np.any(np.asarray(V) <= 0):
        raise DomainError("cavity volume must be positive")


def copolar_transverse_moments(kr, V) -> dict[str, np.ndarray | float]:
    """Mean, second moment, and variance of the transverse co-polar kernel
    (the xx and yy components) at dimensionless separation kr."""
    _check_volume(V)
    mean = transverse_mean_bracket(kr) / (2.0 * V)
    second = 9.0 / (128.0 * V**2) * transverse_square_bracket(2.0 * np.asarray(kr, dtype=float))
    if np.isscalar(kr):
        second = float(second)
    return {"mean": mean, "second_moment": second, "variance": second - mean**2}


def copolar_longitudinal_moments(kr, V) -> dict[str, np.ndarray | float]:
    """Mean, second moment, and variance of the longitudinal co-polar kernel
    (the zz component)."""
    _check_volume(V)
    mean = longitudinal_mean_bracket(kr) / V
    second = 3.0 / (16.0 * V**2) * longitudinal_square_bracket(2.0 * np.asarray(kr, dtype=float))
    if np.isscalar(kr):
        second = float(second)
    return {"mean": mean, "second_moment": second, "variance": second - mean**2}


def crosspolar_variances(kr, V) -> dict[str, np.ndarray | float]:
    """Variances of the zero-mean cross-polar kernels.

    ``variance_xy`` covers the xy and yx components; ``variance_xz`` covers
    xz, yz, zx, and zy.
    """
    _check_volume(V)
    y = 2.0 * np.asarray(kr, dtype=float)
    vxy = cross_transverse_square_bracket(y) / (128.0 * V**2)
    vxz = cross_longitudinal_square_bracket(y) / (8.0 * V**2)
    if np.isscalar(kr):
        vxy, vxz = float(vxy), float(vxz)
    return {"variance_xy": vxy, "variance_xz": vxz}


@dataclass(frozen=True)
class MomentSet:
    """All nine kernel moments at one separation, indexed [p][q] over x,y,z."""

    kr: float
    mean: np.ndarray           # (3, 3)
    second_moment: np.ndarray  # (3, 3)
    variance: np.ndarray       # (3, 3)


def closed_form_moments(kr: float, V: float) -> MomentSet:
    """Assemble the full 3x3 closed-form moment tensor at one separation."""
    t = copolar_transverse_moments(kr, V)
    l = copolar_longitudinal_moments(kr, V)
    c = crosspolar_variances(kr, V)
    mean = np.zeros((3, 3))
    var = np.empty((3, 3))
    mean[0, 0] = mean[1, 1] = t["mean"]
    mean[2, 2] = l["mean"]
    var[:] = c["variance_xz"]
    var[0, 1] = var[1, 0] = c["variance_xy"]
    var[0, 0] = var[1, 1] = t["variance"]
    var[2, 2] = l["variance"]
    second = var + mean**2
    return MomentSet(float(kr), mean, second, var)


# ---------------------------------------------------------------------------
# Eigenmode spacing and channel-moment scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralParams:
    """Eigenmode bookkeeping for the diffuse field.

    ``spacing`` is the mean eigenvalue spacing 2 pi^2/(kV), ``loss`` the
    normalized modal loss width k^3 V/(2 pi^2 Q), and ``kernel_scale`` the
    factor pi Q/k^2 multiplying the diffuse kernel in the channel.
    """

    spacing: float
    loss: float
    kernel_scale: float


def spectral_params(env: CavityEnvironment) -> SpectralParams:
    k = env.wavenumber
    V = env.volume
    Q = env.quality_factor
    return SpectralParams(
        spacing=2.0 * math.pi**2 / (k * V),
        loss=k**3 * V / (2.0 * math.pi**2 * Q),
        kernel_scale=math.pi * Q / k**2,
    )


@dataclass(frozen=True)
class PairChannelMoments:
    """First and second-order statistics of one polarization entry."""

    mean_los: float
    mean_nlos: float
    variance: float


def channel_moment_params(pair: PairGeometry, env: CavityEnvironment
                          ) -> dict[tuple[str, str], PairChannelMoments]:
    """Per-polarization channel moments for one element pair.

    The deterministic mean comes from the line-of-sight tensor, the diffuse
    mean and variance from the kernel moments scaled by pi Q/k^2, all
    multiplied by the environment's field constant.
    """
    coh = coherent_block(pair, env)
    scale = spectral_params(env).kernel_scale * env.field_scale
    kr = env.wavenumber * pair.distance
    t = copolar_transverse_moments(kr, env.volume)
    l = copolar_longitudinal_moments(kr, env.volume)
    c = crosspolar_variances(kr, env.volume)
    out = {}
    for i, p in enumerate(AXES):
        for j, q in enumerate(AXES):
            if p == q:
                m = l if p == "z" else t
                nlos, var = scale * m["mean"], scale**2 * m["variance"]
            else:
                key = "variance_xy" if {p, q} == {"x", "y"} else "variance_xz"
                nlos, var = 0.0, scale**2 * c[key]
            out[(p, q)] = PairChannelMoments(float(coh[i, j]), float(nlos), float(var))
    return out


@dataclass(frozen=True, eq=False)
class ChannelMomentTables:
    """Vectorised channel moments over a pair table.

    Arrays are shaped (3, 3, N_r, N_s); ``kfactor_c`` holds the per-pair
    deterministic-to-diffuse power ratio of the transverse co-polar entry.
    """

    coherent: np.ndarray
    nlos_mean: np.ndarray
    variance: np.ndarray
    kfactor_c: np.ndarray


def channel_moment_tables(table: PairTable, env: CavityEnvironment) -> ChannelMomentTables:
    kr = env.wavenumber * table.distance
    V = env.volume
    scale = spectral_params(env).kernel_scale * env.field_scale
    coh = coherent_blocks(table, env)

    t = copolar_transverse_moments(kr, V)
    l = copolar_longitudinal_moments(kr, V)
    c = crosspolar_variances(kr, V)

    shape = (3, 3) + table.shape
    nlos = np.zeros(shape)
    var = np.empty(shape)
    var[:] = scale**2 * c["variance_xz"]
    var[0, 1] = var[1, 0] = scale**2 * c["variance_xy"]
    var[0, 0] = var[1, 1] = scale**2 * t["variance"]
    var[2, 2] = scale**2 * l["variance"]
    nlos[0, 0] = nlos[1, 1] = scale * t["mean"]
    nlos[2, 2] = scale * l["mean"]

    den = nlos[0, 0] ** 2 + var[0, 0]
    if np.any(den <= 0):
        raise DegenerateMomentError("transverse kernel power vanished")
    kc = coh[0, 0] ** 2 / den
    return ChannelMomentTables(coh, nlos, var, kc)


def kfactor_constant(pair: PairGeometry, env: CavityEnvironment, axis: str = "x") -> float:
    """Deterministic-to-diffuse power ratio c for one co-polar component.

    c = (k^4 / pi^2 Q^2) * E[los^2] / (E[D_pp]^2 + V[D_pp]); mixing weights
    K/(c+K) and c/(c+K) then hand an exact K-factor to the mixed channel.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    m = channel_moment_params(pair, env)[(axis, axis)]
    den = m.mean_nlos**2 + m.variance
    if den <= 0:
        raise DegenerateMomentError("kernel power vanished; K-factor undefined")
    return m.mean_los**2 / den


def kfactor_weights(K: float, c) -> tuple:
    """Amplitude weights (w_los, w_nlos) of the K-factor mixture.

    Supports scalar or array c; K may be infinite.
    """
    if K is None:
        raise ValueError("K is required; use sample mode 'unmixed' instead")
    if math.isinf(K):
        like = np.ones_like(np.asarray(c, dtype=float))
        return (like if np.ndim(c) else 1.0, 0.0 * like if np.ndim(c) else 0.0)
    if K < 0:
        raise DomainError("K-factor must be nonnegative")
    carr = np.asarray(c, dtype=float)
    den = carr + K
    w_los = np.sqrt(np.divide(K, den, out=np.zeros_like(carr), where=den > 0))
    w_nlos = np.sqrt(np.divide(carr, den, out=np.ones_like(carr), where=den > 0))
    if np.ndim(c) == 0:
        return float(w_los), float(w_nlos)
    return w_los, w_nlos


# ---------------------------------------------------------------------------
# Plane-wave Monte Carlo estimator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OracleMoments:
    """Empirical kernel statistics from the plane-wave ensemble.

    All arrays are (3, 3) over polarization pairs; standard errors follow the
    usual large-sample formulas (mean: s/sqrt(n); variance: via the fourth
    central moment).
    """

    kr: float
    volume: float
    n_waves: int
    n_trials: int
    mean: np.ndarray
    variance: np.ndarray
    se_mean: np.ndarray
    se_variance: np.ndarray

    def z_mean(self, closed: MomentSet) -> np.ndarray:
        return (self.mean - closed.mean) / self.se_mean

    def z_variance(self, closed: MomentSet) -> np.ndarray:
        return (self.variance - closed.variance) / self.se_variance


def _polarization_factors(psi, phi, u):
    """Direction-independent polarization factors of one plane wave."""
    sin_th = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    cpsi, spsi = np.cos(psi), np.sin(psi)
    cphi, sphi = np.cos(phi), np.sin(phi)
    fx = -cpsi * sphi - spsi * cphi * u
    fy = cpsi * cphi - spsi * sphi * u
    fz = spsi * sin_th
    return fx, fy, fz


def _oracle_chunk(kr, V, n_waves, stream, n_chunk, amplitude):
    """Per-trial kernel products for one chunk of independent ensembles."""
    shape = (n_chunk, n_waves)
    two_pi = 2.0 * math.pi
    psi = two_pi * stream.uniform(shape)
    phi = two_pi * stream.uniform(shape)
    beta = two_pi * stream.uniform(shape)
    # elevation drawn with the solid-angle (sin theta) measure
    u = 2.0 * stream.uniform(shape) - 1.0
    if amplitude == "fixed":
        a = stream.signs(shape) * math.sqrt(2.0 / (n_waves * V))
    elif amplitude == "gaussian":
        a = stream.normal(shape) * math.sqrt(2.0 / (n_waves * V))
    else:
        raise ValueError("amplitude must be 'fixed' or 'gaussian'")

    fx, fy, fz = _polarization_factors(psi, phi, u)
    phase_a = np.cos(beta)                # reference point at the origin
    phase_b = np.cos(kr * u + beta)       # second point at separation kr along z

    psis_a = [(a * f * phase_a).sum(axis=1) for f in (fx, fy, fz)]
    psis_b = [(a * f * phase_b).sum(axis=1) for f in (fx, fy, fz)]
    prods = np.empty((n_chunk, 3, 3))
    for i in range(3):
        for j in range(3):
            prods[:, i, j] = psis_a[i] * psis_b[j]
    return prods


def planewave_moments(kr: float, V: float, n_waves: int, n_trials: int,
                      stream: RandomStream, amplitude: str = "fixed",
                      chunk: int = 128) -> OracleMoments:
    """Empirical moments of the kernel products from explicit plane waves.

    Each trial synthesizes one random superposition of ``n_waves`` plane
    waves (polarization and azimuth uniform on [0, 2pi), elevation with the
    solid-angle measure, phase uniform, amplitude magnitude
    sqrt(2/(n_waves V)) with random sign) and records the nine products of
    field components at two points separated by ``kr`` along z.

    Chunks of trials run on the worker pool; each chunk owns a deterministic
    substream, so results are bit-identical for any worker count.
    """
    if kr < 0:
        raise DomainError("separation must be nonnegative")
    _check_volume(V)
    if n_waves < 1000 or n_trials < 1000:
        warnings.warn(
            f"ensemble ({n_waves} waves x {n_trials} trials) is below the "
            "10^3 x 10^3 floor; standard errors will be loose",
            PrecisionWarning, stacklevel=2)

    n_chunks = (n_trials + chunk - 1) // chunk
    samples = np.empty((n_trials, 3, 3))

    def run(ci: int) -> None:
        lo = ci * chunk
        hi = min(lo + chunk, n_trials)
        sub = stream.substream(1 + ci)
        samples[lo:hi] = _oracle_chunk(kr, V, n_waves, sub, hi - lo, amplitude)

    workers = worker_count()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_chunks)))
    else:
        for ci in range(n_chunks):
            run(ci)

    n = n_trials
    mean = samples.mean(axis=0)
    centered = samples - mean
    m2 = (centered**2).sum(axis=0) / (n - 1)
    m4 = (centered**4).mean(axis=0)
    se_mean = np.sqrt(m2 / n)
    se_var = np.sqrt(np.maximum(0.0, m4 - (n - 3) / (n - 1) * m2**2) / n)
    return OracleMoments(float(kr), float(V), int(n_waves), int(n_trials),
                         mean, m2, se_mean, se_var)


def common_field_kernel_samples(point_a, points_b, k: float, V: float,
                                n_waves: int, n_trials: int,
                                stream: RandomStream,
                                pol: tuple[str, str] = ("x", "x"),
                                amplitude: str = "fixed") -> np.ndarray:
    """Kernel samples sharing one plane-wave ensemble across many points.

    For every trial, one random superposition is evaluated at ``point_a`` and
    at each of ``points_b``; the returned array (n_trials, len(points_b))
    holds the products psi_p(a) psi_q(b_j).  Sharing the ensemble is what
    gives physically consistent spatial correlation across the b points.
    """
    _check_volume(V)
    pa = np.asarray(point_a, dtype=float)
    pb = np.atleast_2d(np.asarray(points_b, dtype=float))
    i = AXES.index(pol[0])
    j = AXES.index(pol[1])
    two_pi = 2.0 * math.pi

    out = np.empty((n_trials, pb.shape[0]))
    chunk = max(1, int(2e6) // max(1, n_waves * (pb.shape[0] + 1)))
    n_chunks = (n_trials + chunk - 1) // chunk

    def run(ci: int) -> None:
        lo = ci * chunk
        hi = min(lo + chunk, n_trials)
        t = hi - lo
        sub = stream.substream(1 + ci)
        shape = (t, n_waves)
        psi = two_pi * sub.uniform(shape)
        phi = two_pi * sub.uniform(shape)
        beta = two_pi * sub.uniform(shape)
        u = 2.0 * sub.uniform(shape) - 1.0
        if amplitude == "fixed":
            a = sub.signs(shape) * math.sqrt(2.0 / (n_waves * V))
        else:
            a = sub.normal(shape) * math.sqrt(2.0 / (n_waves * V))
        sin_th = np.sqrt(np.maximum(0.0, 1.0 - u * u))
        ex = sin_th * np.cos(phi)
        ey = sin_th * np.sin(phi)
        ez = u
        factors = _polarization_factors(psi, phi, u)
        fa = factors[i]
        fb = factors[j]
        phase_a = np.cos(k * (ex * pa[0] + ey * pa[1] + ez * pa[2]) + beta)
        psi_a = (a * fa * phase_a).sum(axis=1)
        for bi, point in enumerate(pb):
            phase_b = np.cos(k * (ex * point[0] + ey * point[1] + ez * point[2]) + beta)
            out[lo:hi, bi] = psi_a * (a * fb * phase_b).sum(axis=1)

    workers = worker_count()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(n_chunks)))
    else:
        for ci in range(n_chunks):
            run(ci)
    return out
