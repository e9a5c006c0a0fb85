"""Monte Carlo ergodic capacity, closed-form single- and multi-antenna
capacity bounds over distance, two-user rate regions, spatial-correlation
curves, and polarization eigenvalue spectra."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSampler, MODE_BLOCKS, baseline_rician
from .geometry import ArrayGeometry, CavityEnvironment, pairwise_geometry
from .greens import AXES, coherent_longitudinal, coherent_transverse
from .moments import (
    common_field_kernel_samples,
    copolar_transverse_moments,
    kfactor_weights,
    spectral_params,
)
from .numerics import RandomStream, hermitian_logdet2, transverse_mean_bracket


@dataclass(frozen=True)
class CapacityEstimate:
    """Monte Carlo mean rate with a normal-approximation 95% half-width."""

    mean_bits: float
    half_width_95: float
    n_trials: int
    sigma2: float


@dataclass(frozen=True, eq=False)
class RegionBoundary:
    """Two-user achievable-rate region boundary.

    ``corner_a`` decodes user 1 last (interference-free); ``corner_b`` is the
    opposite order.  ``points`` runs from the R2 axis to the R1 axis and
    includes the time-sharing segment between the corners.
    """

    points: list[tuple[float, float]]
    corner_a: tuple[float, float]
    corner_b: tuple[float, float]
    sum_rate: float


def gram_rate_bits(H: np.ndarray, sigma2: float) -> float:
    """log2 det(I + H H^H / sigma2) through the smaller-side Gram matrix."""
    if H.ndim == 1:
        H = H[None, :]
    if H.shape[0] <= H.shape[1]:
        G = H @ H.conj().T
    else:
        G = H.conj().T @ H
    n = G.shape[0]
    A = np.eye(n) + G / sigma2
    return hermitian_logdet2(0.5 * (A + A.conj().T))


def mc_capacity(sampler, sigma2: float, mode: str = "SP", n_trials: int = 2000,
                stream: RandomStream | None = None) -> CapacityEstimate:
    """Monte Carlo ergodic capacity of a channel source.

    ``sampler`` is a callable mapping a RandomStream to a ChannelRealization;
    ``mode`` picks the single/dual/tri-polarized stacking (identity input
    covariance throughout).
    """
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    if n_trials < 100:
        raise ValueError("n_trials must be at least 100")
    if mode not in MODE_BLOCKS:
        raise ValueError(f"unknown polarization mode {mode!r}")
    if sampler is None:
        raise ValueError("no channel source given")
    if stream is None:
        stream = RandomStream(0, 0)
    rates = np.empty(n_trials)
    for t in range(n_trials):
        real = sampler(stream)
        rates[t] = gram_rate_bits(real.stacked(mode), sigma2)
    mean = float(rates.mean())
    hw = 1.96 * float(rates.std(ddof=1)) / math.sqrt(n_trials) if n_trials > 1 else 0.0
    return CapacityEstimate(mean, hw, n_trials, float(sigma2))


# ---------------------------------------------------------------------------
# Closed-form bounds over distance (transverse polarization, like-for-like
# with the SP Monte Carlo channel)
# ---------------------------------------------------------------------------


def _siso_moments(R: float, env: CavityEnvironment) -> tuple[float, float]:
    k = env.wavenumber
    scale = spectral_params(env).kernel_scale * env.field_scale
    mean = (env.field_scale * coherent_transverse(R, k)
            + scale * transverse_mean_bracket(k * R) / (2.0 * env.volume))
    var = scale**2 * copolar_transverse_moments(k * R, env.volume)["variance"]
    return mean, var


def siso_capacity_bound(R: float, env: CavityEnvironment, sigma2: float) -> float:
    """Single-antenna capacity bound log2(1 + (E[H]^2 + V[H])/sigma2) using
    the full near-field mean and variance at separation R."""
    if R <= 0:
        raise ValueError("distance must be positive")
    mean, var = _siso_moments(R, env)
    return math.log2(1.0 + (mean**2 + var) / sigma2)


def siso_farfield_bound(R: float, env: CavityEnvironment, sigma2: float) -> float:
    """Far-field single-antenna bound (1/R^2 and 1/R^3 field terms dropped).

    Warns when kR < 20, where the dropped near-field terms still matter.
    """
    k = env.wavenumber
    if k * R < 20.0:
        warnings.warn(f"far-field bound evaluated at kR = {k * R:.3g} < 20",
                      stacklevel=2)
    return math.log2(1.0 + _farfield_element_power(R, env) / sigma2)


def _farfield_element_power(R, env: CavityEnvironment):
    """Per-element mean-square channel in the far-field approximation."""
    k = env.wavenumber
    V = env.volume
    Q = env.quality_factor
    kr = k * R
    fs2 = env.field_scale**2
    return fs2 * (np.cos(kr) ** 2 / (16.0 * math.pi**2 * R**2)
                  + (Q / (4.0 * k * V)) * (np.cos(kr) / kr) * (np.sin(kr) / kr)
                  + 3.0 * math.pi**2 * Q**2 / (32.0 * V**2 * k**4)
                  + (9.0 * math.pi**2 * Q**2 / (64.0 * V**2 * k**4))
                  * np.sin(2.0 * kr) / (2.0 * kr))


def miso_element_moments(R: float, n: int, spacing: float,
                         env: CavityEnvironment) -> dict[str, float]:
    """Mean and variance of the channel from the n-th element (1-based) of a
    line array on the x axis to a receiver broadside at distance R.

    The mean carries the direction-cosine-weighted longitudinal correction;
    the variance is the full single-antenna variance at the element range.
    """
    if R <= 0:
        raise ValueError("distance must be positive")
    if n < 1:
        raise ValueError("element index is 1-based")
    k = env.wavenumber
    off = (n - 1) * spacing
    Rn = math.hypot(R, off)
    cos2 = (off / Rn) ** 2
    scale = spectral_params(env).kernel_scale * env.field_scale
    mean = (env.field_scale * (coherent_transverse(Rn, k)
                               + coherent_longitudinal(Rn, k) * cos2)
            + scale * transverse_mean_bracket(k * Rn) / (2.0 * env.volume))
    var = scale**2 * copolar_transverse_moments(k * Rn, env.volume)["variance"]
    return {"mean": float(mean), "variance": float(var)}


def _case1_power(R: float, n_elements: int, spacing: float,
                 env: CavityEnvironment) -> float:
    """Sum over elements of the approximated squared mean plus far-field
    variance, the quantity inside the distance-sweep lower bound."""
    k = env.wavenumber
    V = env.volume
    Q = env.quality_factor
    n = np.arange(n_elements, dtype=float)
    Rn = np.sqrt(R**2 + (n * spacing) ** 2)
    krn = k * Rn
    A = np.cos(krn) / (4.0 * math.pi * Rn) * (R**2 / Rn**2)
    B = (math.pi * Q / (2.0 * V * k**2)) * np.sin(krn) / krn
    e2 = (A**2 + B**2
          + (Q / (4.0 * V * k)) * (np.cos(krn) / krn) * (np.sin(krn) / krn)
          * (R**2 / Rn**2))
    y = 2.0 * krn
    vff = ((9.0 * math.pi**2 * Q**2 / (128.0 * V**2 * k**4))
           * (4.0 / 3.0 + 2.0 * np.sin(y) / y)
           - (math.pi**2 * Q**2 / (4.0 * V**2 * k**4)) * (np.sin(krn) / krn) ** 2)
    return float(env.field_scale**2 * (e2 + vff).sum())


def miso_lower_bound(R: float, geometry: ArrayGeometry, env: CavityEnvironment,
                     sigma2: float) -> float:
    """Near/middle-field capacity approximation for a line array.

    Uses the range-deflated squared means (the 1/R^2 and 1/R^3 field terms
    dropped, the broadside projection kept) plus the far-field variance,
    summed over elements.
    """
    if R <= 0:
        raise ValueError("distance must be positive")
    S = _case1_power(R, len(geometry), geometry.spacing, env)
    return math.log2(1.0 + S / sigma2)


def miso_upper_bound(R: float, n_elements: int, env: CavityEnvironment,
                     sigma2: float) -> float:
    """Far-field capacity approximation: every element at the central range,
    so the per-element far-field power simply scales by the element count."""
    if R <= 0:
        raise ValueError("distance must be positive")
    S = n_elements * _farfield_element_power(R, env)
    return math.log2(1.0 + S / sigma2)


# ---------------------------------------------------------------------------
# Two-user regions
# ---------------------------------------------------------------------------


def _timeshare(corner_a, corner_b, n_timeshare: int) -> list[tuple[float, float]]:
    pts = []
    for i in range(n_timeshare):
        eps = (i + 1) / (n_timeshare + 1)
        pts.append((eps * corner_a[0] + (1 - eps) * corner_b[0],
                    eps * corner_a[1] + (1 - eps) * corner_b[1]))
    return pts


def two_user_region_practical(sampler1, sampler2, sigma2: float,
                              n_trials: int = 2000, n_timeshare: int = 9,
                              stream: RandomStream | None = None) -> RegionBoundary:
    """Monte Carlo two-user region with successive interference cancellation.

    Corner A gives user 1 its interference-free rate and user 2 the residual;
    corner B is symmetric.  Corner sums equal the joint rate trial by trial.
    """
    if stream is None:
        stream = RandomStream(0, 0)
    s1 = stream.substream(101)
    s2 = stream.substream(202)
    c1 = np.empty(n_trials)
    c2 = np.empty(n_trials)
    cs = np.empty(n_trials)
    for t in range(n_trials):
        H1 = sampler1(s1).stacked("SP")
        H2 = sampler2(s2).stacked("SP")
        if H1.shape[1] != H2.shape[1]:
            raise ValueError("user channels must share the transmit dimension")
        c1[t] = gram_rate_bits(H1, sigma2)
        c2[t] = gram_rate_bits(H2, sigma2)
        cs[t] = gram_rate_bits(np.concatenate([H1, H2], axis=0), sigma2)
    C1, C2, Cs = float(c1.mean()), float(c2.mean()), float(cs.mean())
    corner_a = (C1, Cs - C1)
    corner_b = (Cs - C2, C2)
    points = [(0.0, C2), corner_b]
    points += _timeshare(corner_a, corner_b, n_timeshare)[::-1]
    points += [corner_a, (C1, 0.0)]
    return RegionBoundary(points, corner_a, corner_b, Cs)


REGION_CASES = ("NF-NF", "NF-FF", "FF-FF")
#: Distances beyond this many wavelengths count as far field for the
#: placement-consistency warning.
FARFIELD_LIMIT_WAVELENGTHS = 50.0


def two_user_region_theoretical(case: str, placements: tuple[float, float],
                                geometry: ArrayGeometry, env: CavityEnvironment,
                                sigma2: float, n_timeshare: int = 9) -> RegionBoundary:
    """Closed-form two-user region from the per-user distance bounds.

    Near/middle-field users take the element-summed lower bound, far-field
    users the central-range upper bound.  The sum rate assumes the two users'
    channels are orthogonal, which makes both corners coincide at the
    rectangle vertex; the boundary is the time-sharing segment through it.
    """
    if case not in REGION_CASES:
        raise ValueError(f"case must be one of {REGION_CASES}")
    R1, R2 = placements
    lam = env.wavelength
    far_flags = {"NF-NF": (False, False), "NF-FF": (False, True),
                 "FF-FF": (True, True)}[case]
    for R, far in zip(placements, far_flags):
        actual_far = R / lam >= FARFIELD_LIMIT_WAVELENGTHS
        if actual_far != far:
            warnings.warn(
                f"placement {R / lam:.3g} wavelengths looks "
                f"{'far' if actual_far else 'near'}-field but case {case} "
                f"declares the opposite", stacklevel=2)
    rates = []
    for R, far in zip(placements, far_flags):
        if far:
            rates.append(miso_upper_bound(R, len(geometry), env, sigma2))
        else:
            rates.append(miso_lower_bound(R, geometry, env, sigma2))
    r1, r2 = rates
    corner = (r1, r2)
    points = [(0.0, r2), corner]
    points += _timeshare(corner, corner, n_timeshare)
    points += [(r1, 0.0)]
    return RegionBoundary(points, corner, corner, r1 + r2)


# ---------------------------------------------------------------------------
# Correlation and eigenvalue sweeps
# ---------------------------------------------------------------------------

CORRELATION_MODELS = ("proposed-common-field", "rician", "clarke")


def correlation_vs_spacing(model: str, spacings_lambda, env: CavityEnvironment,
                           K: float, n_trials: int, stream: RandomStream,
                           d_rt: float, n_waves: int = 2000) -> np.ndarray:
    """Normalized channel correlation across transmit-element spacing.

    The correlation is the non-centered product moment
    rho(s) = E[H(0) H(s)*] / sqrt(E|H(0)|^2 E|H(s)|^2) between the element at
    the origin and an element offset by s along x, with the receiver at
    distance ``d_rt`` broadside.  The proposed model draws one plane-wave
    ensemble per trial shared by all elements, which is what makes the
    cross-element correlation physical.
    """
    spac = np.asarray(spacings_lambda, dtype=float)
    if spac.ndim != 1 or spac.size == 0 or spac[0] != 0.0 or np.any(np.diff(spac) <= 0):
        raise ValueError("spacings must be ascending and start at 0")
    if n_trials < 100:
        warnings.warn("fewer than 100 trials; correlation will be noisy", stacklevel=2)
    lam = env.wavelength
    s_m = spac * lam
    if model == "clarke":
        from .channel import clarke_correlation
        return np.asarray(clarke_correlation(spac))
    if model == "rician":
        R_j = np.sqrt(s_m**2 + d_rt**2)
        phases = np.exp(-1j * env.wavenumber * R_j)
        g = stream.normal((2, n_trials, spac.size))
        nlos = math.sqrt(0.5) * (g[0] + 1j * g[1])
        if math.isinf(K):
            h = np.broadcast_to(phases, (n_trials, spac.size)).copy()
        else:
            h = (math.sqrt(K / (K + 1.0)) * phases[None, :]
                 + math.sqrt(1.0 / (K + 1.0)) * nlos)
        num = (h[:, :1] * np.conj(h)).mean(axis=0)
        den = np.sqrt((np.abs(h[:, :1]) ** 2).mean() * (np.abs(h) ** 2).mean(axis=0))
        return np.real(num) / den
    if model != "proposed-common-field":
        raise ValueError(f"model must be one of {CORRELATION_MODELS}")

    k = env.wavenumber
    V = env.volume
    scale = spectral_params(env).kernel_scale * env.field_scale
    rx = (0.0, 0.0, d_rt)
    txs = [(s, 0.0, 0.0) for s in s_m]
    R_j = np.sqrt(s_m**2 + d_rt**2)
    coh = env.field_scale * coherent_transverse(R_j, k)
    nlos_mean = scale * transverse_mean_bracket(k * R_j) / (2.0 * V)
    var = scale**2 * copolar_transverse_moments(k * R_j, V)["variance"]
    c_pair = coh**2 / (nlos_mean**2 + var)
    w_los, w_nlos = kfactor_weights(K, c_pair)
    if math.isinf(K):
        h = np.broadcast_to(coh, (1, spac.size))
    else:
        D = common_field_kernel_samples(rx, txs, k, V, n_waves, n_trials, stream)
        h = w_los[None, :] * coh[None, :] + w_nlos[None, :] * (scale * D)
    num = (h[:, :1] * h).mean(axis=0)
    den = np.sqrt((h[:, :1] ** 2).mean() * (h**2).mean(axis=0))
    return num / den


def polarization_eigenvalues(tx: ArrayGeometry, rx_proto: ArrayGeometry,
                             env: CavityEnvironment, K: float | None,
                             distances, n_trials: int,
                             stream: RandomStream) -> dict[tuple[str, str], np.ndarray]:
    """Leading eigenvalue of the trial-averaged Gram matrix per polarization
    pair, swept over receiver distance along the z axis.

    ``rx_proto`` is the receive panel centred at the origin; it is translated
    to each distance.  Requires at least 500 trials (one suffices when the
    K-factor is infinite, where the channel is deterministic).
    """
    deterministic = K is not None and math.isinf(K)
    if n_trials < 500 and not deterministic:
        raise ValueError("eigenvalue sweep needs at least 500 trials")
    dists = np.asarray(distances, dtype=float)
    out = {(p, q): np.empty(dists.size) for p in AXES for q in AXES}
    for di, d in enumerate(dists):
        sampler = ChannelSampler(tx, rx_proto.translated((0.0, 0.0, d)), env, K=K)
        sub = stream.substream(1000 + di)
        n_eff = 1 if deterministic else n_trials
        acc = None
        for _ in range(n_eff):
            blocks = sampler.draw(sub).blocks
            gram = np.einsum("pqmn,pqkn->pqmk", blocks, np.conj(blocks))
            acc = gram if acc is None else acc + gram
        acc /= n_eff
        for i, p in enumerate(AXES):
            for j, q in enumerate(AXES):
                g = acc[i, j]
                w = np.linalg.eigvalsh(0.5 * (g + g.conj().T))
                out[(p, q)][di] = float(w[-1])
    return out
