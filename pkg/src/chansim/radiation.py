"""Aggregate radiation intensity, average radiated power, and gain/directivity
of a coupled panel, computed from the per-pair channel statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ShapeError
from .geometry import CavityEnvironment, PairTable
from .greens import AXES
from .moments import channel_moment_tables


class DegeneratePowerError(ValueError):
    """Average radiated power is not positive."""


@dataclass(frozen=True, eq=False)
class RadiationReport:
    intensity: float        # U
    average_power: float    # P_av
    gain: float             # G (lossless, so G = D)
    directivity: float      # D
    # only the lossless case is modelled; the hook stays at zero
    ohmic_loss: float = 0.0
    # coupling matrix the quadratic forms were evaluated with
    coupling: np.ndarray | None = None


def _moment_grids(table: PairTable, env: CavityEnvironment, pol: tuple[str, str]):
    tabs = channel_moment_tables(table, env)
    i, j = AXES.index(pol[0]), AXES.index(pol[1])
    mean = tabs.coherent[i, j] + tabs.nlos_mean[i, j]
    return mean, tabs.variance[i, j]


def _quadratic_form(diag_values: np.ndarray, C: np.ndarray) -> float:
    """Sum of all entries of C^H diag(d) C.

    The inner diagonal is indexed by receive element, so the coupling matrix
    supplied here must act in that space; with equal panel sizes this is the
    same matrix that couples the transmitter.
    """
    C = np.asarray(C)
    n = diag_values.shape[0]
    if C.shape != (n, n):
        raise ShapeError(
            f"coupling matrix must be {n}x{n} to match the receive-indexed "
            f"diagonal, got {C.shape}")
    s = (C.conj().T * diag_values[None, :]) @ C
    return float(np.real(s.sum()))


def radiation_intensity(table: PairTable, env: CavityEnvironment, C: np.ndarray,
                        pol: tuple[str, str] = ("x", "x")) -> float:
    """Radiation intensity: the coupled quadratic form over per-receiver sums
    of the full second moment mean^2 + variance."""
    mean, var = _moment_grids(table, env, pol)
    d = (mean**2 + var).sum(axis=1)
    return _quadratic_form(d, C)


def average_radiated_power(table: PairTable, env: CavityEnvironment, C: np.ndarray,
                           pol: tuple[str, str] = ("x", "x")) -> float:
    """Average radiated power: the same quadratic form with squared means only."""
    mean, _ = _moment_grids(table, env, pol)
    d = (mean**2).sum(axis=1)
    return _quadratic_form(d, C)


def directivity_gain(intensity: float, average_power: float,
                     coupling: np.ndarray | None = None) -> RadiationReport:
    """Gain and directivity in the lossless case: G = D = 4 pi U / P_av."""
    if average_power <= 0:
        raise DegeneratePowerError("average radiated power must be positive")
    g = 4.0 * np.pi * intensity / average_power
    return RadiationReport(float(intensity), float(average_power), float(g),
                           float(g), coupling=coupling)


def radiation_report(table: PairTable, env: CavityEnvironment, C: np.ndarray,
                     pol: tuple[str, str] = ("x", "x")) -> RadiationReport:
    """Intensity, power, and gain of one coupled panel in one call."""
    u = radiation_intensity(table, env, C, pol)
    p = average_radiated_power(table, env, C, pol)
    return directivity_gain(u, p, coupling=np.asarray(C))
