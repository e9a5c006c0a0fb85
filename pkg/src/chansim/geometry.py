"""Antenna array geometry, transmit/receive pair tables, and the cavity
environment descriptor."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Minimum edge spacing, in wavelengths, for elements to behave as weakly
#: interacting point scatterers.
MIN_SCATTERER_SPACING = 0.25


class GeometryError(ValueError):
    """Invalid array or environment description."""


class EmptyArrayError(GeometryError):
    """An array was requested with zero elements."""


class DegeneratePairError(GeometryError):
    """A transmit and a receive element coincide."""


class SpacingViolation(GeometryError):
    """Edge spacing below the minimum-scatterer limit under strict checking."""


@dataclass(frozen=True)
class CavityEnvironment:
    """Multipath environment: operating frequency, cavity volume, and loss.

    The composite field constant multiplying every radiated-field expression
    is carried as the single dimensionless ``field_scale`` (default 1); all
    capacities are then controlled through the noise variance.
    """

    frequency: float          # Hz
    volume: float             # m^3
    quality_factor: float     # dimensionless cavity loss parameter
    field_scale: float = 1.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise GeometryError("frequency must be positive")
        if self.volume <= 0:
            raise GeometryError("cavity volume must be positive")
        if self.quality_factor <= 0:
            raise GeometryError("quality factor must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise GeometryError("zero-length direction vector")
    return v / n


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Positions and nominal layout parameters of one antenna panel."""

    positions: np.ndarray               # (N, 3) metres
    spacing: float                      # nominal inter-element spacing, m
    element_size: tuple[float, float] = (0.0, 0.0)
    normal: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "normal", _unit(self.normal))
        if pos.shape[0] == 0:
            raise EmptyArrayError("array has no elements")
        if pos.shape[1] != 3:
            raise GeometryError("positions must be 3-D points")

    def __len__(self) -> int:
        return self.positions.shape[0]

    def min_edge_spacing(self) -> float:
        """Smallest distance between any two distinct elements."""
        pos = self.positions
        if len(self) == 1:
            return math.inf
        d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        d[np.diag_indices(len(self))] = np.inf
        return float(d.min())

    def translated(self, offset) -> "ArrayGeometry":
        return ArrayGeometry(self.positions + np.asarray(offset, dtype=float),
                             self.spacing, self.element_size, self.normal)


def build_linear_array(n: int, spacing: float, axis=(1.0, 0.0, 0.0),
                       origin=(0.0, 0.0, 0.0),
                       element_size=(0.0, 0.0)) -> ArrayGeometry:
    """Uniform linear array: element i at origin + i*spacing*axis."""
    if n < 1:
        raise EmptyArrayError("linear array needs at least one element")
    if spacing <= 0:
        raise GeometryError("spacing must be positive")
    axis = _unit(axis)
    idx = np.arange(n, dtype=float)[:, None]
    pos = np.asarray(origin, dtype=float)[None, :] + idx * spacing * axis[None, :]
    # broadside normal: any unit vector orthogonal to the axis
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    normal = _unit(np.cross(axis, helper))
    return ArrayGeometry(pos, spacing, tuple(element_size), normal)


def build_planar_array(nx: int, ny: int, spacing: float,
                       origin=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
                       element_size=(0.0, 0.0)) -> ArrayGeometry:
    """Regular nx-by-ny grid centred on ``origin`` in the plane orthogonal to
    ``normal``, enumerated row-major (first in-plane axis fastest)."""
    if nx < 1 or ny < 1:
        raise EmptyArrayError("planar array needs at least one element per side")
    if spacing <= 0:
        raise GeometryError("spacing must be positive")
    normal = _unit(normal)
    helper = np.array([0.0, 1.0, 0.0]) if abs(normal[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
    u = _unit(np.cross(helper, normal))
    v = np.cross(normal, u)
    ix = np.arange(nx, dtype=float) - (nx - 1) / 2.0
    iy = np.arange(ny, dtype=float) - (ny - 1) / 2.0
    gx, gy = np.meshgrid(ix, iy, indexing="xy")  # row-major: x varies fastest
    offsets = gx.reshape(-1, 1) * u[None, :] + gy.reshape(-1, 1) * v[None, :]
    pos = np.asarray(origin, dtype=float)[None, :] + spacing * offsets
    return ArrayGeometry(pos, spacing, tuple(element_size), normal)


def check_min_scatterer(geometry: ArrayGeometry, wavelength: float,
                        strict: bool = False) -> bool:
    """Enforce the quarter-wavelength edge-spacing rule.

    Returns True when the geometry passes.  Violations warn by default and
    raise :class:`SpacingViolation` under ``strict``.
    """
    limit = MIN_SCATTERER_SPACING * wavelength
    actual = geometry.min_edge_spacing()
    if actual >= limit * (1.0 - 1e-9):
        return True
    msg = (f"edge spacing {actual:.4g} m is below the minimum-scatterer "
           f"limit {limit:.4g} m (lambda/4)")
    if strict:
        raise SpacingViolation(msg)
    warnings.warn(msg, stacklevel=2)
    return False


@dataclass(frozen=True)
class PairGeometry:
    """Distance and direction cosines for one transmit/receive element pair."""

    distance: float
    cosines: tuple[float, float, float]

    def __post_init__(self):
        if self.distance <= 0:
            raise DegeneratePairError("pair distance must be positive")
        norm = sum(c * c for c in self.cosines)
        if abs(norm - 1.0) > 1e-12:
            raise GeometryError("direction cosines must form a unit vector")


@dataclass(frozen=True, eq=False)
class PairTable:
    """All pairwise distances and direction cosines between two panels.

    ``distance`` has shape (N_r, N_s) and ``cosines`` shape (N_r, N_s, 3);
    cosines point from the transmit element to the receive element.
    """

    distance: np.ndarray
    cosines: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.distance.shape

    def pair(self, m: int, n: int) -> PairGeometry:
        return PairGeometry(float(self.distance[m, n]),
                            tuple(float(c) for c in self.cosines[m, n]))


def pairwise_geometry(tx: ArrayGeometry, rx: ArrayGeometry) -> PairTable:
    """Distance/direction table between every receive and transmit element."""
    diff = rx.positions[:, None, :] - tx.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    if np.any(dist <= 0.0) or np.any(dist < 1e-15):
        m, n = np.unravel_index(int(np.argmin(dist)), dist.shape)
        raise DegeneratePairError(
            f"receive element {m} coincides with transmit element {n}")
    cos = diff / dist[..., None]
    return PairTable(dist, cos)
