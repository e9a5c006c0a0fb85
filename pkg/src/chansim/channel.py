"""Channel realizations (K-factor mixed line-of-sight plus diffuse field),
mutual coupling, impedance-file ingestion, and conventional fading baselines."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, CavityEnvironment, PairTable, pairwise_geometry
from .greens import AXES
from .moments import channel_moment_tables, kfactor_weights
from .numerics import RandomStream, bessel_j0


class ShapeError(ValueError):
    """Matrix dimensions do not match the array sizes."""


class ConditioningError(ValueError):
    """Impedance system too ill-conditioned to invert reliably."""


class ImpedanceFormatError(ValueError):
    """Malformed impedance file; the message names the offending line."""


MODE_BLOCKS = {"SP": 1, "DP": 2, "TP": 3}


# ---------------------------------------------------------------------------
# Mutual coupling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    matrix: np.ndarray
    side: str  # "transmitter" | "receiver"


def coupling_matrix(Z: np.ndarray, side: str = "transmitter",
                    cond_limit: float = 1e12) -> CouplingMatrix:
    """Coupling matrix C = Z (Z + Z_s)^-1 with Z_s the diagonal of Z.

    Uncoupled (diagonal) impedance gives C = I/2 exactly.
    """
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ShapeError(f"impedance matrix must be square, got {Z.shape}")
    if side not in ("transmitter", "receiver"):
        raise ValueError("side must be 'transmitter' or 'receiver'")
    A = Z + np.diag(np.diag(Z))
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(
            f"Z + Z_s is ill-conditioned (estimate {cond:.3e}); cannot form coupling")
    # C A = Z  =>  A^T C^T = Z^T
    C = np.linalg.solve(A.T, Z.T).T
    return CouplingMatrix(C, side)


def _parse_entry(tok: str):
    if not tok.endswith(("i", "I", "j", "J")):
        return None
    try:
        return complex(tok[:-1].replace(" ", "") + "j")
    except ValueError:
        return None


def load_impedance(path) -> np.ndarray:
    """Read an N x N complex impedance matrix (ohms).

    Format: a header line ``N <count>`` followed by N rows of N entries
    written ``a+bi``.  Parse failures name the offending line; a matrix far
    from Hermitian symmetry triggers a warning only.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = [(i + 1, ln.strip()) for i, ln in enumerate(lines)
            if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise ImpedanceFormatError(f"{path}: empty impedance file")
    lineno, header = body[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "N":
        raise ImpedanceFormatError(f"{path}:{lineno}: expected header 'N <count>'")
    try:
        n = int(parts[1])
    except ValueError:
        raise ImpedanceFormatError(f"{path}:{lineno}: element count is not an integer")
    if n < 1:
        raise ImpedanceFormatError(f"{path}:{lineno}: element count must be >= 1")
    rows = body[1:]
    if len(rows) != n:
        raise ImpedanceFormatError(
            f"{path}: expected {n} matrix rows, found {len(rows)}")
    Z = np.empty((n, n), dtype=complex)
    for r, (lineno, ln) in enumerate(rows):
        toks = ln.split()
        if len(toks) != n:
            raise ImpedanceFormatError(
                f"{path}:{lineno}: expected {n} entries, found {len(toks)}")
        for c, tok in enumerate(toks):
            val = _parse_entry(tok)
            if val is None or not (math.isfinite(val.real) and math.isfinite(val.imag)):
                raise ImpedanceFormatError(
                    f"{path}:{lineno}: bad entry '{tok}' in column {c + 1}")
            Z[r, c] = val
    scale = np.linalg.norm(Z)
    if scale > 0 and np.linalg.norm(Z - Z.conj().T) > 1e-6 * scale:
        warnings.warn(f"{path}: impedance matrix deviates from Hermitian symmetry",
                      stacklevel=2)
    return Z


def save_impedance(path, Z: np.ndarray) -> None:
    """Write an impedance matrix in the format :func:`load_impedance` reads.

    Entries use 17 significant digits, which round-trips doubles exactly.
    """
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ShapeError("impedance matrix must be square")
    n = Z.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"N {n}\n")
        for row in Z:
            fh.write(" ".join(f"{v.real:.17g}{v.imag:+.17g}i" for v in row) + "\n")


def build_synthetic_impedance(geometry: ArrayGeometry, self_impedance: float = 50.0,
                              coupling_strength: float = 0.25,
                              decay_length: float | None = None) -> np.ndarray:
    """Synthetic mutual-impedance matrix for an array.

    Diagonal entries are the element self impedance; off-diagonal coupling
    decays exponentially with inter-element distance.  The construction keeps
    Z + diag(Z) diagonally dominant, so the coupling solve stays well posed.
    """
    pos = geometry.positions
    n = len(geometry)
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    if decay_length is None:
        decay_length = geometry.spacing if geometry.spacing > 0 else 1.0
    Z = self_impedance * coupling_strength * np.exp(-(d - geometry.spacing) / decay_length)
    np.fill_diagonal(Z, self_impedance)
    return Z.astype(complex)


# ---------------------------------------------------------------------------
# Channel realizations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw of the polarized channel.

    ``blocks`` has shape (3, 3, N_r, N_s) over receive/transmit polarization
    axes (x, y, z); entries are real in the default envelope mode and complex
    in the envelope='complex' mode.
    """

    blocks: np.ndarray
    coupled: bool
    seed: tuple[int, int]
    K: float | None
    envelope: str = "real"

    @property
    def shape(self) -> tuple[int, int]:
        return self.blocks.shape[2:]

    def block(self, p: str, q: str) -> np.ndarray:
        return self.blocks[AXES.index(p), AXES.index(q)]

    def stacked(self, mode: str = "SP") -> np.ndarray:
        """Channel matrix for a polarization mode.

        SP is the xx block; DP tiles the (x, y) block grid into a
        2N_r x 2N_s matrix; TP tiles all nine blocks into 3N_r x 3N_s.
        Rows order receive polarizations (x, y, z), columns transmit ones.
        """
        try:
            na = MODE_BLOCKS[mode]
        except KeyError:
            raise ValueError(f"unknown polarization mode {mode!r}") from None
        if na == 1:
            return self.blocks[0, 0]
        rows = [np.concatenate([self.blocks[p, q] for q in range(na)], axis=1)
                for p in range(na)]
        return np.concatenate(rows, axis=0)


class ChannelSampler:
    """Reusable sampler over one transmit/receive geometry and environment.

    Precomputes the per-pair moment tables once; each :meth:`draw` then costs
    one batch of Gaussian variates.  ``K`` selects the K-factor mixture
    (None keeps the plain line-of-sight plus diffuse composition, math.inf
    degenerates to the deterministic channel).  The mixing constant per pair
    comes from the transverse co-polar component and is shared by all nine
    polarization blocks.
    """

    def __init__(self, tx: ArrayGeometry, rx: ArrayGeometry, env: CavityEnvironment,
                 K: float | None = None, envelope: str = "real",
                 coupling: tuple[np.ndarray, np.ndarray] | None = None):
        if envelope not in ("real", "complex"):
            raise ValueError("envelope must be 'real' or 'complex'")
        self.tx, self.rx, self.env = tx, rx, env
        self.K = K
        self.envelope = envelope
        self.table: PairTable = pairwise_geometry(tx, rx)
        tabs = channel_moment_tables(self.table, env)
        if K is None:
            w_los = np.ones(self.table.shape)
            w_nlos = np.ones(self.table.shape)
        else:
            w_los, w_nlos = kfactor_weights(K, tabs.kfactor_c)
        self.mean = w_los * tabs.coherent + w_nlos * tabs.nlos_mean
        self.std = w_nlos * np.sqrt(tabs.variance)
        self.coupling = coupling
        if coupling is not None:
            Cr, Cs = coupling
            nr, ns = self.table.shape
            if Cr.shape != (nr, nr) or Cs.shape != (ns, ns):
                raise ShapeError("coupling matrices must match the panel sizes")

    def expected_square_sum(self, mode: str = "SP") -> float:
        """Sum over stacked entries of mean^2 + variance (uncoupled)."""
        na = MODE_BLOCKS[mode]
        m = self.mean[:na, :na]
        s = self.std[:na, :na]
        return float((m**2 + s**2).sum())

    def draw(self, stream: RandomStream) -> ChannelRealization:
        shape = (3, 3) + self.table.shape
        if self.K is not None and math.isinf(self.K):
            blocks = self.mean.copy()
        elif self.envelope == "real":
            blocks = self.mean + self.std * stream.normal(shape)
        else:
            g = stream.normal((2,) + shape)
            blocks = (self.mean
                      + self.std * math.sqrt(0.5) * (g[0] + 1j * g[1]))
        real = ChannelRealization(blocks, False, (stream.seed, stream.stream_id),
                                  self.K, self.envelope)
        if self.coupling is not None:
            real = apply_coupling(real, *self.coupling)
        return real

    __call__ = draw


def sample_isolated_channel(tx: ArrayGeometry, rx: ArrayGeometry,
                            env: CavityEnvironment, stream: RandomStream,
                            K: float | None = None,
                            envelope: str = "real") -> ChannelRealization:
    """One uncoupled channel draw; see :class:`ChannelSampler` for batches."""
    return ChannelSampler(tx, rx, env, K=K, envelope=envelope).draw(stream)


def dump_realization(real: ChannelRealization, directory) -> list:
    """Write one CSV per polarization block of a realization.

    Each file carries comment headers naming the polarization pair, the block
    dimensions, and the stream identity that produced the draw; complex
    entries are written as real,imag column pairs.
    """
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    nr, ns = real.shape
    complex_mode = np.iscomplexobj(real.blocks)
    for i, p in enumerate(AXES):
        for j, q in enumerate(AXES):
            path = directory / f"block_{p}{q}.csv"
            lines = [
                f"# polarization: {p}{q}",
                f"# rows: {nr}",
                f"# cols: {ns}",
                f"# seed: {real.seed[0]} stream: {real.seed[1]}",
                f"# coupled: {real.coupled}",
                f"# envelope: {real.envelope}",
            ]
            block = real.blocks[i, j]
            for m in range(nr):
                if complex_mode:
                    cells = [f"{v.real:.17g},{v.imag:.17g}" for v in block[m]]
                else:
                    cells = [f"{v:.17g}" for v in block[m]]
                lines.append(",".join(cells))
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)
    return written


def load_realization_block(path) -> np.ndarray:
    """Read back one block CSV written by :func:`dump_realization`."""
    from pathlib import Path

    rows = []
    complex_mode = False
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#") or not line.strip():
            if line.startswith("# envelope: complex"):
                complex_mode = True
            continue
        vals = [float(v) for v in line.split(",")]
        rows.append(vals)
    data = np.asarray(rows)
    if complex_mode:
        return data[:, 0::2] + 1j * data[:, 1::2]
    return data


def apply_coupling(real: ChannelRealization, C_r: np.ndarray,
                   C_s: np.ndarray) -> ChannelRealization:
    """Left/right-multiply every polarization block by the coupling matrices."""
    C_r = np.asarray(C_r)
    C_s = np.asarray(C_s)
    nr, ns = real.shape
    if C_r.shape != (nr, nr):
        raise ShapeError(f"receive coupling must be {nr}x{nr}, got {C_r.shape}")
    if C_s.shape != (ns, ns):
        raise ShapeError(f"transmit coupling must be {ns}x{ns}, got {C_s.shape}")
    blocks = np.einsum("ij,pqjk,kl->pqil", C_r, real.blocks, C_s)
    return ChannelRealization(blocks, True, real.seed, real.K, real.envelope)


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def baseline_rician(tx: ArrayGeometry, rx: ArrayGeometry, env: CavityEnvironment,
                    K: float, stream: RandomStream) -> np.ndarray:
    """Conventional Rician draw with unit average entry power.

    The deterministic part is the unit-modulus phase matrix exp(-jkR_mn)
    from the pairwise path lengths.
    """
    if K < 0:
        raise ValueError("Rician K-factor must be nonnegative")
    table = pairwise_geometry(tx, rx)
    los = np.exp(-1j * env.wavenumber * table.distance)
    if math.isinf(K):
        return los
    g = stream.normal((2,) + table.shape)
    nlos = math.sqrt(0.5) * (g[0] + 1j * g[1])
    return math.sqrt(K / (K + 1.0)) * los + math.sqrt(1.0 / (K + 1.0)) * nlos


def baseline_iid_rayleigh(tx: ArrayGeometry, rx: ArrayGeometry,
                          stream: RandomStream) -> np.ndarray:
    """Independent circularly symmetric Gaussian entries, unit average power."""
    shape = (len(rx), len(tx))
    g = stream.normal((2,) + shape)
    return math.sqrt(0.5) * (g[0] + 1j * g[1])


def clarke_correlation(spacing_over_lambda, three_d: bool = False):
    """Isotropic-scattering spatial correlation at the given spacing.

    Default is the 2-D ring model J0(2 pi d/lambda); ``three_d`` switches to
    the spherical variant sinc(2 pi d/lambda).
    """
    d = np.asarray(spacing_over_lambda, dtype=float)
    if np.any(d < 0):
        raise ValueError("spacing must be nonnegative")
    x = 2.0 * math.pi * d
    if three_d:
        out = np.where(x == 0, 1.0, np.sin(np.where(x == 0, 1.0, x)) / np.where(x == 0, 1.0, x))
    else:
        out = bessel_j0(x)
    return float(out) if np.isscalar(spacing_over_lambda) else out
