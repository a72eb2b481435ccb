"""Waveform parameters, constellations, symbol grids and seeded randomness.

Everything downstream (filter bank, smoothing operators, transceiver) is
dimensioned by a validated :class:`WaveformParams`.  The vectorization order
of a K x M symbol grid is fixed here once and for all: subcarrier-major
within each subsymbol, so vector slot ``m*K + k`` holds grid entry ``(k, m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FilterKind",
    "WaveformParams",
    "Constellation",
    "qam_constellation",
    "SeededRng",
    "validate_params",
    "grid_to_vector",
    "vector_to_grid",
    "map_bits",
    "hard_decision",
    "demap_symbols",
]

RAISED_COSINE = "rc"
DIRICHLET = "dirichlet"

#: accepted prototype filter kinds
FilterKind = (RAISED_COSINE, DIRICHLET)


class DimensionError(ValueError):
    """A waveform parameter combination violates a dimensional invariant."""


@dataclass(frozen=True)
class WaveformParams:
    """Dimensional and filter parameters of one waveform configuration.

    Attributes:
        K: number of subcarriers.
        M: number of subsymbols per symbol block; N = K*M samples per block.
        n_cp: cyclic prefix length in samples, 0 <= n_cp < N.
        beta: prototype roll-off factor in [0, 1].
        V: highest derivative order kept continuous by the smoother.
        filter_kind: "rc" or "dirichlet" ("rc" with beta=0 degenerates to
            the Dirichlet pulse).
        oversample: time-domain oversampling factor used only for PSD
            measurement.
    """

    K: int
    M: int
    n_cp: int = 0
    beta: float = 0.0
    V: int = 0
    filter_kind: str = RAISED_COSINE
    oversample: int = 1

    @property
    def N(self) -> int:
        return self.K * self.M

    def validate(self) -> "WaveformParams":
        if self.K < 1 or self.M < 1:
            raise DimensionError(f"K and M must be positive, got K={self.K}, M={self.M}")
        if not 0.0 <= self.beta <= 1.0:
            raise DimensionError(f"roll-off beta must lie in [0, 1], got {self.beta}")
        if self.V < 0:
            raise DimensionError(f"highest derivative order must be >= 0, got {self.V}")
        if 2 * self.V + 1 > self.N:
            raise DimensionError(
                f"basis set does not fit: 2V+1 = {2 * self.V + 1} > N = {self.N}"
            )
        if not 0 <= self.n_cp < self.N:
            raise DimensionError(f"CP length must satisfy 0 <= n_cp < N, got {self.n_cp}")
        if self.filter_kind not in FilterKind:
            raise DimensionError(f"unknown filter kind {self.filter_kind!r}")
        if self.oversample < 1:
            raise DimensionError(f"oversample factor must be >= 1, got {self.oversample}")
        return self


def validate_params(p: WaveformParams) -> WaveformParams:
    """Return ``p`` unchanged if every dimensional invariant holds."""
    return p.validate()


# ---------------------------------------------------------------------------
# constellations


@dataclass(frozen=True)
class Constellation:
    """A unit-energy constellation with a fixed bit labeling.

    ``points[i]`` is the point whose label is the ``bits_per_symbol``-bit
    binary expansion of ``i`` (MSB first).
    """

    points: np.ndarray
    bits_per_symbol: int
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        object.__setattr__(self, "points", pts)
        n = pts.size
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError(f"constellation size must be a power of two, got {n}")
        if n != 2**self.bits_per_symbol:
            raise ValueError("point count does not match bits_per_symbol")
        energy = np.mean(np.abs(pts) ** 2)
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"constellation mean energy is {energy}, expected 1")

    def to_csv(self) -> str:
        """Constellation table as CSV text: index, bits, real, imag."""
        lines = ["index,bits,real,imag"]
        for i, pt in enumerate(self.points):
            bits = format(i, f"0{self.bits_per_symbol}b")
            lines.append(f"{i},{bits},{pt.real:.17g},{pt.imag:.17g}")
        return "\n".join(lines) + "\n"


def _gray_pam_levels(bits: int) -> np.ndarray:
    """PAM levels indexed by the Gray-decoded bit pattern (MSB first).

    Level order: bit pattern g maps to amplitude 2*b - (L-1) where b is the
    binary-reflected Gray decode of g.  For 2 bits: 00->-3, 01->-1, 11->+1,
    10->+3.
    """
    L = 2**bits
    levels = np.empty(L)
    for g in range(L):
        b = g
        mask = g >> 1
        while mask:
            b ^= mask
            mask >>= 1
        levels[g] = 2 * b - (L - 1)
    return levels


def qam_constellation(order: int) -> Constellation:
    """Square Gray-mapped QAM of the given order (4, 16, 64, ...).

    The first half of the label addresses the in-phase axis, the second half
    the quadrature axis; each axis carries a binary-reflected Gray code.
    Points are scaled to unit average energy.
    """
    bits = int(np.log2(order))
    if 2**bits != order or bits % 2 != 0:
        raise ValueError(f"square QAM requires a power-of-four order, got {order}")
    half = bits // 2
    pam = _gray_pam_levels(half)
    idx = np.arange(order)
    i_bits = idx >> half
    q_bits = idx & (2**half - 1)
    raw = pam[i_bits] + 1j * pam[q_bits]
    scale = np.sqrt(np.mean(np.abs(raw) ** 2))
    return Constellation(points=raw / scale, bits_per_symbol=bits, name=f"{order}QAM")


# ---------------------------------------------------------------------------
# symbol grids


def grid_to_vector(grid: np.ndarray) -> np.ndarray:
    """Vectorize a K x M grid in subcarrier-major order (slot m*K + k)."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError("grid must be a K x M matrix")
    return grid.reshape(-1, order="F")


def vector_to_grid(vec: np.ndarray, K: int, M: int) -> np.ndarray:
    """Inverse of :func:`grid_to_vector`."""
    vec = np.asarray(vec)
    if vec.size != K * M:
        raise ValueError(f"vector length {vec.size} != K*M = {K * M}")
    return vec.reshape(K, M, order="F")


def map_bits(bits: np.ndarray, c: Constellation, K: int, M: int) -> np.ndarray:
    """Map a bit sequence onto a K x M grid of constellation points.

    Bits fill the grid in vectorization order, ``bits_per_symbol`` bits per
    point, MSB first.
    """
    bits = np.asarray(bits).ravel()
    need = K * M * c.bits_per_symbol
    if bits.size != need:
        raise ValueError(f"expected {need} bits, got {bits.size}")
    groups = bits.reshape(K * M, c.bits_per_symbol)
    weights = 1 << np.arange(c.bits_per_symbol - 1, -1, -1)
    labels = groups @ weights
    return vector_to_grid(c.points[labels], K, M)


def hard_decision(y: np.ndarray, c: Constellation) -> np.ndarray:
    """Nearest-point decision; ties resolve to the lowest point index.

    Works elementwise on scalars or arrays, returning constellation points.
    """
    y = np.asarray(y, dtype=np.complex128)
    flat = y.ravel()
    # argmin over squared distance; np.argmin takes the first (lowest index)
    # of equal minima, which is the documented tie-break.
    d2 = np.abs(flat[:, None] - c.points[None, :]) ** 2
    idx = np.argmin(d2, axis=1)
    out = c.points[idx].reshape(y.shape)
    return out if y.shape else out[()]


def decision_labels(y: np.ndarray, c: Constellation) -> np.ndarray:
    """Indices of the hard-decided constellation points."""
    y = np.asarray(y, dtype=np.complex128)
    d2 = np.abs(y.ravel()[:, None] - c.points[None, :]) ** 2
    return np.argmin(d2, axis=1).reshape(y.shape)


def demap_symbols(symbols: np.ndarray, c: Constellation) -> np.ndarray:
    """Hard-decide symbols and return the recovered bit sequence."""
    labels = decision_labels(symbols, c).ravel()
    shifts = np.arange(c.bits_per_symbol - 1, -1, -1)
    return ((labels[:, None] >> shifts[None, :]) & 1).ravel().astype(np.uint8)


# ---------------------------------------------------------------------------
# seeded randomness


@dataclass
class SeededRng:
    """Reproducible random source; children derive deterministically.

    Uses numpy's PCG64 generator.  ``child(i)`` spawns an independent stream
    for trial ``i`` from (seed, i), so parallel trials never share state.
    """

    seed: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.default_rng(np.random.SeedSequence(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, index: int) -> "np.random.Generator":
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(index,))
        )

    def bits(self, count: int) -> np.ndarray:
        return self._gen.integers(0, 2, size=count, dtype=np.uint8)
