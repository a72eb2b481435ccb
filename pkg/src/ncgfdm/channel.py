"""Channel models: AWGN, multipath Rayleigh block fading, ZF equalization.

Fading is block-constant within a symbol so the post-CP channel acts as a
circular convolution; gains evolve across symbols with a Jakes Doppler
spectrum synthesized by a sum of sinusoids (Clarke's model), one independent
set of arrival angles and phases per path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelProfile",
    "ChannelRealization",
    "EVA_DELAYS_NS",
    "EVA_POWERS_DB",
    "eva_profile",
    "JakesFadingProcess",
    "eva_realization",
    "awgn",
    "apply_channel",
    "zf_equalize",
    "DeepFadeError",
]

# 9-path Extended Vehicular A delay/power profile (3GPP LTE)
EVA_DELAYS_NS = (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


class DeepFadeError(ArithmeticError):
    """ZF equalization hit a near-zero channel bin; carries the bin index."""

    def __init__(self, bin_index: int, magnitude: float):
        super().__init__(
            f"channel bin {bin_index} magnitude {magnitude:.3e} too small for ZF"
        )
        self.bin_index = bin_index


@dataclass(frozen=True)
class ChannelProfile:
    """Tapped-delay-line power profile plus Doppler for the fading process."""

    delays_ns: tuple
    powers_db: tuple
    sample_interval_ns: float = 9.3
    doppler_hz: float = 100.0

    def __post_init__(self):
        d = np.asarray(self.delays_ns, dtype=float)
        if d.size != len(self.powers_db):
            raise ValueError("delay and power lists must have equal length")
        if d.size == 0 or d[0] < 0 or np.any(np.diff(d) <= 0):
            raise ValueError("delays must be non-negative and strictly increasing")

    def tap_positions(self) -> np.ndarray:
        """Path delays rounded to the nearest sample."""
        return np.rint(np.asarray(self.delays_ns) / self.sample_interval_ns).astype(int)

    def linear_powers(self) -> np.ndarray:
        """Per-path linear powers, normalized to unit total."""
        p = 10.0 ** (np.asarray(self.powers_db) / 10.0)
        return p / p.sum()


def eva_profile(sample_interval_ns: float = 9.3, doppler_hz: float = 100.0) -> ChannelProfile:
    return ChannelProfile(EVA_DELAYS_NS, EVA_POWERS_DB, sample_interval_ns, doppler_hz)


@dataclass(frozen=True)
class ChannelRealization:
    """One block-fading realization: sparse impulse response and its DFT."""

    taps: np.ndarray
    H_diag: np.ndarray

    @classmethod
    def from_taps(cls, taps: np.ndarray) -> "ChannelRealization":
        taps = np.asarray(taps, dtype=np.complex128)
        return cls(taps=taps, H_diag=np.fft.fft(taps))


@dataclass
class JakesFadingProcess:
    """Per-path Rayleigh gains with Jakes Doppler autocorrelation.

    Each path is a sum of ``n_sinusoids`` complex sinusoids at Doppler
    frequencies f_D cos(theta) with uniformly random angles and phases, so
    the gain autocorrelation across symbols follows J0(2 pi f_D tau).
    Gains are read at t = symbol_index * symbol_duration and held for the
    whole symbol (block fading).
    """

    profile: ChannelProfile
    block_len: int
    symbol_duration_s: float
    rng: np.random.Generator
    n_sinusoids: int = 32
    _angles: np.ndarray = field(init=False, repr=False)
    _phases: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n_paths = len(self.profile.delays_ns)
        self._angles = self.rng.uniform(0.0, 2 * np.pi, size=(n_paths, self.n_sinusoids))
        self._phases = self.rng.uniform(0.0, 2 * np.pi, size=(n_paths, self.n_sinusoids))

    def gains(self, symbol_index: int) -> np.ndarray:
        """Unit-mean-power complex gain per path at the given symbol."""
        t = symbol_index * self.symbol_duration_s
        arg = (
            2 * np.pi * self.profile.doppler_hz * t * np.cos(self._angles)
            + self._phases
        )
        return np.exp(1j * arg).sum(axis=1) / np.sqrt(self.n_sinusoids)

    def realization(self, symbol_index: int) -> ChannelRealization:
        positions = self.profile.tap_positions()
        if positions.max(initial=0) >= self.block_len:
            raise ValueError(
                f"path delay {positions.max()} samples exceeds block length {self.block_len}"
            )
        amps = np.sqrt(self.profile.linear_powers()) * self.gains(symbol_index)
        taps = np.zeros(self.block_len, dtype=np.complex128)
        np.add.at(taps, positions, amps)
        return ChannelRealization.from_taps(taps)


def eva_realization(
    profile: ChannelProfile,
    symbol_index: int,
    rng: np.random.Generator,
    block_len: int,
    symbol_duration_s: float | None = None,
) -> ChannelRealization:
    """One-shot realization; draws a fresh fading process from ``rng``.

    For gains correlated across symbols, create one
    :class:`JakesFadingProcess` per stream and query it per symbol instead.
    """
    if symbol_duration_s is None:
        symbol_duration_s = block_len * profile.sample_interval_ns * 1e-9
    proc = JakesFadingProcess(profile, block_len, symbol_duration_s, rng)
    return proc.realization(symbol_index)


def awgn(x: np.ndarray, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise of total variance sigma2."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    if sigma2 == 0:
        return np.asarray(x, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    noise = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
    return x + np.sqrt(sigma2 / 2) * noise


def apply_channel(h: ChannelRealization, x: np.ndarray) -> np.ndarray:
    """Circular convolution with the realization, via the DFT diagonal."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[0] != h.H_diag.size:
        raise ValueError(f"length mismatch: signal {x.shape[0]}, channel {h.H_diag.size}")
    spec = np.fft.fft(x, axis=0)
    spec *= h.H_diag if x.ndim == 1 else h.H_diag[:, None]
    return np.fft.ifft(spec, axis=0)


def zf_equalize(h: ChannelRealization, y: np.ndarray, min_gain: float = 1e-12) -> np.ndarray:
    """DFT-domain division by the channel response (zero forcing)."""
    y = np.asarray(y, dtype=np.complex128)
    if y.shape[0] != h.H_diag.size:
        raise ValueError(f"length mismatch: signal {y.shape[0]}, channel {h.H_diag.size}")
    mags = np.abs(h.H_diag)
    worst = int(np.argmin(mags))
    if mags[worst] <= min_gain:
        raise DeepFadeError(worst, float(mags[worst]))
    spec = np.fft.fft(y, axis=0)
    spec /= h.H_diag if y.ndim == 1 else h.H_diag[:, None]
    return np.fft.ifft(spec, axis=0)
