"""Spectral and power analysis: Welch PSD, oversampling, SIR and power curves.

The PSD path is streaming-friendly: a :class:`WelchAccumulator` consumes
sample chunks of any length and averages Hann-windowed periodograms, so
long waveforms never need to be held in memory at once.  Power and SIR
estimators run entirely on the low-rank smoothing factors; no N x N product
is formed per symbol.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.signal

from .params import WaveformParams
from .smoothing import NcOperators, coefficient_stream

__all__ = [
    "oversample_symbol",
    "oversample_stream",
    "psd_sample_stream",
    "PsdEstimate",
    "WelchAccumulator",
    "welch_psd",
    "normalize_inband",
    "sidelobe_level",
    "SirReport",
    "smooth_power_curve",
    "sir_report",
    "theoretical_sir",
    "closed_form_sir",
    "empirical_sir",
    "mc_smooth_power",
]


def oversample_symbol(x: np.ndarray, oversample: int) -> np.ndarray:
    """Bandlimited interpolation by zero-padding the DFT above the top bin.

    The waveform's occupied band lives on bins 0..N-1 (positive-frequency
    exponentials), so padding is one-sided: the original N bins stay in
    place and extra empty bins are appended.  Amplitude is rescaled so the
    original samples are interpolated exactly.
    """
    x = np.asarray(x, dtype=np.complex128)
    if oversample < 1:
        raise ValueError("oversample factor must be >= 1")
    if oversample == 1:
        return x.copy()
    N = x.shape[0]
    X = np.fft.fft(x, axis=0)
    shape = (oversample * N,) + x.shape[1:]
    Xp = np.zeros(shape, dtype=np.complex128)
    Xp[:N] = X
    return oversample * np.fft.ifft(Xp, axis=0)


def oversample_stream(stream: np.ndarray, factor: int) -> np.ndarray:
    """Interpolate a whole concatenated sample stream in one DFT pass.

    Exact bandlimited interpolation: a tone keeps its bin index and, after
    rate compensation, its energy.  Factor 1 is the identity.  Note that
    this global form is spectrum-preserving by construction; PSD runs that
    need to expose inter-symbol boundary radiation interpolate per symbol
    via :func:`psd_sample_stream` instead.
    """
    stream = np.asarray(stream, dtype=np.complex128).ravel()
    return oversample_symbol(stream, factor)


def psd_sample_stream(
    cores: np.ndarray, n_cp: int, oversample: int, recenter: bool = True
) -> np.ndarray:
    """Serialize symbol cores into an oversampled CP-framed stream.

    Each core column is interpolated separately, then CP-extended by
    ``n_cp * oversample`` samples (the CP is a circular extension, so
    per-symbol interpolation and framing commute).  Interpolating per
    symbol, not globally, is what makes boundary discontinuities visible as
    out-of-band radiation.  With ``recenter`` the occupied band, which sits
    at the bottom ``1/oversample`` of the widened spectrum, is shifted to be
    symmetric around DC.
    """
    cores = np.asarray(cores, dtype=np.complex128)
    if cores.ndim == 1:
        cores = cores[:, None]
    up = oversample_symbol(cores, oversample)
    cp = n_cp * oversample
    framed = np.concatenate([up[up.shape[0] - cp :, :], up], axis=0)
    stream = framed.reshape(-1, order="F")
    if recenter and oversample > 1:
        n = np.arange(stream.size)
        stream = stream * np.exp(-1j * np.pi * n / oversample)
    return stream


@dataclass(frozen=True)
class PsdEstimate:
    """Averaged periodogram: normalized frequencies in [-1/2, 1/2) and PSD."""

    freqs: np.ndarray
    psd: np.ndarray
    segments: int

    def db(self, floor: float = 1e-300) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.psd, floor))

    def to_csv(self) -> str:
        lines = ["frequency,psd_db"]
        db = self.db()
        for f, v in zip(self.freqs, db):
            lines.append(f"{f:.17g},{v:.17g}")
        return "\n".join(lines) + "\n"


class WelchAccumulator:
    """Streaming Welch PSD: feed chunks, read the average at the end.

    Hann window by default; segments advance by ``window_len - overlap``.
    Output frequencies are normalized to the sample rate of the chunks and
    fftshifted to [-1/2, 1/2).
    """

    def __init__(self, window_len: int, overlap: int | None = None, window: str = "hann"):
        if window_len < 8:
            raise ValueError("segment length too short")
        if overlap is None:
            overlap = window_len // 2
        if not 0 <= overlap < window_len:
            raise ValueError("overlap must lie in [0, window_len)")
        self.window_len = window_len
        self.step = window_len - overlap
        self.window = scipy.signal.get_window(window, window_len)
        self._wnorm = np.sum(self.window**2)
        self._acc = np.zeros(window_len)
        self._count = 0
        self._tail = np.zeros(0, dtype=np.complex128)

    def process(self, chunk: np.ndarray) -> None:
        chunk = np.asarray(chunk, dtype=np.complex128).ravel()
        buf = np.concatenate([self._tail, chunk])
        pos = 0
        while pos + self.window_len <= buf.size:
            seg = buf[pos : pos + self.window_len] * self.window
            self._acc += np.abs(np.fft.fft(seg)) ** 2
            self._count += 1
            pos += self.step
        self._tail = buf[pos:]

    def result(self) -> PsdEstimate:
        if self._count == 0:
            raise ValueError("stream shorter than one Welch segment")
        psd = np.fft.fftshift(self._acc / (self._count * self._wnorm))
        freqs = np.fft.fftshift(np.fft.fftfreq(self.window_len))
        return PsdEstimate(freqs=freqs, psd=psd, segments=self._count)


def welch_psd(
    samples: np.ndarray,
    window_len: int,
    overlap: int | None = None,
    window: str = "hann",
) -> PsdEstimate:
    """One-shot Welch estimate of an in-memory sample stream."""
    acc = WelchAccumulator(window_len, overlap=overlap, window=window)
    acc.process(samples)
    return acc.result()


def normalize_inband(est: PsdEstimate, band: float) -> PsdEstimate:
    """Rescale so the mean PSD over |f| <= band/2 is one (0 dB)."""
    mask = np.abs(est.freqs) <= band / 2
    if not mask.any():
        raise ValueError("normalization band contains no frequency bins")
    ref = est.psd[mask].mean()
    if ref <= 0:
        raise ValueError("in-band power is zero; cannot normalize")
    return PsdEstimate(freqs=est.freqs, psd=est.psd / ref, segments=est.segments)


def sidelobe_level(est: PsdEstimate, band: float, offset: float) -> float:
    """PSD level, in dB relative to the in-band mean, at band-edge + offset.

    ``offset`` is a normalized frequency offset beyond the positive band
    edge; the dB value is linearly interpolated between the two neighboring
    bins.  Offset 0 reads the band edge itself.
    """
    norm = normalize_inband(est, band)
    f = band / 2 + offset
    if offset < 0 or f > norm.freqs[-1]:
        raise ValueError(f"offset {offset} falls outside the frequency grid")
    return float(np.interp(f, norm.freqs, norm.db()))


# ---------------------------------------------------------------------------
# smooth-signal power and SIR


@dataclass(frozen=True)
class SirReport:
    """Per-symbol-index power and SIR sequences, plus the closed form.

    ``per_symbol_power`` is the expected effective-data energy trace,
    ``smooth_power`` the expected data-domain smooth-signal energy, and
    ``sir_db`` their ratio against the signal power N.  ``closed_form_db``
    is present only for the unitary (beta = 0) configuration.
    """

    per_symbol_power: np.ndarray
    smooth_power: np.ndarray
    sir_db: np.ndarray
    closed_form_db: float | None = None

    def to_csv(self) -> str:
        lines = ["index,power,sir_db"]
        for i, (p, s) in enumerate(zip(self.smooth_power, self.sir_db)):
            lines.append(f"{i},{p:.17g},{s:.17g}")
        return "\n".join(lines) + "\n"


class _LowRankPowerRecursion:
    """Shared small-matrix recursion behind the power/SIR evaluators.

    Everything reduces to (V+1) x (V+1) products once the covariance
    recursion E_i = I - P_tilde - P_tilde^H + P_tilde P_tilde^H
    + P_hat E_{i-1} P_hat^H is projected onto the low-rank factors
    P_hat = L P_1 and P_tilde = L P_2 with L = A^{-1} Q P_f^{-1}.
    """

    def __init__(self, ops: NcOperators):
        L, R, T = ops.gain, ops.P_1, ops.P_2
        self.N = ops.params.N
        self.LhL = L.conj().T @ L
        self.RL = R @ L
        self.TL = T @ L
        RRh = R @ R.conj().T
        TRh = T @ R.conj().T
        self.TTh = T @ T.conj().T
        self.base_S = (
            RRh
            - self.RL @ TRh
            - TRh.conj().T @ self.RL.conj().T
            + self.RL @ self.TTh @ self.RL.conj().T
        )
        self.S0 = RRh
        self.smooth_fixed = float(np.real(np.trace(self.TTh @ self.LhL)))
        # trace(E_i) pieces: trace(P_tilde) and trace(P_tilde P_tilde^H)
        self.tr_pt = complex(np.trace(self.TL))
        self.tr_ptpt = float(np.real(np.trace(self.TTh @ self.LhL)))

    def run(self, n_symbols: int) -> tuple[np.ndarray, np.ndarray]:
        """(per_symbol_power, smooth_power) for indices 0..n_symbols-1."""
        data_power = np.empty(n_symbols)
        smooth_power = np.zeros(n_symbols)
        data_power[0] = float(self.N)
        S = self.S0.copy()
        for i in range(1, n_symbols):
            tr_hat = float(np.real(np.trace(S @ self.LhL)))
            smooth_power[i] = tr_hat + self.smooth_fixed
            data_power[i] = self.N - 2 * self.tr_pt.real + self.tr_ptpt + tr_hat
            S = self.base_S + self.RL @ S @ self.RL.conj().T
        return data_power, smooth_power


def smooth_power_curve(ops: NcOperators, n_symbols: int) -> np.ndarray:
    """Expected smooth-signal power per symbol index for i.i.d. unit data.

    Entry i is E{||A^{-1} w_i||^2}; the first symbol is emitted unsmoothed,
    so entry 0 is zero.
    """
    if n_symbols < 1:
        raise ValueError("need at least one symbol")
    return _LowRankPowerRecursion(ops).run(n_symbols)[1]


def sir_report(ops: NcOperators, n_symbols: int) -> SirReport:
    """Theoretical power and SIR sequences over symbol indices 0..n-1."""
    if n_symbols < 1:
        raise ValueError("need at least one symbol")
    data_power, smooth_power = _LowRankPowerRecursion(ops).run(n_symbols)
    with np.errstate(divide="ignore"):
        sir_db = 10.0 * np.log10(ops.params.N / smooth_power)
    closed = None
    if ops.params.beta == 0.0 or ops.params.filter_kind == "dirichlet":
        closed = closed_form_sir(ops.params)
    return SirReport(
        per_symbol_power=data_power,
        smooth_power=smooth_power,
        sir_db=sir_db,
        closed_form_db=closed,
    )


def theoretical_sir(ops: NcOperators, n_symbols: int) -> np.ndarray:
    """Per-symbol SIR (linear); the unsmoothed first entry is inf."""
    powers = smooth_power_curve(ops, n_symbols)
    with np.errstate(divide="ignore"):
        return ops.params.N / powers


def closed_form_sir(p: WaveformParams) -> float:
    """Steady-state SIR in dB of the unitary configuration: KM/(2V+2).

    Only valid at beta = 0, where the modulation matrix is unitary.
    """
    if p.beta != 0.0 and p.filter_kind != "dirichlet":
        raise ValueError(f"closed-form SIR requires beta = 0, got beta = {p.beta}")
    return 10.0 * np.log10(p.K * p.M / (2.0 * (p.V + 1)))


def empirical_sir(
    ops: NcOperators,
    rng: np.random.Generator,
    n_symbols: int,
    points: np.ndarray | None = None,
) -> float:
    """Monte-Carlo SIR (linear) over a smoothed stream, skipping the head.

    Measured where it matters: at the demodulator output, where the soft
    estimate is d + A^{-1} w, so signal and interference are the data
    vectors and the data-domain smooth contributions.  Data vectors draw
    i.i.d. from ``points`` (a unit-energy constellation) or from the
    circular complex Gaussian when omitted.  Raises when the stream carries
    no boundary discontinuity to smooth (zero interference).
    """
    if n_symbols < 2:
        raise ValueError("need at least two symbols to observe smoothing")
    N = ops.params.N
    if points is None:
        D = (
            rng.standard_normal((N, n_symbols)) + 1j * rng.standard_normal((N, n_symbols))
        ) / np.sqrt(2)
    else:
        pts = np.asarray(points, dtype=np.complex128)
        D = pts[rng.integers(0, pts.size, size=(N, n_symbols))]
    B = coefficient_stream(ops, D)
    gram = ops.A_inv_Q.conj().T @ ops.A_inv_Q
    intf = float(np.real(np.einsum("vi,vw,wi->", B[:, 1:].conj(), gram, B[:, 1:])))
    if intf <= 0:
        raise ZeroDivisionError("stream produced no smoothing interference")
    sig = float(np.sum(np.abs(D[:, 1:]) ** 2))
    return sig / intf


def mc_smooth_power(
    ops: NcOperators,
    rng: np.random.Generator,
    n_streams: int,
    n_symbols: int,
    points: np.ndarray | None = None,
) -> np.ndarray:
    """Monte-Carlo mean of ||A^{-1} w_i||^2 per symbol index over streams.

    Runs the low-rank coefficient recursion across all streams at once; no
    modulation is performed.
    """
    if n_streams < 1 or n_symbols < 1:
        raise ValueError("need at least one stream and one symbol")
    N, Vp1 = ops.params.N, ops.V + 1
    gram = ops.A_inv_Q.conj().T @ ops.A_inv_Q
    P1_gain_q = ops.P_1 @ ops.A_inv_Q
    powers = np.zeros(n_symbols)
    p1_dbar = np.zeros((Vp1, n_streams), dtype=np.complex128)
    pts = None if points is None else np.asarray(points, dtype=np.complex128)
    for i in range(n_symbols):
        if pts is None:
            D = (
                rng.standard_normal((N, n_streams))
                + 1j * rng.standard_normal((N, n_streams))
            ) / np.sqrt(2)
        else:
            D = pts[rng.integers(0, pts.size, size=(N, n_streams))]
        if i == 0:
            b = np.zeros((Vp1, n_streams), dtype=np.complex128)
        else:
            b = ops.P_f_inv @ (p1_dbar - ops.P_2 @ D)
        powers[i] = float(np.real(np.einsum("vi,vw,wi->", b.conj(), gram, b))) / n_streams
        p1_dbar = ops.P_1 @ D + P1_gain_q @ b
    return powers
