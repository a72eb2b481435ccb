"""Transceiver chain: modulation, CP framing, demodulation, iterative recovery.

All routines accept either a single vectorized symbol (1-D) or a batch of
symbols as columns of a 2-D array and preserve that shape on output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelRealization
from .filterbank import TransmitMatrix
from .params import Constellation, hard_decision
from .smoothing import NcOperators, SmootherState, smooth_stream

__all__ = [
    "gfdm_modulate",
    "add_cyclic_prefix",
    "strip_cyclic_prefix",
    "frame_stream",
    "unframe_stream",
    "demodulate",
    "TransmitResult",
    "nc_transmit_stream",
    "recover_iterative",
]


def _as_columns(d: np.ndarray) -> tuple[np.ndarray, bool]:
    d = np.asarray(d, dtype=np.complex128)
    if d.ndim == 1:
        return d[:, None], True
    if d.ndim == 2:
        return d, False
    raise ValueError("expected a vector or a matrix of column vectors")


def gfdm_modulate(tm: TransmitMatrix, d: np.ndarray) -> np.ndarray:
    """Core samples of one or more symbols: x = A d."""
    cols, squeeze = _as_columns(d)
    if cols.shape[0] != tm.N:
        raise ValueError(f"data length {cols.shape[0]} != N = {tm.N}")
    x = tm.A @ cols
    return x[:, 0] if squeeze else x


def add_cyclic_prefix(x: np.ndarray, n_cp: int) -> np.ndarray:
    """Prepend the last n_cp core samples."""
    cols, squeeze = _as_columns(x)
    if not 0 <= n_cp < cols.shape[0]:
        raise ValueError(f"CP length {n_cp} out of range for block of {cols.shape[0]}")
    framed = np.concatenate([cols[cols.shape[0] - n_cp :, :], cols], axis=0)
    return framed[:, 0] if squeeze else framed


def strip_cyclic_prefix(y: np.ndarray, n_cp: int) -> np.ndarray:
    """Drop the first n_cp samples of each framed block."""
    cols, squeeze = _as_columns(y)
    if not 0 <= n_cp < cols.shape[0]:
        raise ValueError(f"CP length {n_cp} out of range for block of {cols.shape[0]}")
    core = cols[n_cp:, :]
    return core[:, 0] if squeeze else core


def frame_stream(X: np.ndarray, n_cp: int) -> np.ndarray:
    """Serialize symbol cores (columns) into one CP-framed sample stream."""
    framed = add_cyclic_prefix(X, n_cp)
    cols, _ = _as_columns(framed)
    return cols.reshape(-1, order="F")


def unframe_stream(samples: np.ndarray, N: int, n_cp: int) -> np.ndarray:
    """Split a framed sample stream back into core columns."""
    samples = np.asarray(samples, dtype=np.complex128)
    block = N + n_cp
    if samples.size % block != 0:
        raise ValueError(f"stream length {samples.size} is not a multiple of {block}")
    framed = samples.reshape(block, -1, order="F")
    return framed[n_cp:, :]


def demodulate(
    tm: TransmitMatrix,
    y: np.ndarray,
    method: str = "zf",
    channel: ChannelRealization | None = None,
    noise_variance: float = 0.0,
) -> np.ndarray:
    """Recover soft data vectors from received core samples.

    ``mf`` and ``zf`` expect an already-equalized input; ``mmse`` works on
    the raw (un-equalized) core and needs the channel realization and the
    complex noise variance.  At beta = 0 the modulation matrix is unitary
    and mf and zf coincide.
    """
    cols, squeeze = _as_columns(y)
    if cols.shape[0] != tm.N:
        raise ValueError(f"received length {cols.shape[0]} != N = {tm.N}")
    if method == "mf":
        d = tm.A.conj().T @ cols
    elif method == "zf":
        d = tm.A_inv @ cols
    elif method == "mmse":
        if channel is None:
            H = tm.A
        else:
            # circular channel in the DFT domain: HA = F^H diag(H) F A
            H = np.fft.ifft(channel.H_diag[:, None] * np.fft.fft(tm.A, axis=0), axis=0)
        gram = H.conj().T @ H + noise_variance * np.eye(tm.N)
        d = scipy.linalg.solve(gram, H.conj().T @ cols, assume_a="pos")
    else:
        raise ValueError(f"unknown demodulation method {method!r}")
    return d[:, 0] if squeeze else d


@dataclass(frozen=True)
class TransmitResult:
    """Output of one smoothed transmit run.

    ``waveform`` is the framed sample stream; ``cores`` the smoothed symbol
    cores (columns); ``data`` the transmitted data vectors; ``data_effective``
    the effective vectors d + A^{-1} w actually carried by each core;
    ``smooth_equivalent`` the data-domain smooth contributions A^{-1} w.
    """

    waveform: np.ndarray
    cores: np.ndarray
    data: np.ndarray
    data_effective: np.ndarray
    smooth_equivalent: np.ndarray
    state: SmootherState


def nc_transmit_stream(
    ops: NcOperators, D: np.ndarray, state: SmootherState | None = None
) -> TransmitResult:
    """Smooth and frame a stream of vectorized data symbols (columns of D)."""
    cols, _ = _as_columns(D)
    X_bar, W_equiv, D_bar, out_state = smooth_stream(ops, cols, state)
    waveform = frame_stream(X_bar, ops.params.n_cp)
    return TransmitResult(
        waveform=waveform,
        cores=X_bar,
        data=cols,
        data_effective=D_bar,
        smooth_equivalent=W_equiv,
        state=out_state,
    )


def recover_iterative(
    ops: NcOperators,
    y: np.ndarray,
    c: Constellation,
    n_iter: int = 4,
    return_trajectory: bool = False,
):
    """Strip the unknown smooth signal from equalized cores by iteration.

    Each round estimates the smooth contribution from the current hard data
    estimate, removes it, and re-demodulates:

        w(r)  = P_w (A^{-1} y - d_hat(r-1))
        y(r)  = A^{-1} y - A^{-1} w(r)
        d_hat(r) = hard_decision(y(r))

    starting from d_hat(0) = 0.  Noiseless streams converge exactly once the
    hard decisions are correct.  Returns the final soft estimates, or
    (soft, trajectory) with the per-iteration soft estimates when
    ``return_trajectory`` is set.
    """
    cols, squeeze = _as_columns(y)
    if n_iter < 1:
        raise ValueError("at least one recovery iteration is required")
    z = ops.A_inv @ cols  # A^{-1} y, reused every round
    pf_p2 = ops.P_f_inv @ ops.P_2
    d_hat = np.zeros_like(cols)
    trajectory = []
    soft = z
    for _ in range(n_iter):
        b = pf_p2 @ (z - d_hat)
        soft = z - ops.A_inv_Q @ b
        trajectory.append(soft[:, 0] if squeeze else soft.copy())
        d_hat = hard_decision(soft, c)
    out = soft[:, 0] if squeeze else soft
    return (out, trajectory) if return_trajectory else out
