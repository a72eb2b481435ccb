import numpy as np
import pytest
from scipy.special import j0

from ncgfdm.channel import (
    ChannelProfile,
    ChannelRealization,
    DeepFadeError,
    JakesFadingProcess,
    apply_channel,
    awgn,
    eva_profile,
    eva_realization,
    zf_equalize,
)


def test_eva_tap_positions_at_lte_rate():
    prof = eva_profile(sample_interval_ns=9.3)
    assert list(prof.tap_positions()) == [0, 3, 16, 33, 40, 76, 117, 186, 270]


def test_eva_powers_normalized():
    prof = eva_profile()
    p = prof.linear_powers()
    assert abs(p.sum() - 1.0) < 1e-12
    # ordering survives normalization: strongest path is the first (0 dB)
    assert np.argmax(p) == 0
    assert p[8] / p[0] == pytest.approx(10 ** (-16.9 / 10))


def test_profile_validation():
    with pytest.raises(ValueError):
        ChannelProfile((0.0, 30.0), (0.0,))
    with pytest.raises(ValueError):
        ChannelProfile((30.0, 10.0), (0.0, -1.0))
    with pytest.raises(ValueError):
        ChannelProfile((-5.0, 10.0), (0.0, -1.0))
    with pytest.raises(ValueError):
        ChannelProfile((), ())


def test_apply_channel_matches_direct_circular_convolution(rng):
    N = 32
    taps = np.zeros(N, dtype=complex)
    taps[[0, 3, 7]] = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h = ChannelRealization.from_taps(taps)
    x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    want = np.array(
        [sum(taps[l] * x[(n - l) % N] for l in range(N)) for n in range(N)]
    )
    assert np.allclose(apply_channel(h, x), want, atol=1e-12)
    # column-wise application agrees with per-column calls
    X = rng.standard_normal((N, 3)) + 1j * rng.standard_normal((N, 3))
    got = apply_channel(h, X)
    for j in range(3):
        assert np.allclose(got[:, j], apply_channel(h, X[:, j]))


def test_apply_channel_length_mismatch():
    h = ChannelRealization.from_taps(np.ones(8))
    with pytest.raises(ValueError):
        apply_channel(h, np.zeros(9))


def test_awgn_moments_and_circularity():
    gen = np.random.default_rng(5)
    n = 200_000
    y = awgn(np.zeros(n), 2.5, gen)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(2.5, rel=0.02)
    # circular symmetry: E[y^2] = 0 and equal per-quadrature variance
    assert abs(np.mean(y**2)) < 0.02
    assert np.var(y.real) == pytest.approx(1.25, rel=0.03)
    assert np.var(y.imag) == pytest.approx(1.25, rel=0.03)


def test_awgn_zero_variance_is_identity(rng):
    x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert np.array_equal(awgn(x, 0.0, rng), x)
    with pytest.raises(ValueError):
        awgn(x, -1.0, rng)


def test_jakes_autocorrelation_follows_bessel():
    """Empirical gain autocorrelation tracks J0(2 pi f_D tau).

    Averaged over many independent processes; the sum-of-sinusoids model
    converges slowly, so the tolerance is loose.
    """
    prof = eva_profile(doppler_hz=100.0)
    t_sym = 1e-4
    lags = np.arange(0, 40, 8)
    acc = np.zeros(lags.size, dtype=complex)
    n_proc = 400
    gen = np.random.default_rng(11)
    for _ in range(n_proc):
        proc = JakesFadingProcess(prof, block_len=512, symbol_duration_s=t_sym, rng=gen)
        g = np.array([proc.gains(int(i))[0] for i in range(lags.max() + 1)])
        acc += g[lags] * np.conj(g[0])
    acorr = (acc / n_proc).real
    want = j0(2 * np.pi * 100.0 * lags * t_sym)
    assert np.max(np.abs(acorr - want)) < 0.12


def test_jakes_gains_unit_mean_power():
    prof = eva_profile()
    gen = np.random.default_rng(2)
    total = 0.0
    n_proc = 2000
    for _ in range(n_proc):
        proc = JakesFadingProcess(prof, block_len=512, symbol_duration_s=1e-4, rng=gen)
        total += np.mean(np.abs(proc.gains(0)) ** 2)
    assert total / n_proc == pytest.approx(1.0, rel=0.05)


def test_realization_energy_and_sparsity():
    prof = eva_profile()
    h = eva_realization(prof, 0, np.random.default_rng(3), block_len=512)
    nz = np.flatnonzero(h.taps)
    assert list(nz) == [0, 3, 16, 33, 40, 76, 117, 186, 270]
    assert np.allclose(h.H_diag, np.fft.fft(h.taps))


def test_realization_rejects_short_block():
    prof = eva_profile()
    with pytest.raises(ValueError):
        eva_realization(prof, 0, np.random.default_rng(0), block_len=128)


def test_cyclic_prefix_absorbs_delay_spread(rng):
    """CP theorem: linear convolution of [cp | core], windowed to the core,
    equals the circular convolution of the core when the delay spread fits
    inside the prefix."""
    N, n_cp = 64, 12
    taps_short = np.zeros(N, dtype=complex)
    taps_short[[0, 4, 11]] = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h = ChannelRealization.from_taps(taps_short)
    core = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    frame = np.concatenate([core[-n_cp:], core])
    lin = np.convolve(frame, taps_short[:12])[n_cp : n_cp + N]
    assert np.allclose(lin, apply_channel(h, core), atol=1e-12)


def test_zf_equalize_inverts_channel(rng):
    N = 64
    prof = eva_profile()
    h = eva_realization(prof, 0, np.random.default_rng(9), block_len=512)
    x = rng.standard_normal(512) + 1j * rng.standard_normal(512)
    y = apply_channel(h, x)
    assert np.allclose(zf_equalize(h, y), x, atol=1e-9)
    with pytest.raises(ValueError):
        zf_equalize(h, np.zeros(N))


def test_zf_deep_fade_detection():
    # taps [1, -1, 0, ...] put an exact spectral null at bin 0
    taps = np.zeros(16, dtype=complex)
    taps[0], taps[1] = 1.0, -1.0
    h = ChannelRealization.from_taps(taps)
    with pytest.raises(DeepFadeError) as info:
        zf_equalize(h, np.ones(16, dtype=complex))
    assert info.value.bin_index == 0
