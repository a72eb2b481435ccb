"""Out-of-band emission of OFDM, GFDM, and smoothed GFDM, side by side.

Streams 10^4 symbols per variant through the Welch accumulator and reads
the sidelobe level half a subcarrier spacing and one spacing past the
band edge.  Writes the full PSD tables next to this script's working
directory via the experiment runner.
"""

import sys

from ncgfdm import ExperimentConfig, run_psd, write_tables
from ncgfdm.spectrum import PsdEstimate, sidelobe_level

import numpy as np

cfg = ExperimentConfig(
    kind="psd",
    K=64,
    M=7,
    n_cp=70,
    beta=0.1,
    oversample=4,
    variants=("ofdm", "gfdm", "nc-gfdm:2", "nc-gfdm:6"),
    n_symbols=10_000,
    window_len=1792,
    overlap=448,
    seed=42,
)

tables = run_psd(cfg)
band = 1.0 / cfg.oversample
spacing = 1.0 / (cfg.K * cfg.oversample)

print(f"{'variant':<12} {'+0.5 spacing':>14} {'+1.0 spacing':>14}")
for t in tables:
    freqs = np.array([r[0] for r in t.rows])
    psd = 10.0 ** (np.array([r[1] for r in t.rows]) / 10.0)
    est = PsdEstimate(freqs=freqs, psd=psd, segments=t.provenance["segments"])
    half = sidelobe_level(est, band, 0.5 * spacing)
    one = sidelobe_level(est, band, 1.0 * spacing)
    print(f"{t.provenance['variant']:<12} {half:>11.1f} dB {one:>11.1f} dB")

out = sys.argv[1] if len(sys.argv) > 1 else "."
for path in write_tables(cfg, tables, out):
    print("wrote", path)
