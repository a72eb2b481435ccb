"""N-continuous GFDM: waveform simulation library and experiment runner.

The package builds matrix-based GFDM transceivers, adds the boundary
smoothing that keeps the transmitted signal and its first V derivatives
continuous across symbols, and provides the receiver-side iterative
recovery plus spectral, SIR, power, and BER analyses.
"""

from .params import (
    Constellation,
    DimensionError,
    SeededRng,
    WaveformParams,
    demap_symbols,
    grid_to_vector,
    hard_decision,
    map_bits,
    qam_constellation,
    validate_params,
    vector_to_grid,
)
from .filterbank import (
    PrototypeFilter,
    SingularMatrixError,
    TransmitMatrix,
    build_transmit_matrix,
    prototype_filter,
    shifted_filter,
)
from .smoothing import (
    BasisSet,
    NcOperators,
    SmootherState,
    basis_signal,
    boundary_mismatch,
    boundary_mismatch_dft,
    build_basis,
    build_nc_operators,
    coefficient_stream,
    derivative_scales,
    smooth_stream,
    smooth_symbol,
    synthesis_waveform,
)
from .channel import (
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
from .transceiver import (
    TransmitResult,
    add_cyclic_prefix,
    demodulate,
    frame_stream,
    gfdm_modulate,
    nc_transmit_stream,
    recover_iterative,
    strip_cyclic_prefix,
    unframe_stream,
)
from .spectrum import (
    PsdEstimate,
    SirReport,
    WelchAccumulator,
    closed_form_sir,
    empirical_sir,
    mc_smooth_power,
    normalize_inband,
    oversample_stream,
    psd_sample_stream,
    sidelobe_level,
    sir_report,
    smooth_power_curve,
    theoretical_sir,
    welch_psd,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    ValidationReport,
    apply_preset,
    run_ber,
    run_experiment,
    run_power,
    run_psd,
    run_sir,
    run_validation,
    write_tables,
)
from .matio import load_matrix, save_matrix

__version__ = "0.1.0"
