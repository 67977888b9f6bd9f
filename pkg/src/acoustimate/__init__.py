"""Acoustic measurement toolkit.

Synthesizes structured periodic test signals (all-pass unit pulses with
orthogonal structuring, safeguarded arbitrary spectra, swept sines) and
estimates three attributes of an acoustic path from one recording: the LTI
response, the random / time-varying component, and the signal-dependent
time-invariant component. A built-in target simulator closes the loop for
verification.
"""

from .audiofile import WAV_FORMATS, AudioFormatError, read_wav, write_wav
from .capricep import (
    HADAMARD4,
    MIX_GAINS,
    PHASE_SHAPES,
    GenerationError,
    StructuredTestSignal,
    UnitCapricep,
    build_base_unit,
    build_periodic_test_signal,
    envelope_correlation,
    gen_swept_sine,
    gen_unit_capricep,
    group_delay,
    make_structured_signal,
    phase_transition,
    shape_spectrum,
)
from .estimator import (
    InsufficientDataError,
    PolarityPairResult,
    RepetitionResult,
    SafeguardConfig,
    SdtiResult,
    SimultaneousResult,
    TransferEstimate,
    estimate_lti_linear,
    estimate_lti_periodic,
    estimate_polarity_pair,
    estimate_simultaneous,
    estimate_with_repetitions,
    even_component,
    safeguard,
    safeguard_threshold,
    safeguarded_transfer,
    serial_sdti,
    virtual_target,
)
from .report import MeasurementReport, build_report, from_json, to_csv, to_json
from .signal_core import (
    DB_FLOOR,
    AsymmetricSpectrumError,
    PeriodicSignal,
    Signal,
    Spectrum,
    ZeroDenominatorError,
    amplitude_db,
    bin_frequencies,
    cyclic_shift,
    dft,
    idft,
    mirror_spectrum,
    power_db,
    rms_envelope_db,
    spectral_divide,
    third_octave_smooth,
)
from .simulator import (
    DriftSpec,
    NoiseSpec,
    SimTarget,
    SimulationOverflowError,
    apply_target,
    synth_impulse_response,
    synth_voice_like_period,
)
from .windowing import (
    WeightingFunction,
    cosine_series_window,
    fold_to_period,
    max_sidelobe_db,
    optimize_weighting,
    periodic_weighting,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
