"""Channel-sounding analysis toolkit.

Extracts tapped-delay-line parameters from power delay profiles,
reconstructs band-limited channel impulse responses from them, and scores
predictions with matching losses and route-level metrics.
"""

from .core import (
    SPEED_OF_LIGHT_M_PER_NS,
    TRUNCATION_SENTINEL_DB,
    Apdp,
    Cir,
    PdpSnapshot,
    Tap,
    TdlParams,
    ToolkitError,
    db_to_linear,
    linear_to_db,
)
from .pdp import (
    DenoiseConfig,
    ExtractConfig,
    compute_k_factor,
    denoise,
    estimate_noise_floor,
    extract_taps,
    integrate_tap_powers,
    local_peak_mask,
    pdp_to_tdl,
    sliding_average,
)
from .synth import (
    SamplingSpec,
    absolute_delays,
    cir_to_pdp,
    draw_first_tap_coeff,
    draw_rayleigh_coeff,
    generate_ensemble,
    run_roundtrip,
    sample_cir,
    split_power_by_k,
)
from .metrics import (
    EvalReport,
    evaluate_route,
    pdp_cosine_similarity,
    received_power_db,
    rms_delay_spread,
    rmse,
)
from .losses import (
    MatchConfig,
    TapAssignment,
    hungarian_assign,
    match_loss,
    repulsion_loss,
    stage1_loss,
    stage2_loss,
    stage3_loss,
    temporal_consistency,
)

__version__ = "0.1.0"
