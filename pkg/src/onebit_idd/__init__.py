"""Link-level simulator and library for an uplink multiuser MIMO system
with 1-bit ADCs: quantization-aware MMSE detection with soft parallel
interference cancellation, short-block LDPC decoding with quasi-uniform
message quantization and adaptive LLR scaling, Bussgang-based channel
estimation, and a Monte-Carlo BER harness."""

from .channel import (
    QPSK,
    ChannelRealization,
    ModulationScheme,
    generate_channel,
    hard_demap,
    map_bits,
    soft_symbols,
    transmit,
)
from .config import BerRecord, SystemConfig, read_csv, write_csv
from .detector import (
    DetectorWorkspace,
    SoftSymbolBelief,
    build_filter,
    build_workspace,
    conditional_moments,
    detect_frame,
    detector_llr,
    filter_output,
    mmse_baseline_filter,
    soft_pic,
)
from .estimator import (
    PilotBlock,
    blmmse_estimate,
    build_pilot_matrix,
    scaled_ls_estimate,
)
from .idd import IddResult, run_idd
from .ldpc import (
    LdpcCode,
    QuantizerParams,
    ScalingState,
    box_plus,
    construct_code,
    encode,
    offline_scaling_train,
    online_scaling,
    quasi_uniform_quantize,
    spa_decode,
)
from .quantization import (
    BussgangStats,
    arcsine_covariance,
    bussgang_gain,
    bussgang_stats,
    cross_covariance,
    quantize_1bit,
)
from .simulate import emit_plot_script, run_ber_sweep, run_training_phase

__version__ = "0.1.0"
