"""tacsync: synchronized multi-sensor tactile acquisition simulator and
photometric calibration pipeline."""

from .bus import (
    AcquisitionTrace,
    BusConfig,
    FrameSet,
    assemble_frame_sets,
    predicted_frame_rate,
    predicted_latency,
    predicted_sync_error,
    predicted_transfer_time,
    simulate_rounds,
)
from .calib import (
    LookupTable,
    MlpModel,
    TransferOffsets,
    estimate_channel_offsets,
    evaluate_mae,
    fit_lookup_table,
    fit_mlp,
    load_model,
    predict_gradients,
    save_model,
    transfer_model,
)
from .core import (
    DepthMap,
    DifferentialFrame,
    GradientField,
    Light,
    SensorConfig,
    TactileFrame,
    differential,
)
from .framing import Packet, cobs_decode, cobs_encode, packet_parse, packet_serialize
from .gelsim import (
    Dataset,
    Indenter,
    default_sensor_config,
    depth_to_gradients,
    generate_dataset,
    load_dataset,
    make_indenter,
    render,
    save_dataset,
)
from .grasp import GraspScenario, GraspTrace, compare_sync, deformation_signal, run_grasp
from .mlp import MlpHyperparameters
from .poisson import BoundaryCondition, divergence, integrate_gradients
from .rng import Rng, derive_seed

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
