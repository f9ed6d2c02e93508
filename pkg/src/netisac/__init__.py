"""Coordinated transmit beamforming for networked sensing and communication.

Library layout:
  geometry   steering vectors, angles, path-loss primitives
  scene      problem instances (Scene) and channel construction (ChannelSet)
  detection  closed-form detection analytics and the Monte-Carlo detector
  conic      standard-form SDP layer with Hermitian embedding
  beamform   the max-min design problems, rank-one extraction, benchmarks
  harness    parameter sweeps, CSV/config persistence, CLI backend
"""

from .geometry import (
    ArraySpec,
    Point2D,
    SensingLinkParams,
    angle_from,
    comm_pathloss,
    round_trip_pathloss,
    steering_vector,
    target_response_matrix,
)
from .scene import (
    ChannelSet,
    PathlossParams,
    Scene,
    build_channels,
    db_to_linear,
    dbm_to_watt,
    default_paper_scene,
    load_scene,
    save_scene,
)
from .detection import (
    BeamSolution,
    DetectorSpec,
    Receiver,
    Residuals,
    Scenario,
    detection_probability,
    detector_statistics,
    detector_threshold,
    echo_energy,
    min_sample_energy,
    monte_carlo_detect,
    monte_carlo_roc,
    q_function,
    q_inverse,
    sensing_beams,
    sinr,
    stacked_mean_vector,
)
from .conic import (
    ConicProgram,
    FreeBlock,
    NonnegBlock,
    PsdBlock,
    SolveReport,
    SolveStatus,
    embed_hermitian,
    extract_hermitian,
    solve,
)
from .beamform import (
    ProblemVariant,
    Scheme,
    SdrSolution,
    build_sdr,
    rank_one_extract,
    sensing_only_variant,
    solve_and_extract,
    solve_variant,
    zf_beamformers,
    zf_power_allocation,
)

__version__ = "0.1.0"
