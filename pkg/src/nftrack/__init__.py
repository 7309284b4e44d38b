"""Environment-aware near-field channel simulation and UE position tracking."""

from .geometry import (
    EPS_GEOM,
    Point,
    Segment,
    incidence_angle,
    mirror_point,
    reflection_point,
    segments_intersect,
)
from .propagation import (
    ArrayGeometry,
    AwarenessSet,
    ConstantBeta,
    Environment,
    Fresnel,
    PathRecord,
    PathSet,
    Surface,
    build_path_set,
    channel_matrix,
    ff_channel_matrix,
    los_indicator,
    nlos_indicator,
    path_loss,
    reflection_coefficient,
    uniform_linear_array,
)
from .scenario import (
    EtaSweepRow,
    MapCell,
    Scenario,
    TrackRecord,
    classify_zone,
    map_positions,
    rmse_map,
    run_tracking,
    sample_awareness,
    sweep_eta,
    trackable,
)
from .scenario_file import ScenarioFileError, load_scenario, parse_scenario
from .signal import (
    C0,
    K_B,
    OfdmConfig,
    RxBlock,
    SignalConfig,
    default_subcarriers,
    noise_variance,
    synthesize_rx,
)
from .tracker import (
    CosineGridTracker,
    InfeasibleConfigError,
    TrackerConfig,
    TrackState,
    build_grid,
    estimate_step,
    objective,
)

__version__ = "0.1.0"
