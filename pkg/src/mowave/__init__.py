"""Time-domain scattering from a moving emitter and direct sampling imaging.

The package splits along the pipeline: `scene` (medium, emitter paths,
signals, obstacle meshes, receiver arrays, grids), `incident` (moving
point-source fields and retarded-time solves), `forward` (boundary
integral marching and scattered-field evaluation), `imaging` (the two
sampling indicators), and `runner` (experiment configs, presets, CLI).
"""

__version__ = "0.1.0"

from .errors import (
    AssemblyError,
    ConfigError,
    DomainError,
    EmptyDataError,
    GeometryError,
    MowaveError,
    SingularFieldError,
    SolverError,
    SupersonicError,
)
from .scene import (
    BoundaryMesh,
    CirclePath,
    GaussianPulse,
    MeasurementArray,
    Medium,
    PolylinePath,
    PulseTrain,
    SamplingGrid,
    ShapeSpec,
    SpiralPath,
    StationaryPath,
    TimeGrid,
    ZeroSignal,
    build_boundary_mesh,
    check_subsonic,
    make_receivers,
    surface_inverse_distance_integral,
)
from .incident import (
    incident_field,
    incident_on_mesh,
    point_probe_field,
    solve_retarded_time,
)
from .records import (
    DensityHistory,
    NoiseSpec,
    WaveRecord,
    load_record,
    save_record,
)
from .forward import (
    add_noise,
    approx_scattered,
    evaluate_scattered,
    march_density,
    marching_residual,
)
from .imaging import (
    IndicatorImage,
    indicator_I1,
    indicator_I2_weighted,
    indicator_I2tilde,
    kernel_Gz,
    load_image,
    normalize_image,
    probe_U,
    save_image,
)
from .render import render_heatmap
from .presets import preset_config, preset_names
from .runner import (
    ExperimentConfig,
    RunResult,
    apply_scale,
    config_hash,
    parse_config,
    run_experiment,
    serialize_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
