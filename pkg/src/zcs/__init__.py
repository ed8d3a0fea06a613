"""Phaseless scattering by zero crossings.

Synthesizes leading-order phaseless scattered data for a compact
refractive perturbation, recovers per-chord travel times from the dip
structure of that data, and inverts the resulting sinogram on a grid.
"""

from .errors import (
    AmbiguityError,
    BoundaryProximityError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    GeometryError,
    GridMismatchError,
    IntegrityError,
    NumericalError,
    ParameterError,
    PreconditionError,
    ResolutionError,
    SupportViolationError,
    ZcsError,
)
from .medium import (
    Chord,
    Geometry,
    Medium,
    Phantom,
    chord_for,
    eval_beta,
    make_phantom,
    medium_from_config,
    observation_geometry,
    phantom_config,
)
from .eikonal import (
    TravelTimeField,
    amplitude,
    chord_travel_time,
    linearized_travel_time,
    solve_eikonal,
)
from .forward import (
    PhaselessSignal,
    TwoTermModel,
    analytic_zeros,
    leading_term,
    mirror_zero_check,
    perturbed_field,
    synth_phaseless,
)
from .zerocount import (
    DensityEstimate,
    DicksonResult,
    ExpSum,
    StripRegion,
    TauEstimate,
    analytic_zeros_two_term,
    cartwright_density,
    count_zeros_rect,
    dickson_check,
    estimate_tau,
    two_term,
)
from .tomo import (
    Reconstruction,
    Sinogram,
    compare_media,
    estimate_record,
    reconstruct,
    sinogram_from_records,
    sinogram_from_signals,
    system_matrix,
    uniform_protocol,
    xray_forward,
)
from .pipeline import (
    ExperimentConfig,
    GeometrySpec,
    SignalSpec,
    SolverSpec,
    Tolerances,
    UniquenessReport,
    default_config,
    load_bundle,
    load_config,
    run_forward,
    run_recover,
    save_config,
    uniqueness_test,
    worker_count,
)

__version__ = "0.1.0"
