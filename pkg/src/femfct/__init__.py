"""FEM-FCT solvers for evolutionary convection-diffusion-reaction equations."""

from .assembly import (
    ProblemSpec,
    apply_dirichlet,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
)
from .errors import (
    ErrorReport,
    ErrorWorkspace,
    dh_seminorm,
    eoc,
    fct_norm,
    h1_seminorm_error,
    l2_error,
    time_integrate,
)
from .fct import (
    FluxMatrix,
    LimiterMatrix,
    MMatrixReport,
    artificial_diffusion,
    correction_vector,
    linear_fluxes,
    lump,
    m_matrix_check,
    predictor_half_step,
    prelimit,
    raw_fluxes,
    zalesak,
)
from .mesh import (
    Edge,
    MeshError,
    TriMesh,
    build_friedrichs_keller,
    build_shifted_grid,
    edge_arrays,
    edges,
    load_mesh,
    max_opposite_angle_sum,
    refine_uniform,
)
from .problems import ExactSolution, space_study_problem, time_study_problem
from .solver import Factorization, LinearSolveOptions, SolverError, solve
from .stepper import (
    ConstantLimiter,
    FixedPointOptions,
    SchemeKind,
    StepFailure,
    StepRecord,
    TimeStepper,
    ZalesakLimiter,
    run,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
