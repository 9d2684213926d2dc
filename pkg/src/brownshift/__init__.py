"""Numerics for the 3-Brownian shift on truncated Hardy spaces of the disk and bidisk."""
from .errors import (
    BrownshiftError,
    ConditioningError,
    DimensionError,
    IterationError,
    NumericalInstabilityError,
    StructuralError,
    TruncationError,
    ValidationError,
)
from .hardy import HardyVec1, HardyVec2, StateVec, Truncation
from .inner import BlaschkeProduct, check_g, g_function, model_space_basis, taylor_coeffs
from .operators import (
    BrownianParams,
    apply_B,
    apply_T,
    apply_T_adjoint,
    apply_T_power,
    orbit_e3_closed_form,
    restricted_norm,
    t_matrix,
)
from .subspaces import (
    TYPE_I,
    TYPE_II,
    InnerMultiplier,
    LiftedSubspaceSpec,
    SubspaceBasis,
    build_lifted,
    build_lifted_typeI,
    build_lifted_typeII,
    build_typeI_B,
    build_typeII_B,
    invariance_residual,
    lifted_spec,
    wandering_dimension,
)
from .equivalence import (
    build_intertwiner,
    decide_equivalence,
    extract_invariants,
    intertwiner_search,
    verify_intertwining,
    verify_structure,
)
from .asymptotics import (
    c00_adjoint_decay,
    c00_forward_decay,
    krylov_noncyclicity,
    power_unbounded_certificate,
)

__version__ = "0.1.0"
