"""Integrable Hamiltonian systems on the deformed algebra so_{lam,alpha}(5) and its lift to T*R^5."""
from .algebra import (
    AlgebraName,
    DeformationParams,
    DeformedAlgebraElement,
    LPlusPoint,
    MetricEta,
    So5Matrix,
    bracket_lp,
    classify_algebra,
    iota_inverse,
    iota_to_so5,
    jacobi_residual,
    pencil_jacobi_residual,
    poisson_tensor,
    sl2_bracket,
    structure_constants,
)
from .dynamics import (
    ConservedSet,
    casimir_c1,
    casimir_c2,
    hamiltonian_H,
    independence_rank,
    integrals_I,
    integrate,
    involution_matrix,
    jacobian_I,
    rank_drop_condition,
    vector_field_general,
    vector_field_specific,
)
from .exceptions import *  # noqa: F401,F403
from .lift import (
    CotangentPoint,
    GroupElement,
    OrbitLabel,
    Sl2Moment,
    action_Phi,
    action_Psi,
    classify_orbit,
    dual_pair_residual,
    make_group_element,
    momentum_I,
    momentum_J,
    orbit_report,
    plucker_residual,
    signature_of_V,
)
from .lift_flow import (
    LinearBlockConstants,
    PropagatorEntries,
    QuadricChart,
    geodesic_flow,
    integrate_lift,
    lifted_hamiltonian_h,
    lifted_rhs,
    propagate_linear_block,
    reconstruct_qp,
    reconstruct_trajectory,
    reduced_integrals,
    restrict_to_quadric,
    restricted_hamiltonian_p1,
)
from .numeric import ToleranceSpec, ode_solve, quad_adaptive, root_bracketed
from .quadrature import (
    ClosedFormSolution,
    QuadratureConstants,
    closed_form_solution,
    compute_constants,
    invert_quadrature,
    quadrature_time,
    solve_closed_form,
)
from .trajectory import Trajectory

__version__ = "0.1.0"
