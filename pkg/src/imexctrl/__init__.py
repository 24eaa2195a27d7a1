"""IMEX Runge-Kutta discretization of ODE-constrained optimal control.

The package provides:

* tableaus for implicit-explicit additive Runge-Kutta methods plus the
  coefficient transform that yields their discrete adjoint schemes
  (:mod:`imexctrl.tableau`);
* machine verification of order, adjoint-coupling, and symplecticity
  conditions (:mod:`imexctrl.order_check`);
* benchmark control problems with hand-coded derivatives
  (:mod:`imexctrl.problems`);
* forward state integration and three equivalent adjoint sweeps
  (:mod:`imexctrl.integrate`);
* reduced-gradient assembly and a matrix-free quasi-Newton control solver
  (:mod:`imexctrl.optimize`);
* the coupled state/adjoint one-step map and its symplecticity residual
  (:mod:`imexctrl.symplectic`);
* grid-refinement studies (:mod:`imexctrl.convergence`) and a command line
  front end (:mod:`imexctrl.cli`).
"""

from .convergence import (
    EXACT_CONTROL,
    OPTIMIZED,
    ConvergenceReport,
    ConvergenceRow,
    run_convergence,
)
from .integrate import (
    AdjointTrajectory,
    ControlGrid,
    ControlMode,
    IntegrationError,
    Trajectory,
    UnsupportedStructureError,
    adjoint_backward,
    adjoint_block,
    adjoint_rescaled,
    adjoint_to_csv,
    forward,
    interpolate_stage_states,
    trajectory_to_csv,
    transformed_stages,
)
from .optimize import (
    ReducedGradient,
    SolveResult,
    discrete_hamiltonian_gradient_check,
    fd_objective_gradient,
    reduced_gradient,
    solve,
    solve_log_to_csv,
    stepwise_gradient,
)
from .order_check import (
    Condition,
    ConditionReport,
    adjoint_coupling_conditions,
    adjoint_gamma_conditions,
    forward_conditions,
    symplectic_conditions,
)
from .problems import (
    ControlProblem,
    HamiltonianProblem,
    SingularControlError,
    derivative_check,
    hager_exact_control,
    hager_hamiltonian,
    hager_relaxed,
    hager_unrelaxed,
    linear_split_problem,
)
from .symplectic import (
    StepJacobian,
    SymplecticReport,
    coupled_step,
    step_jacobian,
    symplectic_report_to_csv,
    symplectic_residual,
)
from .tableau import (
    BUILTIN_SCHEMES,
    AdjointCoefficients,
    DerivedCoefficients,
    ImexTableau,
    StructuralClassification,
    TableauParseError,
    Validity,
    adjoint_coefficients,
    builtin,
    classify,
    derive_coefficients,
    parse_tableau,
    serialize_tableau,
)

__version__ = "0.1.0"

__all__ = [
    "AdjointCoefficients",
    "AdjointTrajectory",
    "BUILTIN_SCHEMES",
    "Condition",
    "ConditionReport",
    "ControlGrid",
    "ControlMode",
    "ControlProblem",
    "ConvergenceReport",
    "ConvergenceRow",
    "DerivedCoefficients",
    "EXACT_CONTROL",
    "HamiltonianProblem",
    "ImexTableau",
    "IntegrationError",
    "OPTIMIZED",
    "ReducedGradient",
    "SingularControlError",
    "SolveResult",
    "StepJacobian",
    "StructuralClassification",
    "SymplecticReport",
    "TableauParseError",
    "Trajectory",
    "UnsupportedStructureError",
    "Validity",
    "adjoint_backward",
    "adjoint_block",
    "adjoint_coefficients",
    "adjoint_coupling_conditions",
    "adjoint_gamma_conditions",
    "adjoint_rescaled",
    "adjoint_to_csv",
    "builtin",
    "classify",
    "coupled_step",
    "derivative_check",
    "derive_coefficients",
    "discrete_hamiltonian_gradient_check",
    "fd_objective_gradient",
    "forward",
    "forward_conditions",
    "hager_exact_control",
    "hager_hamiltonian",
    "hager_relaxed",
    "hager_unrelaxed",
    "interpolate_stage_states",
    "linear_split_problem",
    "parse_tableau",
    "reduced_gradient",
    "run_convergence",
    "serialize_tableau",
    "solve",
    "solve_log_to_csv",
    "step_jacobian",
    "stepwise_gradient",
    "symplectic_conditions",
    "symplectic_report_to_csv",
    "symplectic_residual",
    "trajectory_to_csv",
    "transformed_stages",
    "__version__",
]
