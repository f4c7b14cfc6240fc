"""Logarithmic representation of evolution generators via contour integrals."""

__version__ = "0.1.0"

from .contour import (  # noqa: E402
    Contour,
    KappaCertificate,
    certify_kappa,
    choose_kappa,
    holomorphic_calculus,
    shifted_log,
    shifted_log_derivative,
)
from .evolution import (  # noqa: E402
    GeneratorFamily,
    PropagatorGrid,
    RepresentationReport,
    build_family,
    log_representation,
    propagator,
    regularized_trajectory,
    representation_eq5,
)
from .operator_core import (  # noqa: E402
    commutator_residual,
    eigenvalues,
    lu_solve,
    matrix_exp,
    operator_norm_estimate,
)
from .swap import (  # noqa: E402
    ProblemSpec,
    SpaceTimeField,
    compare_directions,
    illposedness_indicator,
    reslice_discrete_trajectory,
    solve_direction,
)

__all__ = [
    "Contour",
    "GeneratorFamily",
    "KappaCertificate",
    "ProblemSpec",
    "PropagatorGrid",
    "RepresentationReport",
    "SpaceTimeField",
    "build_family",
    "certify_kappa",
    "choose_kappa",
    "commutator_residual",
    "compare_directions",
    "eigenvalues",
    "holomorphic_calculus",
    "illposedness_indicator",
    "log_representation",
    "lu_solve",
    "matrix_exp",
    "operator_norm_estimate",
    "propagator",
    "regularized_trajectory",
    "representation_eq5",
    "reslice_discrete_trajectory",
    "shifted_log",
    "shifted_log_derivative",
    "solve_direction",
]
