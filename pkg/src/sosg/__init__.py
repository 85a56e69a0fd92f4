"""Lower and upper previsions of polynomial gambles via sum-of-squares certificates."""

from .cones import (
    MomentVector,
    SemiAlgebraicSet,
    XiCertificate,
    apply_functional,
    localizing_matrix,
    moment_matrix,
    sos_check,
    sos_decompose,
    xi_certificate,
    xi_check,
)
from .errors import ChainValidationError, ConditioningOnNullEvent, InconclusiveError
from .piecewise import PiecewisePolynomial, call_payoff, indicator_at_least, pw_lower_prevision, pw_upper_prevision
from .poly import GramRepresentation, MonomialBasis, Polynomial, basis_dimension, gram_to_poly, monomial_basis
from .prevision import (
    AssessmentSet,
    PrevisionResult,
    PrevisionStatus,
    SolveOptions,
    avoids_sure_loss,
    dual_lower_prevision,
    extends,
    lower_prevision,
    upper_prevision,
)

__version__ = "0.1.0"
