"""
Exception hierarchy for the exclusion toolkit.

Every error carries a module-qualified ``code`` so the CLI can report it
without a stack trace. Codes are unique across the package.
"""

from typing import Any, Dict, Optional


class ExclusionToolkitError(Exception):
    """Base class for all toolkit errors."""

    code = "toolkit.error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


# ============================================================================
# config
# ============================================================================

class UnknownProfile(ExclusionToolkitError):
    code = "config.unknown_profile"


# ============================================================================
# linalg
# ============================================================================

class NotHermitian(ExclusionToolkitError):
    code = "linalg.not_hermitian"


class NotConverged(ExclusionToolkitError):
    code = "linalg.not_converged"


class DimensionMismatch(ExclusionToolkitError):
    code = "linalg.dimension_mismatch"


# ============================================================================
# groups
# ============================================================================

class InvalidOrder(ExclusionToolkitError):
    code = "groups.invalid_order"


class InvalidGroup(ExclusionToolkitError):
    code = "groups.invalid_group"


class DimensionTooLarge(ExclusionToolkitError):
    code = "groups.dimension_too_large"


class NotUnitary(ExclusionToolkitError):
    code = "groups.not_unitary"


class NotHomomorphism(ExclusionToolkitError):
    code = "groups.not_homomorphism"


# ============================================================================
# isotypical
# ============================================================================

class NotAbelian(ExclusionToolkitError):
    code = "isotypical.not_abelian"


# ============================================================================
# exclusion
# ============================================================================

class EmptySpectrum(ExclusionToolkitError):
    code = "exclusion.empty_spectrum"


class InvalidSpectrum(ExclusionToolkitError):
    code = "exclusion.invalid_spectrum"


class PolygonInfeasible(ExclusionToolkitError):
    code = "exclusion.polygon_infeasible"


class CompletenessDefect(ExclusionToolkitError):
    code = "exclusion.completeness_defect"


class ShiftNotOrthogonal(ExclusionToolkitError):
    code = "exclusion.shift_not_orthogonal"


class GapNotPositive(ExclusionToolkitError):
    code = "exclusion.gap_not_positive"


class LabelMismatch(ExclusionToolkitError):
    code = "exclusion.label_mismatch"


class DualInfeasible(ExclusionToolkitError):
    code = "exclusion.dual_infeasible"


class ResidualTooLarge(ExclusionToolkitError):
    code = "exclusion.residual_too_large"


class UnsupportedMode(ExclusionToolkitError):
    code = "exclusion.unsupported_mode"


# ============================================================================
# pbr
# ============================================================================

class DomainError(ExclusionToolkitError):
    code = "pbr.domain_error"


class Unbounded(ExclusionToolkitError):
    code = "pbr.unbounded"


# ============================================================================
# zero_error
# ============================================================================

class DiagonalNotExcluded(ExclusionToolkitError):
    code = "zero_error.diagonal_not_excluded"


class BoundViolation(ExclusionToolkitError):
    code = "zero_error.bound_violation"


class GraphUnavailable(ExclusionToolkitError):
    code = "zero_error.graph_unavailable"


# ============================================================================
# oracle
# ============================================================================

class CapExceeded(ExclusionToolkitError):
    code = "oracle.cap_exceeded"


class Inconclusive(ExclusionToolkitError):
    code = "oracle.inconclusive"


class InvalidEnsemble(ExclusionToolkitError):
    code = "oracle.invalid_ensemble"


class OracleNotConverged(NotConverged):
    code = "oracle.not_converged"


# ============================================================================
# cli
# ============================================================================

class SchemaError(ExclusionToolkitError):
    code = "cli.schema_error"


class UnknownDemo(ExclusionToolkitError):
    code = "cli.unknown_demo"


INTERNAL_ERROR_CODE = "cli.internal_error"
