"""
Payload builders for CLI reports.

Every numeric quantity is emitted as {"value", "tolerance"} so a reader can
tell which check it was held to.
"""

import platform
from typing import Any, Dict, Optional

import numpy as np
import pydantic

from qexclusion import __version__
from qexclusion.config import EXCLUSION_CONFIG, LINALG_CONFIG, PBR_CONFIG, ZERO_ERROR_CONFIG, Tolerances
from qexclusion.constants import PATH_HEISENBERG_WEYL, VERDICT_NONE
from qexclusion.core.exclusion import (
    CovariantPovm,
    ExclusionCertificate,
    ExclusionInstance,
    PovmVerification,
    phase_diagram,
)
from qexclusion.core.linalg import hermitian_eigen
from qexclusion.core.oracle import FeasibilityResult, OracleResult
from qexclusion.core.zero_error import CapacityBound, ConfusabilityGraph, PackingResult, graph_rows
from qexclusion.models import NumericField, Report
from qexclusion.utils.serialization import complex_matrix, complex_pair


def numeric(value: Any, tolerance: Optional[float] = None) -> Dict[str, Any]:
    return NumericField(value=value, tolerance=tolerance).model_dump()


def provenance(tolerances: Tolerances) -> Dict[str, Any]:
    values = tolerances.as_dict()
    profile = values.pop("profile")
    return {
        "profile": profile,
        "tolerances": values,
        "thresholds": {
            "gap": EXCLUSION_CONFIG["gap_tol"],
            "polygon_closure_rtol": EXCLUSION_CONFIG["polygon_rtol"],
            "shift_orthogonality": EXCLUSION_CONFIG["shift_orthogonality_tol"],
            "pbr_boundary_rtol": PBR_CONFIG["boundary_rtol"],
            "simplex_eps": ZERO_ERROR_CONFIG["simplex_eps"],
        },
        "versions": {
            "qexclusion": __version__,
            "numpy": np.__version__,
            "pydantic": pydantic.VERSION,
            "python": platform.python_version(),
        },
    }


def report_to_dict(report: Report) -> Dict[str, Any]:
    """Fixed field order; error and timing only when present."""
    data: Dict[str, Any] = {
        "version": report.version,
        "command": report.command,
        "verdict": report.verdict.value if report.verdict is not None else VERDICT_NONE,
        "payload": report.payload,
        "provenance": report.provenance,
    }
    if report.error is not None:
        data["error"] = report.error.model_dump()
    if report.timing is not None:
        data["timing"] = report.timing
    return data


# ============================================================================
# Exclusion
# ============================================================================

def instance_payload(instance: ExclusionInstance) -> Dict[str, Any]:
    return {
        "mode": instance.mode,
        "group": instance.group_name,
        "order": instance.group.order if instance.group is not None else None,
        "dim": instance.dim,
        "reference_dim": instance.reference_dim,
        "blocks": [
            {"label": t.label, "d": t.d, "m": t.m, "amp": complex_pair(t.amplitude), "weight": t.weight}
            for t in instance.spectrum.terms
        ],
    }


def diagram_payload(instance: ExclusionInstance) -> Dict[str, Any]:
    diagram = phase_diagram(instance.spectrum)
    return {
        "closure_residual": numeric(diagram.closure_residual, EXCLUSION_CONFIG["polygon_rtol"]),
        "rows": list(diagram.rows),
    }


def effect_summary(effect: np.ndarray, tolerances: Tolerances) -> Dict[str, Any]:
    """Dimension, rank, trace and spectrum extremes of one effect."""
    hermitian = 0.5 * (effect + effect.conj().T)
    decomposition = hermitian_eigen(hermitian)
    return {
        "dim": int(effect.shape[0]),
        "rank": int(np.count_nonzero(decomposition.eigenvalues > LINALG_CONFIG["rank_threshold"])),
        "trace": numeric(float(np.real(np.trace(effect))), tolerances.completeness),
        "hermiticity_defect": numeric(float(np.linalg.norm(effect - effect.conj().T)), tolerances.hermitian),
        "min_eigenvalue": numeric(decomposition.lambda_min, tolerances.psd),
        "max_eigenvalue": numeric(decomposition.lambda_max, tolerances.psd),
    }


def povm_payload(povm: CovariantPovm, tolerances: Tolerances, include_effect: bool = False) -> Dict[str, Any]:
    """Dense seed effect only when asked for; the summary is always there."""
    payload = {
        "path": povm.path,
        "outcomes": len(povm.labels),
        "completeness_defect": numeric(povm.completeness_defect, tolerances.completeness),
        "min_eigenvalue": numeric(povm.min_eigenvalue, tolerances.psd),
        "seed_effect_summary": effect_summary(povm.seed_effect, tolerances),
    }
    if include_effect:
        payload["seed_effect"] = complex_matrix(povm.seed_effect)
    return payload


def certificate_payload(
    certificate: ExclusionCertificate,
    instance: ExclusionInstance,
    tolerances: Tolerances,
    include_diagram: bool = True,
    include_effect: bool = False,
) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "instance": instance_payload(instance),
        "path": certificate.path,
        "t": numeric(certificate.gap, EXCLUSION_CONFIG["gap_tol"]),
    }
    if certificate.condition is not None:
        payload["condition_holds"] = certificate.condition.holds
        payload["dominant_block"] = certificate.condition.dominant
    if certificate.povm is not None:
        payload["max_error_residual"] = numeric(certificate.max_error_residual, tolerances.povm_residual)
        payload["povm"] = povm_payload(certificate.povm, tolerances, include_effect)
        if include_diagram and certificate.path != PATH_HEISENBERG_WEYL:
            payload["phase_diagram"] = diagram_payload(instance)
    if certificate.dual is not None:
        dual = certificate.dual
        payload["t_squared"] = numeric(dual.optimal_error, tolerances.dual)
        payload["dual"] = {
            "trace": numeric(dual.trace, tolerances.dual),
            "hermiticity_defect": numeric(dual.hermiticity_defect, tolerances.hermitian),
            "max_lambda": numeric(dual.max_lambda, tolerances.dual),
            "lambda0_defect": numeric(dual.lambda0_defect, tolerances.dual),
            "kernel_residual": numeric(dual.kernel_residual, tolerances.dual),
            "covariance_reduced": dual.covariance_reduced,
            "diagonal": [numeric(float(np.real(v)), tolerances.hermitian) for v in np.diag(dual.operator)]
            if instance.dim <= 64
            else None,
        }
    if certificate.reason:
        payload["reason"] = certificate.reason
    return payload


def verification_payload(verification: PovmVerification, tolerances: Tolerances) -> Dict[str, Any]:
    return {
        "passed": verification.passed,
        "errors": {label: numeric(value, tolerances.povm_residual) for label, value in verification.errors.items()},
        "max_error": numeric(verification.max_error, tolerances.povm_residual),
        "total_error": numeric(verification.total_error, tolerances.povm_residual),
        "completeness_defect": numeric(verification.completeness_defect, tolerances.completeness),
        "psd_margin": numeric(verification.psd_margin, tolerances.psd),
        "optimality": {
            "certified": verification.optimality_certified,
            "hermiticity_defect": numeric(verification.optimality_hermiticity_defect, tolerances.dual),
            "max_eigenvalue": numeric(verification.optimality_max_eigenvalue, tolerances.dual),
            "covariance_reduced": verification.covariance_reduced,
        },
        "block_constraint_defect": numeric(verification.block_constraint_defect, tolerances.completeness),
    }


# ============================================================================
# Zero-error
# ============================================================================

def capacity_payload(
    graph: ConfusabilityGraph,
    packing: PackingResult,
    bound: CapacityBound,
    povm_path: str,
) -> Dict[str, Any]:
    return {
        "povm_path": povm_path,
        "alpha_star": numeric(packing.alpha_star, ZERO_ERROR_CONFIG["duality_tol"]),
        "bound_bits": numeric(bound.bound_bits, ZERO_ERROR_CONFIG["bound_tol"]),
        "achieved_bits": numeric(bound.bits, ZERO_ERROR_CONFIG["bound_tol"]),
        "duality_gap": numeric(packing.duality_gap, ZERO_ERROR_CONFIG["duality_tol"]),
        "feasibility_defect": numeric(packing.feasibility_defect, ZERO_ERROR_CONFIG["duality_tol"]),
        "weights": packing.weights,
        "dual_prices": packing.dual_prices,
        "unconstrained_inputs": list(packing.unconstrained_inputs),
        "complete_minus_matching": graph.is_complete_minus_matching(),
        "graph": {
            "threshold": graph.threshold,
            "inputs": list(graph.inputs),
            "outputs": list(graph.outputs),
            "adjacency": graph_rows(graph),
        },
        "note": bound.note,
    }


# ============================================================================
# Oracle
# ============================================================================

def oracle_payload(result: OracleResult, tolerances: Tolerances, reference: Optional[float] = None) -> Dict[str, Any]:
    payload = {
        "method": result.method,
        "alpha": numeric(result.alpha, tolerances.oracle),
        "iterations": result.iterations,
        "converged": result.converged,
        "residuals": {k: numeric(v, tolerances.oracle) for k, v in result.residuals.items()},
    }
    if result.band is not None:
        payload["band"] = list(result.band)
    if reference is not None:
        payload["analytic_optimum"] = numeric(reference, tolerances.dual)
        payload["deviation"] = numeric(abs(result.alpha - reference), 1e-6)
    return payload


def feasibility_payload(result: FeasibilityResult, tolerances: Tolerances) -> Dict[str, Any]:
    return {
        "alpha_zero": result.feasible,
        "alpha": numeric(result.alpha, tolerances.oracle),
        "residual": numeric(result.residual, tolerances.oracle),
    }
