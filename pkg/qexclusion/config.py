import os
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Optional

from qexclusion.errors import UnknownProfile

LOG_LEVEL = os.getenv("QEXCLUSION_LOG_LEVEL", "INFO").upper()
TOLERANCE_PROFILE = os.getenv("QEXCLUSION_TOLERANCE_PROFILE", "default")

# ============================================================================
# Kernel Configuration
# ============================================================================

LINALG_CONFIG = {
    "hermitian_tol": 1e-12,  # Absolute symmetry defect accepted as Hermitian
    "eigen_residual_rtol": 1e-9,  # ||V L V^H - A|| relative to ||A||
    "gram_tol": 1e-10,  # Eigenvector orthonormality
    "jacobi_max_sweeps": 100,  # Sweep cap before NotConverged
    "jacobi_offdiag_rtol": 1e-15,  # Stop sweeping once off-diagonal mass is this small
    "jacobi_max_dim": int(os.getenv("QEXCLUSION_JACOBI_MAX_DIM", "64")),  # "auto" uses LAPACK above this
    "rank_threshold": 1e-8,  # Projector eigenvalue threshold for rank
}

# ============================================================================
# Group Configuration
# ============================================================================

GROUP_CONFIG = {
    "max_pauli_qubits": int(os.getenv("QEXCLUSION_MAX_QUBITS", "10")),  # 2^n carrier cap
    "max_carrier_dim": int(os.getenv("QEXCLUSION_MAX_CARRIER_DIM", "1024")),  # Any builtin rep
    "unitary_tol": 1e-10,  # ||U^H U - I||
    "homomorphism_tol": 1e-10,  # ||U_gh - U_g U_h||
    "associativity_check_max_order": 24,  # Exhaustive triple check up to this order
}

# ============================================================================
# Exclusion Configuration
# ============================================================================

EXCLUSION_CONFIG = {
    "povm_residual_tol": 1e-9,  # max_g tr[M_g |u_g><u_g|]
    "completeness_tol": 1e-9,  # ||sum M_g - I||
    "psd_tol": 1e-9,  # lambda_0(M_g) >= -tol
    "gap_tol": 1e-12,  # t <= gap_tol counts as t <= 0
    "polygon_rtol": 1e-10,  # Closure residual relative to sum of lengths
    "normalization_tol": 1e-10,  # sum |a|^2 = 1
    "shift_orthogonality_tol": 1e-10,  # |tr W_{z,x}|
    "block_form_tol": 1e-9,  # Declared blocks against the commutant of the action
    "dual_tol": 1e-9,  # lambda checks on N and A_g
    "exhaustive_orbit_max_order": 16,  # Above this, covariance reduces orbit checks to g = e
}

# ============================================================================
# PBR Configuration
# ============================================================================

PBR_CONFIG = {
    "boundary_rtol": 1e-12,  # (1 + tan)^n >= 2 (1 - rtol) counts as equality
    "sweep_degrees": list(range(10, 91, 10)),  # Demo grid
}

# ============================================================================
# Zero-Error Configuration
# ============================================================================

ZERO_ERROR_CONFIG = {
    "adjacency_threshold": 1e-9,  # Gamma(h|g) = [p > threshold]
    "simplex_eps": 1e-12,  # Pivot and reduced-cost tolerance
    "duality_tol": 1e-9,  # Primal/dual objective agreement
    "bound_tol": 1e-9,  # bits >= log2(|G|/(|G|-1)) - tol
    "max_pivots": 10_000,  # Bland's rule terminates, this only guards bugs
}

# ============================================================================
# Oracle Configuration
# ============================================================================

ORACLE_CONFIG = {
    "max_states": 8,  # Ensemble size cap
    "max_dim": 16,  # Carrier dimension cap
    "max_iterations": int(os.getenv("QEXCLUSION_ORACLE_MAX_ITER", "50000")),  # Per run / per slice
    "tolerance": 1e-10,  # Primal and dual residual stop
    "bisection_width": 1e-8,  # Level-set bisection stop
    "zero_band": (1e-8, 1e-6),  # alpha inside the band is Inconclusive
    "penalty": 1.0,  # Splitting step parameter
    "method": os.getenv("QEXCLUSION_ORACLE_METHOD", "bisection"),  # bisection | splitting
    "eigen_method": "lapack",  # PSD projection backend inside the hot loop
    "witness_tol": 1e-7,  # POVM invariants on returned effects
}

# ============================================================================
# Tolerance Profiles
# ============================================================================

TOLERANCE_PROFILES = {
    "default": {
        "povm_residual": EXCLUSION_CONFIG["povm_residual_tol"],
        "completeness": EXCLUSION_CONFIG["completeness_tol"],
        "psd": EXCLUSION_CONFIG["psd_tol"],
        "dual": EXCLUSION_CONFIG["dual_tol"],
        "adjacency_threshold": ZERO_ERROR_CONFIG["adjacency_threshold"],
        "hermitian": LINALG_CONFIG["hermitian_tol"],
        "oracle": ORACLE_CONFIG["tolerance"],
    },
    "strict": {
        "povm_residual": 1e-11,
        "completeness": 1e-11,
        "psd": 1e-11,
        "dual": 1e-11,
        "adjacency_threshold": 1e-11,
        "hermitian": 1e-13,
        "oracle": 1e-11,
    },
}


@dataclass(frozen=True)
class Tolerances:
    """Resolved tolerance set used by one run."""

    profile: str
    povm_residual: float
    completeness: float
    psd: float
    dual: float
    adjacency_threshold: float
    hermitian: float
    oracle: float

    def as_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def get_tolerances(
    profile: Optional[str] = None,
    overrides: Optional[Dict[str, float]] = None,
) -> Tolerances:
    """Resolve a profile name plus scenario overrides into a Tolerances value."""
    name = profile or TOLERANCE_PROFILE
    if name not in TOLERANCE_PROFILES:
        raise UnknownProfile(f"Unknown tolerance profile: {name}", {"profile": name, "available": sorted(TOLERANCE_PROFILES)})
    tolerances = Tolerances(profile=name, **TOLERANCE_PROFILES[name])
    if overrides:
        clean = {k: float(v) for k, v in overrides.items() if v is not None}
        tolerances = replace(tolerances, **clean)
    return tolerances
