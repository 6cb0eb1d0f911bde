"""
Brute-force oracle for the exclusion SDP

    min  alpha = sum_j tr[rho_j M_j]   s.t.  sum_j M_j = I,  M_j >= 0

at desk scale (n <= 8 states, d <= 16). Independent of the analytic
construction; used to cross-check verdicts and the optimal error t^2.

Methods:
    bisection  (default) Dykstra alternating projections between the PSD cone
               and the level set {sum M = I, alpha <= c}, bisecting on c
    splitting  ADMM between the affine completeness set and the PSD cone,
               followed by an exact repair S^{-1/2} Z_j S^{-1/2} to a POVM

The alpha = 0 decision always runs the c = 0 slice alone.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from qexclusion.config import ORACLE_CONFIG, Tolerances
from qexclusion.constants import MODE_BLOCK, ORACLE_METHOD_BISECTION, ORACLE_METHOD_SPLITTING
from qexclusion.core.exclusion import ExclusionInstance
from qexclusion.core.linalg import adjoint, as_cmatrix, as_cvector, hermiticity_defect, inverse_sqrt_psd, outer, psd_project
from qexclusion.errors import CapExceeded, Inconclusive, InvalidEnsemble, OracleNotConverged
from qexclusion.utils.solver_logger import log_solver_call

logger = logging.getLogger(__name__)

Stack = NDArray[np.complex128]


@dataclass(frozen=True)
class OracleConfig:
    method: str = ORACLE_CONFIG["method"]
    max_iterations: int = ORACLE_CONFIG["max_iterations"]
    tolerance: float = ORACLE_CONFIG["tolerance"]
    bisection_width: float = ORACLE_CONFIG["bisection_width"]
    zero_band: Tuple[float, float] = ORACLE_CONFIG["zero_band"]
    penalty: float = ORACLE_CONFIG["penalty"]
    eigen_method: str = ORACLE_CONFIG["eigen_method"]
    witness_tol: float = ORACLE_CONFIG["witness_tol"]

    @classmethod
    def from_tolerances(cls, tolerances: Tolerances, **overrides) -> "OracleConfig":
        config = cls(tolerance=tolerances.oracle)
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(config, **clean) if clean else config


@dataclass(frozen=True, eq=False)
class EnsembleInstance:
    """Uniform-prior ensemble of density operators, stacked as (n, d, d)."""

    states: Stack = field(repr=False)
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.complex128)
        if states.ndim != 3 or states.shape[1] != states.shape[2] or states.shape[0] < 1:
            raise InvalidEnsemble(f"Expected a (n, d, d) stack of states, got shape {states.shape}")
        for j, rho in enumerate(states):
            if hermiticity_defect(rho) > 1e-10:
                raise InvalidEnsemble(f"State {j} is not Hermitian", {"index": j})
            trace = float(np.real(np.trace(rho)))
            if abs(trace - 1.0) > 1e-10:
                raise InvalidEnsemble(f"State {j} has trace {trace:.12f}", {"index": j, "trace": trace})
            lam = float(np.linalg.eigvalsh(rho).min())
            if lam < -1e-10:
                raise InvalidEnsemble(f"State {j} is not PSD (lambda_min={lam:.3e})", {"index": j, "lambda_min": lam})
        states.setflags(write=False)
        object.__setattr__(self, "states", states)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(j) for j in range(states.shape[0])))
        elif len(self.labels) != states.shape[0]:
            raise InvalidEnsemble("One label per state is required")

    @property
    def size(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @classmethod
    def from_pure(cls, vectors: Sequence[Sequence[complex]], labels: Sequence[str] = ()) -> "EnsembleInstance":
        states = []
        for j, v in enumerate(vectors):
            v = as_cvector(v)
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > 1e-10:
                raise InvalidEnsemble(f"State {j} is not normalized (norm {norm:.12f})", {"index": j})
            states.append(outer(v))
        return cls(states=np.stack(states), labels=tuple(labels))

    @classmethod
    def from_densities(cls, matrices: Sequence[Sequence[Sequence[complex]]], labels: Sequence[str] = ()) -> "EnsembleInstance":
        return cls(states=np.stack([as_cmatrix(m) for m in matrices]), labels=tuple(labels))


def ensemble_from_instance(instance: ExclusionInstance) -> EnsembleInstance:
    if instance.mode == MODE_BLOCK:
        raise InvalidEnsemble("Block-level instances have no enumerable orbit for the oracle")
    return EnsembleInstance.from_pure([u for _, u in instance.orbit()], labels=instance.labels)


@dataclass(frozen=True, eq=False)
class OracleResult:
    alpha: float
    effects: Stack = field(repr=False)
    iterations: int
    residuals: Dict[str, float]
    method: str
    converged: bool
    band: Optional[Tuple[float, float]] = None


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    feasible: bool
    alpha: float
    witness: Optional[OracleResult]
    residual: float


def _check_caps(ensemble: EnsembleInstance) -> None:
    max_states, max_dim = ORACLE_CONFIG["max_states"], ORACLE_CONFIG["max_dim"]
    if ensemble.size > max_states or ensemble.dim > max_dim:
        raise CapExceeded(
            f"Oracle handles n <= {max_states} states of dimension <= {max_dim}; got n={ensemble.size}, d={ensemble.dim}",
            {"n": ensemble.size, "d": ensemble.dim},
        )


def _objective(states: Stack, effects: Stack) -> float:
    return float(np.real(np.einsum("jab,jba->", states, effects)))


def _project_affine(y: Stack) -> Stack:
    """Nearest point with sum_j M_j = I."""
    n, d, _ = y.shape
    excess = (y.sum(axis=0) - np.eye(d)) / n
    return y - excess[np.newaxis]


def _repair(z: Stack, eigen_method: str) -> Stack:
    """S^{-1/2} Z_j S^{-1/2} with S = sum_j Z_j: an exact POVM from near-feasible PSD effects."""
    z = psd_project(z, method=eigen_method)
    root = inverse_sqrt_psd(z.sum(axis=0))
    repaired = root[np.newaxis] @ z @ adjoint(root)[np.newaxis]
    return 0.5 * (repaired + adjoint(repaired))


def _povm_residuals(effects: Stack) -> Dict[str, float]:
    d = effects.shape[1]
    return {
        "completeness": float(np.linalg.norm(effects.sum(axis=0) - np.eye(d))),
        "psd": float(min(0.0, np.linalg.eigvalsh(effects).min())),
    }


def _finalize(ensemble: EnsembleInstance, z: Stack, config: OracleConfig) -> Tuple[float, Stack]:
    effects = _repair(z, config.eigen_method)
    alpha = _objective(ensemble.states, effects)
    if alpha < -1e-12:
        raise OracleNotConverged(f"Oracle objective is negative ({alpha:.3e})", {"alpha": alpha})
    return max(alpha, 0.0), effects


def _solve_splitting(ensemble: EnsembleInstance, config: OracleConfig) -> OracleResult:
    n, d = ensemble.size, ensemble.dim
    c = ensemble.states / config.penalty
    z = np.broadcast_to(np.eye(d, dtype=np.complex128) / n, (n, d, d)).copy()
    u = np.zeros_like(z)

    primal = dual = math.inf
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        x = _project_affine(z - u - c)
        z_old = z
        z = psd_project(x + u, method=config.eigen_method)
        u = u + x - z
        primal = float(np.linalg.norm(x - z))
        dual = config.penalty * float(np.linalg.norm(z - z_old))
        if primal <= config.tolerance and dual <= config.tolerance:
            break

    converged = primal <= config.tolerance and dual <= config.tolerance
    if not converged and max(primal, dual) > config.witness_tol:
        raise OracleNotConverged(
            f"Splitting stopped after {iterations} iterations with residuals ({primal:.3e}, {dual:.3e})",
            {"iterations": iterations, "primal_residual": primal, "dual_residual": dual},
        )
    alpha, effects = _finalize(ensemble, z, config)
    residuals = {"primal": primal, "dual": dual, **_povm_residuals(effects)}
    return OracleResult(
        alpha=alpha,
        effects=effects,
        iterations=iterations,
        residuals=residuals,
        method=ORACLE_METHOD_SPLITTING,
        converged=converged,
    )


def _objective_direction(states: Stack) -> Tuple[Stack, float]:
    """Gradient of the objective within {sum M = I} and its squared norm."""
    direction = states - states.mean(axis=0, keepdims=True)
    return direction, float(np.real(np.vdot(direction, direction)))


def _level_set_projector(states: Stack, level: float):
    """Projection onto {sum M = I, sum tr[rho_j M_j] <= level}; None when that set is empty."""
    direction, norm_sq = _objective_direction(states)
    if norm_sq == 0.0:
        # objective is constant (= 1) on the affine set
        return _project_affine if level >= 1.0 else None

    def project(y: Stack) -> Stack:
        x = _project_affine(y)
        excess = _objective(states, x) - level
        if excess > 0.0:
            x = x - (excess / norm_sq) * direction
        return x

    return project


def _dykstra_slice(ensemble: EnsembleInstance, level: float, config: OracleConfig, start: Stack) -> Tuple[bool, Stack, int, float]:
    project_level = _level_set_projector(ensemble.states, level)
    if project_level is None:
        return False, start, 0, math.inf

    x = start.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    history = []
    gap = math.inf
    threshold = 100 * config.tolerance
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        y = project_level(x + p)
        p = x + p - y
        x = psd_project(y + q, method=config.eigen_method)
        q = y + q - x
        gap = float(np.linalg.norm(x - y))
        if gap <= threshold:
            return True, x, iterations, gap
        history.append(gap)
        # a persistent positive distance marks an empty intersection
        if len(history) > 200 and history[-100] - gap <= 1e-12 * max(1.0, gap):
            break
    return False, x, iterations, gap


def _solve_bisection(ensemble: EnsembleInstance, config: OracleConfig) -> OracleResult:
    n, d = ensemble.size, ensemble.dim
    uniform = np.broadcast_to(np.eye(d, dtype=np.complex128) / n, (n, d, d)).copy()
    lo, hi = 0.0, 1.0
    best = uniform
    total_iterations = 0

    feasible, x, iterations, _ = _dykstra_slice(ensemble, 0.0, config, uniform)
    total_iterations += iterations
    if feasible:
        hi, best = 0.0, x
    while hi - lo > config.bisection_width:
        mid = 0.5 * (lo + hi)
        feasible, x, iterations, _ = _dykstra_slice(ensemble, mid, config, best)
        total_iterations += iterations
        if feasible:
            hi, best = mid, x
        else:
            lo = mid

    alpha, effects = _finalize(ensemble, best, config)
    residuals = {"band_width": hi - lo, **_povm_residuals(effects)}
    return OracleResult(
        alpha=alpha,
        effects=effects,
        iterations=total_iterations,
        residuals=residuals,
        method=ORACLE_METHOD_BISECTION,
        converged=True,
        band=(lo, hi),
    )


@log_solver_call(
    solver_name="oracle",
    metadata_fields={"alpha": lambda r: f"{r.alpha:.12g}", "iterations": lambda r: r.iterations, "method": lambda r: r.method},
)
def solve_exclusion_sdp(ensemble: EnsembleInstance, config: Optional[OracleConfig] = None) -> OracleResult:
    config = config or OracleConfig()
    _check_caps(ensemble)
    if config.method == ORACLE_METHOD_SPLITTING:
        return _solve_splitting(ensemble, config)
    if config.method == ORACLE_METHOD_BISECTION:
        return _solve_bisection(ensemble, config)
    raise InvalidEnsemble(f"Unknown oracle method: {config.method}", {"method": config.method})


def check_feasibility_zero(ensemble: EnsembleInstance, config: Optional[OracleConfig] = None) -> FeasibilityResult:
    """
    alpha = 0 versus alpha > 0 from the single c = 0 Dykstra slice.

    A feasible slice is repaired into a witness POVM and its value checked
    against the zero band. An empty slice leaves the distance between the PSD
    cone and the level set; scaled by the objective gradient norm it is the
    alpha the oracle reports, and values inside the band are Inconclusive.
    """
    config = config or OracleConfig()
    _check_caps(ensemble)
    low, high = config.zero_band
    n, d = ensemble.size, ensemble.dim
    uniform = np.broadcast_to(np.eye(d, dtype=np.complex128) / n, (n, d, d)).copy()
    feasible, x, iterations, gap = _dykstra_slice(ensemble, 0.0, config, uniform)

    if feasible:
        alpha, effects = _finalize(ensemble, x, config)
        residual = gap
        if alpha <= low:
            witness = OracleResult(
                alpha=alpha,
                effects=effects,
                iterations=iterations,
                residuals={"slice_gap": gap, **_povm_residuals(effects)},
                method=ORACLE_METHOD_BISECTION,
                converged=True,
                band=(0.0, 0.0),
            )
            return FeasibilityResult(feasible=True, alpha=alpha, witness=witness, residual=residual)
    else:
        _, norm_sq = _objective_direction(ensemble.states)
        # constant objective: every POVM scores 1
        alpha = gap * math.sqrt(norm_sq) if norm_sq > 0.0 else 1.0
        residual = gap

    if alpha >= high:
        return FeasibilityResult(feasible=False, alpha=alpha, witness=None, residual=residual)
    raise Inconclusive(
        f"Oracle value {alpha:.3e} lies inside the undecided band [{low:.0e}, {high:.0e}]",
        {"alpha": alpha, "band": [low, high], "iterations": iterations},
    )
