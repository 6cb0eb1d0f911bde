"""
Zero-error communication from an exclusion measurement.

A zero-error POVM on a group orbit induces a classical channel g -> h with
Gamma(g|g) = 0. Its fractional packing number alpha* (a small LP solved by
the simplex method with Bland's rule) gives the assisted zero-error
capacity log2 alpha*, bounded below by log2(|G| / (|G| - 1)).
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from qexclusion.config import ZERO_ERROR_CONFIG, Tolerances, get_tolerances
from qexclusion.constants import MODE_BLOCK
from qexclusion.core.exclusion import AnyPovm, ExclusionInstance
from qexclusion.errors import (
    BoundViolation,
    DiagonalNotExcluded,
    GraphUnavailable,
    InvalidOrder,
    LabelMismatch,
    NotConverged,
)
from qexclusion.utils.solver_logger import log_solver_call

logger = logging.getLogger(__name__)

# log2(|G|/(|G|-1)) never exceeds one bit, so the stronger "> 1" wording is not reproduced
BOUND_NOTE = "bound is log2(|G|/(|G|-1)), at most 1 bit; a strict '> 1' claim does not follow from it"


@dataclass(frozen=True, eq=False)
class ConfusabilityGraph:
    """adjacency[i, j] = Gamma(outputs[j] | inputs[i])."""

    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    adjacency: NDArray[np.bool_] = field(repr=False)
    probabilities: NDArray[np.float64] = field(repr=False)
    threshold: float

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum())

    def is_complete_minus_matching(self) -> bool:
        n = len(self.inputs)
        return self.adjacency.shape == (n, n) and bool(np.array_equal(self.adjacency, ~np.eye(n, dtype=bool)))

    def without_edge(self, g: str, h: str) -> "ConfusabilityGraph":
        adjacency = self.adjacency.copy()
        adjacency[self.inputs.index(g), self.outputs.index(h)] = False
        return ConfusabilityGraph(self.inputs, self.outputs, adjacency, self.probabilities, self.threshold)

    def to_csv(self) -> str:
        """0/1 matrix, one row per input, header row of output labels."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["input"] + list(self.outputs))
        for label, row in zip(self.inputs, self.adjacency):
            writer.writerow([label] + [int(v) for v in row])
        return buffer.getvalue()


@dataclass(frozen=True)
class PackingResult:
    alpha_star: float
    weights: Dict[str, float]
    dual_prices: Dict[str, float]
    dual_objective: float
    duality_gap: float
    feasibility_defect: float
    unconstrained_inputs: Tuple[str, ...]
    pivots: int


@dataclass(frozen=True)
class CapacityBound:
    bits: float
    bound_bits: float
    alpha_star: float
    group_order: int
    note: str = BOUND_NOTE


@log_solver_call(solver_name="confusability_graph", metadata_fields={"edges": lambda g: g.edge_count})
def build_graph(
    instance: ExclusionInstance,
    povm: AnyPovm,
    threshold: Optional[float] = None,
    tolerances: Optional[Tolerances] = None,
) -> ConfusabilityGraph:
    """Gamma(h|g) = [tr(M_h |u_g><u_g|) > threshold], diagonal required false."""
    tolerances = tolerances or get_tolerances()
    threshold = tolerances.adjacency_threshold if threshold is None else float(threshold)
    if instance.mode == MODE_BLOCK:
        raise GraphUnavailable(
            "Block-level instances expose only the seed; the orbit cannot be enumerated",
            {"group": instance.group_name},
        )
    labels = instance.labels
    if sorted(povm.labels) != sorted(labels):
        raise LabelMismatch("POVM outcome labels do not match the group elements")

    n = len(labels)
    effects = [povm.effect(h) for h in labels]
    probabilities = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        u = instance.orbit_state(i)
        for j, effect in enumerate(effects):
            probabilities[i, j] = float(np.real(np.vdot(u, effect @ u)))

    diagonal = np.diag(probabilities)
    worst = int(np.argmax(diagonal))
    if diagonal[worst] > threshold:
        raise DiagonalNotExcluded(
            f"Outcome {labels[worst]} fires on its own state with probability {diagonal[worst]:.3e}",
            {"element": labels[worst], "probability": float(diagonal[worst]), "threshold": threshold},
        )

    return ConfusabilityGraph(
        inputs=tuple(labels),
        outputs=tuple(labels),
        adjacency=probabilities > threshold,
        probabilities=probabilities,
        threshold=threshold,
    )


class SimplexTableau:
    """
    Condensed dictionary for max c.x subject to A x <= b, x >= 0, with b >= 0.

    Variables 0..n-1 are structural, n..n+m-1 the slacks (initially basic).
    Each row reads x_B[i] + sum_j A[i, j] x_N[j] = b[i]; the objective is
    z + sum_j c[j] x_N[j].
    """

    def __init__(self, a: NDArray[np.float64], b: NDArray[np.float64], c: NDArray[np.float64], eps: float):
        self.m, self.n = a.shape
        self.A = np.array(a, dtype=np.float64)
        self.b = np.array(b, dtype=np.float64)
        self.c = np.array(c, dtype=np.float64)
        self.z = 0.0
        self.eps = eps
        self.nb_vars = list(range(self.n))
        self.b_vars = list(range(self.n, self.n + self.m))
        self.pivots = 0

    def pivot(self, i: int, j: int) -> None:
        piv = self.A[i, j]
        delta = self.c[j] / piv
        self.c -= delta * self.A[i]
        self.c[j] = -delta
        self.z += delta * self.b[i]

        self.A[i] /= piv
        self.A[i, j] = 1.0 / piv
        self.b[i] /= piv
        for k in range(self.m):
            if k == i:
                continue
            f = self.A[k, j]
            if f == 0.0:
                continue
            self.A[k] -= f * self.A[i]
            self.A[k, j] = -f / piv
            self.b[k] -= f * self.b[i]

        self.nb_vars[j], self.b_vars[i] = self.b_vars[i], self.nb_vars[j]
        self.pivots += 1

    def bland_primal_step(self) -> str:
        candidates = [(self.nb_vars[j], j) for j in range(self.n) if self.c[j] > self.eps]
        if not candidates:
            return "optimal"
        _, j = min(candidates)
        rows = [(self.b[i] / self.A[i, j], self.b_vars[i], i) for i in range(self.m) if self.A[i, j] > self.eps]
        if not rows:
            return "unbounded"
        _, _, i = min(rows)
        self.pivot(i, j)
        return "go_on"

    def solve(self, max_pivots: int) -> str:
        while self.pivots < max_pivots:
            status = self.bland_primal_step()
            if status != "go_on":
                return status
        raise NotConverged(f"Simplex exceeded {max_pivots} pivots", {"pivots": self.pivots})

    def primal(self) -> NDArray[np.float64]:
        x = np.zeros(self.n + self.m)
        for i, var in enumerate(self.b_vars):
            x[var] = self.b[i]
        return x[: self.n]

    def dual(self) -> NDArray[np.float64]:
        """y_i = -c at the slot of slack n+i when nonbasic, else 0."""
        y = np.zeros(self.m)
        for j, var in enumerate(self.nb_vars):
            if var >= self.n:
                y[var - self.n] = -self.c[j]
        return y


@log_solver_call(
    solver_name="simplex",
    metadata_fields={"alpha_star": lambda r: f"{r.alpha_star:.12g}", "pivots": lambda r: r.pivots},
)
def fractional_packing(graph: ConfusabilityGraph) -> PackingResult:
    """
    alpha* = max sum_x v(x) subject to sum_x v(x) Gamma(y|x) <= 1 for every y.

    Inputs with no edges are unconstrained in the raw LP; each is reported
    and counted with weight 1.
    """
    adjacency = np.asarray(graph.adjacency, dtype=bool)
    if adjacency.size == 0:
        raise GraphUnavailable("Empty confusability graph")

    degree = adjacency.sum(axis=1)
    free = [i for i in range(len(graph.inputs)) if degree[i] == 0]
    bound = [i for i in range(len(graph.inputs)) if degree[i] > 0]

    a = adjacency[bound].T.astype(np.float64)  # outputs x constrained inputs
    eps = ZERO_ERROR_CONFIG["simplex_eps"]
    tableau = SimplexTableau(a, np.ones(a.shape[0]), np.ones(a.shape[1]), eps)
    status = tableau.solve(ZERO_ERROR_CONFIG["max_pivots"]) if bound else "optimal"
    if status != "optimal":
        raise NotConverged("Packing LP reported unbounded", {"status": status})

    v = np.zeros(len(graph.inputs))
    if bound:
        v[bound] = np.maximum(tableau.primal(), 0.0)
    v[free] = 1.0
    y = np.maximum(tableau.dual(), 0.0) if bound else np.zeros(len(graph.outputs))

    primal = float(v.sum())
    dual = float(y.sum()) + len(free)
    load = adjacency.T.astype(np.float64) @ v
    feasibility = float(max(0.0, load.max() - 1.0)) if load.size else 0.0

    if free:
        logger.info(f"Fractional packing: {len(free)} unconstrained input(s) counted with weight 1")
    return PackingResult(
        alpha_star=primal,
        weights={label: float(w) for label, w in zip(graph.inputs, v)},
        dual_prices={label: float(p) for label, p in zip(graph.outputs, y)},
        dual_objective=dual,
        duality_gap=abs(primal - dual),
        feasibility_defect=feasibility,
        unconstrained_inputs=tuple(graph.inputs[i] for i in free),
        pivots=tableau.pivots if bound else 0,
    )


def lower_bound_bits(group_order: int) -> float:
    if group_order < 2:
        raise InvalidOrder(f"Capacity bound needs |G| >= 2, got {group_order}", {"order": group_order})
    return math.log2(group_order / (group_order - 1))


def capacity_lower_bound(result: PackingResult, group_order: int) -> CapacityBound:
    bound = lower_bound_bits(group_order)
    bits = math.log2(result.alpha_star) if result.alpha_star > 0 else -math.inf
    if bits < bound - ZERO_ERROR_CONFIG["bound_tol"]:
        raise BoundViolation(
            f"Achieved {bits:.6g} bits is below the guaranteed {bound:.6g} bits",
            {"bits": bits, "bound_bits": bound, "alpha_star": result.alpha_star},
        )
    return CapacityBound(bits=bits, bound_bits=bound, alpha_star=result.alpha_star, group_order=group_order)


def graph_rows(graph: ConfusabilityGraph) -> List[List[int]]:
    return [[int(v) for v in row] for row in graph.adjacency]
