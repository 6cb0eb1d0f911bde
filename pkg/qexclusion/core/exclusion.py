"""
Conclusive single-state exclusion for group orbits.

Decides feasibility from the block spectrum of the seed state (the polygon
condition on d_mu |a_mu|, which is also necessary for Abelian groups),
builds the witnessing covariant POVM, builds the dual certificate N with
optimal error t^2 when exclusion is impossible, and verifies any candidate
POVM against the optimality conditions.

Two instance modes:
    explicit  a concrete action; states live on the carrier and {v_mu} comes
              from the character decomposition (Abelian groups) or from
              declared blocks checked against the commutant (any finite group)
    block     no concrete action; states and effects live in decomposed
              coordinates, the direct sum of H_mu (x) C^{d_mu}, and completeness is
              checked with the Schur-lemma block average
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from qexclusion.config import EXCLUSION_CONFIG, Tolerances, get_tolerances
from qexclusion.constants import (
    IDENTITY_LABEL,
    MODE_BLOCK,
    MODE_EXPLICIT,
    PATH_ABELIAN_DUAL,
    PATH_COMPLEMENT,
    PATH_HEISENBERG_WEYL,
    PATH_POLYGON,
)
from qexclusion.core.groups import FiniteGroup, UnitaryRep
from qexclusion.core.isotypical import (
    IsotypicalDecomposition,
    IsotypicBlock,
    block_twirl,
    check_declared_blocks,
    commutation_defect,
    decompose_abelian,
    decompose_blocks,
    group_average,
)
from qexclusion.core.linalg import (
    CMatrix,
    CVector,
    adjoint,
    as_cvector,
    direct_sum_vectors,
    heisenberg_weyl,
    hermitian_eigen,
    hermiticity_defect,
    hermitize,
    outer,
    partial_trace_left,
    vectorize,
)
from qexclusion.errors import (
    CompletenessDefect,
    DualInfeasible,
    EmptySpectrum,
    GapNotPositive,
    InvalidSpectrum,
    LabelMismatch,
    NotAbelian,
    PolygonInfeasible,
    ResidualTooLarge,
    ShiftNotOrthogonal,
    UnsupportedMode,
)
from qexclusion.models import Verdict
from qexclusion.utils.solver_logger import log_solver_call

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


# ============================================================================
# Spectrum and instances
# ============================================================================

@dataclass(frozen=True)
class BlockTerm:
    label: str
    d: int
    m: int
    amplitude: complex

    @property
    def modulus(self) -> float:
        return abs(self.amplitude)

    @property
    def phase(self) -> float:
        return float(np.angle(self.amplitude)) if self.modulus > 0 else 0.0

    @property
    def weight(self) -> float:
        """d_mu |a_mu|, the side length entering the polygon condition."""
        return self.d * self.modulus


@dataclass(frozen=True)
class BlockSpectrum:
    """Seed amplitudes a_mu over labelled blocks (d_mu, m_mu)."""

    terms: Tuple[BlockTerm, ...]

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        labels = [t.label for t in terms]
        if len(set(labels)) != len(labels):
            raise InvalidSpectrum("Block labels must be unique", {"labels": labels})
        for term in terms:
            if term.d < 1 or term.m < 1:
                raise InvalidSpectrum(f"Block {term.label} needs d >= 1 and m >= 1", {"label": term.label})
        if terms:
            norm = sum(t.modulus ** 2 for t in terms)
            if abs(norm - 1.0) > EXCLUSION_CONFIG["normalization_tol"]:
                raise InvalidSpectrum(f"Seed amplitudes are not normalized (sum |a|^2 = {norm:.12f})", {"norm": norm})

    @classmethod
    def from_moduli(
        cls,
        dims: Sequence[int],
        moduli: Sequence[float],
        labels: Optional[Sequence[str]] = None,
        mults: Optional[Sequence[int]] = None,
        phases: Optional[Sequence[float]] = None,
        normalize: bool = False,
    ) -> "BlockSpectrum":
        labels = list(labels) if labels is not None else [str(i) for i in range(len(dims))]
        mults = list(mults) if mults is not None else list(dims)
        phases = list(phases) if phases is not None else [0.0] * len(dims)
        moduli = np.asarray(moduli, dtype=float)
        if normalize and moduli.size:
            moduli = moduli / np.sqrt(np.sum(moduli ** 2))
        return cls(
            tuple(
                BlockTerm(label=l, d=int(d), m=int(m), amplitude=complex(r * np.exp(1j * p)))
                for l, d, m, r, p in zip(labels, dims, mults, moduli, phases)
            )
        )

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(t.label for t in self.terms)

    def term(self, label: str) -> BlockTerm:
        for term in self.terms:
            if term.label == label:
                return term
        raise InvalidSpectrum(f"Unknown block label: {label}", {"label": label})

    def sorted_terms(self) -> List[BlockTerm]:
        """Descending d_mu |a_mu|, ties broken by label."""
        return sorted(self.terms, key=lambda t: (-t.weight, t.label))

    def reference_extension(self) -> Tuple["BlockSpectrum", int]:
        """Spectrum with m_mu = d_mu and the smallest reference dimension d_R >= max d_mu / m_mu."""
        reference_dim = max((math.ceil(t.d / t.m) for t in self.terms), default=1)
        extended = BlockSpectrum(tuple(BlockTerm(t.label, t.d, t.d, t.amplitude) for t in self.terms))
        return extended, reference_dim


def _embed_block(block: IsotypicBlock, coeffs: CMatrix) -> CVector:
    """Carrier vector of H_mu (x) C^{m_mu} coefficients, ``coeffs`` filling the leading columns."""
    local = np.zeros((block.d, block.m), dtype=np.complex128)
    local[:, : coeffs.shape[1]] = coeffs
    return block.basis @ vectorize(local)


def _with_reference(rep: UnitaryRep, reference_dim: int) -> UnitaryRep:
    """U_g (x) I_R; block rows stay contiguous and each multiplicity grows by the factor R."""
    eye = np.eye(reference_dim, dtype=np.complex128)
    dense = np.stack([np.kron(rep.matrix(g), eye) for g in range(rep.group.order)])
    dense.setflags(write=False)
    label = f"{rep.label}(x)I_{reference_dim}"
    return UnitaryRep(group=rep.group, dim=rep.dim * reference_dim, dense=dense, label=label)


@dataclass(frozen=True, eq=False)
class ExclusionInstance:
    """
    The orbit {|u_g>} of a seed state. Build with ``from_spectrum``,
    ``from_seed`` (explicit Abelian action), ``from_declared_blocks``
    (explicit action already in block coordinates) or ``block_level``.
    """

    spectrum: BlockSpectrum
    mode: str
    group: Optional[FiniteGroup] = None
    rep: Optional[UnitaryRep] = None
    decomposition: Optional[IsotypicalDecomposition] = None
    block_vectors: Optional[Tuple[CVector, ...]] = field(default=None, repr=False)
    group_name: str = ""
    reference_dim: int = 1

    @classmethod
    def from_spectrum(
        cls,
        rep: UnitaryRep,
        spectrum: BlockSpectrum,
        decomposition: Optional[IsotypicalDecomposition] = None,
    ) -> "ExclusionInstance":
        """Seed sum_mu a_mu |v_mu> with v_mu the first basis vector of character block mu."""
        decomposition = decomposition or decompose_abelian(rep)
        vectors = []
        for term in spectrum.terms:
            if not decomposition.has_block(term.label):
                raise InvalidSpectrum(
                    f"Spectrum label {term.label} is not a character block of {rep.label}",
                    {"label": term.label, "blocks": list(decomposition.labels)[:32]},
                )
            block = decomposition.block(term.label)
            if term.d != 1 or term.m != block.m:
                raise InvalidSpectrum(
                    f"Block {term.label} has d=1, m={block.m}; spectrum declares d={term.d}, m={term.m}",
                    {"label": term.label},
                )
            vectors.append(block.basis[:, 0].copy())
        return cls(
            spectrum=spectrum,
            mode=MODE_EXPLICIT,
            group=rep.group,
            rep=rep,
            decomposition=decomposition,
            block_vectors=tuple(vectors),
            group_name=rep.group.label,
        )

    @classmethod
    def from_seed(cls, rep: UnitaryRep, seed: Sequence[complex]) -> "ExclusionInstance":
        """Project a concrete seed on the character blocks; a_mu = ||P_mu psi|| and v_mu = P_mu psi / a_mu."""
        psi = as_cvector(seed)
        if psi.size != rep.dim:
            raise InvalidSpectrum(f"Seed has length {psi.size}, carrier has dimension {rep.dim}")
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > EXCLUSION_CONFIG["normalization_tol"]:
            raise InvalidSpectrum(f"Seed is not normalized (norm {norm:.12f})", {"norm": norm})

        decomposition = decompose_abelian(rep)
        terms, vectors = [], []
        for block in decomposition.blocks:
            component = block.basis @ (adjoint(block.basis) @ psi)
            amplitude = float(np.linalg.norm(component))
            if amplitude <= 1e-14:
                continue
            terms.append(BlockTerm(label=block.label, d=1, m=block.m, amplitude=complex(amplitude)))
            vectors.append(component / amplitude)

        total = sum(t.modulus ** 2 for t in terms)
        terms = [BlockTerm(t.label, t.d, t.m, t.amplitude / math.sqrt(total)) for t in terms]
        return cls(
            spectrum=BlockSpectrum(tuple(terms)),
            mode=MODE_EXPLICIT,
            group=rep.group,
            rep=rep,
            decomposition=decomposition,
            block_vectors=tuple(vectors),
            group_name=rep.group.label,
        )

    @classmethod
    def from_declared_blocks(cls, rep: UnitaryRep, spectrum: BlockSpectrum) -> "ExclusionInstance":
        """
        Explicit action whose carrier is already ordered as the declared blocks,
        each H_mu (x) C^{m_mu} with the irrep index on the left.

        The blocks are checked against the commutant of ``rep``. When some
        m_mu < d_mu the action is extended to U_g (x) I_R so that the seed
        a_mu / sqrt(d_mu) |I>> fits in every block.
        """
        layout = [(t.label, t.d, t.m) for t in spectrum.terms]
        covered = sum(d * m for _, d, m in layout)
        if covered != rep.dim:
            raise InvalidSpectrum(
                f"Declared blocks cover {covered} dimensions, {rep.label} acts on {rep.dim}",
                {"covered": covered, "dim": rep.dim},
            )
        report = check_declared_blocks(rep, decompose_blocks(layout), EXCLUSION_CONFIG["block_form_tol"])
        if not report:
            raise InvalidSpectrum(
                f"Declared blocks are not the isotypic components of {rep.label} "
                f"(worst entry {report.worst_entry:.3e})",
                {"worst_entry": report.worst_entry, "location": report.location},
            )

        reference_dim = max((math.ceil(t.d / t.m) for t in spectrum.terms), default=1)
        if reference_dim > 1:
            rep = _with_reference(rep, reference_dim)
            spectrum = BlockSpectrum(
                tuple(BlockTerm(t.label, t.d, t.m * reference_dim, t.amplitude) for t in spectrum.terms)
            )
            logger.info(f"Declared blocks extended with a reference system of dimension {reference_dim}")

        decomposition = decompose_blocks([(t.label, t.d, t.m) for t in spectrum.terms])
        vectors = tuple(
            _embed_block(block, np.eye(block.d, dtype=np.complex128) / math.sqrt(block.d))
            for block in decomposition.blocks
        )
        return cls(
            spectrum=spectrum,
            mode=MODE_EXPLICIT,
            group=rep.group,
            rep=rep,
            decomposition=decomposition,
            block_vectors=vectors,
            group_name=rep.group.label,
            reference_dim=reference_dim,
        )

    @classmethod
    def block_level(
        cls,
        spectrum: BlockSpectrum,
        group_name: str = "",
        reference_dim: int = 1,
    ) -> "ExclusionInstance":
        for term in spectrum.terms:
            if term.m != term.d:
                raise InvalidSpectrum(
                    f"Block-level mode needs m = d (block {term.label} has d={term.d}, m={term.m}); "
                    f"apply reference_extension first",
                    {"label": term.label},
                )
        decomposition = decompose_blocks([(t.label, t.d, t.m) for t in spectrum.terms])
        return cls(
            spectrum=spectrum,
            mode=MODE_BLOCK,
            decomposition=decomposition,
            group_name=group_name,
            reference_dim=reference_dim,
        )

    @property
    def is_abelian(self) -> bool:
        return self.mode == MODE_EXPLICIT and self.group is not None and self.group.is_abelian

    @property
    def dim(self) -> int:
        if self.mode == MODE_EXPLICIT:
            return self.rep.dim
        return self.decomposition.dim

    @property
    def labels(self) -> Tuple[str, ...]:
        if self.mode == MODE_EXPLICIT:
            return self.group.names
        return (IDENTITY_LABEL,)

    @property
    def orbit_size(self) -> int:
        return self.group.order if self.mode == MODE_EXPLICIT else 1

    @cached_property
    def seed(self) -> CVector:
        if self.mode == MODE_EXPLICIT:
            psi = np.zeros(self.rep.dim, dtype=np.complex128)
            for term, v in zip(self.spectrum.terms, self.block_vectors):
                psi += term.amplitude * v
            return psi
        return direct_sum_vectors(
            [term.amplitude / math.sqrt(term.d) * vectorize(np.eye(term.d)) for term in self.spectrum.terms]
        )

    def orbit_state(self, g: int) -> CVector:
        if self.mode == MODE_EXPLICIT:
            return self.rep.apply(g, self.seed)
        if g != 0:
            raise InvalidSpectrum("Block-level instances only expose the seed state (g = e)")
        return self.seed

    def orbit(self) -> Iterator[Tuple[str, CVector]]:
        for g, label in enumerate(self.labels):
            yield label, self.orbit_state(g)


# ============================================================================
# POVMs and certificates
# ============================================================================

def _norm(a: CMatrix) -> float:
    return float(np.linalg.norm(a))


@dataclass(frozen=True, eq=False)
class Povm:
    """An explicit labelled family of effects."""

    labels: Tuple[str, ...]
    effects: Tuple[CMatrix, ...] = field(repr=False)
    completeness_defect: float
    min_eigenvalue: float

    @classmethod
    def build(cls, labels: Sequence[str], effects: Sequence[CMatrix]) -> "Povm":
        effects = tuple(hermitize(np.asarray(e, dtype=np.complex128)) for e in effects)
        dim = effects[0].shape[0]
        defect = _norm(sum(effects) - np.eye(dim))
        min_eig = min(hermitian_eigen(e).lambda_min for e in effects)
        return cls(labels=tuple(labels), effects=effects, completeness_defect=defect, min_eigenvalue=min_eig)

    def effect(self, label: str) -> CMatrix:
        try:
            return self.effects[self.labels.index(label)]
        except ValueError:
            raise LabelMismatch(f"POVM has no outcome {label}", {"label": label})

    def outcomes(self) -> Iterator[Tuple[str, CMatrix]]:
        return iter(zip(self.labels, self.effects))


@dataclass(frozen=True, eq=False)
class CovariantPovm:
    """
    Orbit POVM M_g = U_g M_e U_g^H stored through its seed effect.

    Without a representation (block-level mode) the only outcome is "e" and
    the seed effect is normalized for the Haar average.
    """

    labels: Tuple[str, ...]
    seed_effect: CMatrix = field(repr=False)
    completeness_defect: float
    min_eigenvalue: float
    rep: Optional[UnitaryRep] = field(default=None, repr=False)
    path: str = PATH_POLYGON

    def effect(self, label: str) -> CMatrix:
        try:
            g = self.labels.index(label)
        except ValueError:
            raise LabelMismatch(f"POVM has no outcome {label}", {"label": label})
        if self.rep is None:
            return self.seed_effect
        return self.rep.conjugate(g, self.seed_effect)

    def outcomes(self) -> Iterator[Tuple[str, CMatrix]]:
        for label in self.labels:
            yield label, self.effect(label)

    def materialize(self) -> Povm:
        return Povm(
            labels=self.labels,
            effects=tuple(e for _, e in self.outcomes()),
            completeness_defect=self.completeness_defect,
            min_eigenvalue=self.min_eigenvalue,
        )


AnyPovm = Union[Povm, CovariantPovm]


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    gap: float
    dominant: str
    weights: Tuple[Tuple[str, float], ...]


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """N = t (|a_0| |v_0><v_0| - sum |a_mu| |v_mu><v_mu|) with its feasibility checks."""

    operator: CMatrix = field(repr=False)
    gap: float
    optimal_error: float
    phi_prime: CVector = field(repr=False)
    hermiticity_defect: float
    max_lambda: float
    lambda0_defect: float
    kernel_residual: float
    trace: float
    covariance_reduced: bool


@dataclass(frozen=True, eq=False)
class ExclusionCertificate:
    verdict: Verdict
    path: Optional[str] = None
    povm: Optional[AnyPovm] = None
    max_error_residual: Optional[float] = None
    dual: Optional[DualCertificate] = None
    gap: Optional[float] = None
    optimal_error: Optional[float] = None
    optimal_povm: Optional[CovariantPovm] = None
    condition: Optional[ConditionResult] = None
    reason: str = ""


@dataclass(frozen=True)
class PovmVerification:
    errors: Dict[str, float]
    max_error: float
    total_error: float
    completeness_defect: float
    psd_margin: float
    optimality_hermiticity_defect: float
    optimality_max_eigenvalue: float
    optimality_certified: bool
    block_constraint_defect: Optional[float]
    covariance_reduced: bool
    passed: bool


@dataclass(frozen=True)
class PhaseDiagram:
    """Head-to-tail polygon of the terms d_mu a_mu e^{-i phi_mu}; plot-ready."""

    rows: Tuple[Dict[str, float], ...]
    closure_residual: float


# ============================================================================
# Condition and phase closure
# ============================================================================

def check_sufficient_condition(spectrum: BlockSpectrum, gap_tol: Optional[float] = None) -> ConditionResult:
    """
    Signed gap t = d_0 |a_0| - sum_{mu != 0} d_mu |a_mu| over the sorted weights.

    Exclusion is possible when t <= gap_tol (default EXCLUSION_CONFIG["gap_tol"]); the boundary t = 0 counts.
    """
    if not spectrum.terms:
        raise EmptySpectrum("Spectrum has no blocks")
    ordered = spectrum.sorted_terms()
    weights = tuple((t.label, t.weight) for t in ordered)
    gap = ordered[0].weight - sum(t.weight for t in ordered[1:])
    holds = gap <= (EXCLUSION_CONFIG["gap_tol"] if gap_tol is None else gap_tol)
    return ConditionResult(holds=bool(holds), gap=float(gap), dominant=ordered[0].label, weights=weights)


def _triangle_directions(b1: float, b2: float, b3: float) -> Tuple[float, float, float]:
    cos_c = (b1 * b1 + b2 * b2 - b3 * b3) / (2.0 * b1 * b2)
    alpha = math.pi - math.acos(min(1.0, max(-1.0, cos_c)))
    tip = b1 + b2 * complex(math.cos(alpha), math.sin(alpha))
    beta = math.atan2(-tip.imag, -tip.real)
    return 0.0, alpha % TWO_PI, beta % TWO_PI


def solve_polygon_phases(lengths: Sequence[float]) -> List[float]:
    """
    Angles phi with |sum L e^{i phi}| <= 1e-10 sum L.

    Lengths are packed greedily (largest first, into the lightest of three
    bins), which keeps every bin within the sum of the other two; the three
    bin totals then close as a triangle by the law of cosines. Two lengths
    close antipodally; zero lengths get phase 0.
    """
    values = np.asarray(lengths, dtype=float).reshape(-1)
    if values.size and (np.any(values < 0) or not np.all(np.isfinite(values))):
        raise PolygonInfeasible("Lengths must be finite and non-negative", {"lengths": values.tolist()})

    phases = [0.0] * values.size
    positive = [i for i in range(values.size) if values[i] > 0.0]
    if not positive:
        return phases

    total = float(values.sum())
    largest = float(values.max())
    rest = total - largest
    if largest > rest + EXCLUSION_CONFIG["polygon_rtol"] * total:
        raise PolygonInfeasible(
            f"Largest length {largest:.6g} exceeds the sum of the rest {rest:.6g}",
            {"largest": largest, "rest": rest},
        )

    if len(positive) == 2:
        phases[positive[1]] = math.pi
        return phases

    bins = [0.0, 0.0, 0.0]
    members: List[List[int]] = [[], [], []]
    for i in sorted(positive, key=lambda k: (-values[k], k)):
        target = int(np.argmin(bins))
        bins[target] += float(values[i])
        members[target].append(i)

    directions = _triangle_directions(*bins)
    for b, indices in enumerate(members):
        for i in indices:
            phases[i] = directions[b]
    return phases


def _closing_phases(terms: Sequence[BlockTerm]) -> List[float]:
    """Measurement phases phi_mu with sum_mu d_mu a_mu e^{-i phi_mu} = 0."""
    polygon = solve_polygon_phases([t.weight for t in terms])
    return [(t.phase - p) % TWO_PI for t, p in zip(terms, polygon)]


def phase_diagram(spectrum: BlockSpectrum, phases: Optional[Sequence[float]] = None) -> PhaseDiagram:
    phases = list(phases) if phases is not None else _closing_phases(spectrum.terms)
    rows = []
    x = y = 0.0
    for term, phi in zip(spectrum.terms, phases):
        vector = term.d * term.amplitude * complex(math.cos(-phi), math.sin(-phi))
        angle = math.atan2(vector.imag, vector.real) % TWO_PI if abs(vector) > 0 else 0.0
        rows.append(
            {
                "label": term.label,
                "length": float(abs(vector)),
                "angle_rad": angle,
                "angle_deg": math.degrees(angle),
                "x0": x,
                "y0": y,
                "x1": x + vector.real,
                "y1": y + vector.imag,
            }
        )
        x, y = x + vector.real, y + vector.imag
    return PhaseDiagram(rows=tuple(rows), closure_residual=math.hypot(x, y))


# ============================================================================
# Construction
# ============================================================================

def _complement(instance: ExclusionInstance) -> CMatrix:
    """Projector onto the invariant complement of the orbit span, I minus each block's I (x) Pi_d."""
    q = np.eye(instance.dim, dtype=np.complex128)
    for term, v in zip(instance.spectrum.terms, instance.block_vectors):
        if term.d == 1:
            q -= outer(v)
            continue
        block = instance.decomposition.block(term.label)
        support = np.zeros((block.m, block.m), dtype=np.complex128)
        support[: block.d, : block.d] = np.eye(block.d)
        q -= block.basis @ np.kron(np.eye(block.d), support) @ adjoint(block.basis)
    return q


def _seed_effect(instance: ExclusionInstance, phi: CVector) -> CMatrix:
    if instance.mode == MODE_BLOCK:
        return outer(phi)
    return (outer(phi) + _complement(instance)) / instance.group.order


def _covariant_povm(instance: ExclusionInstance, seed_effect: CMatrix, path: str) -> CovariantPovm:
    seed_effect = hermitize(seed_effect)
    if instance.mode == MODE_BLOCK:
        total = block_twirl(instance.decomposition, seed_effect)
        rep = None
    else:
        total = group_average(instance.rep, seed_effect)
        rep = instance.rep
    return CovariantPovm(
        labels=instance.labels,
        seed_effect=seed_effect,
        completeness_defect=_norm(total - np.eye(instance.dim)),
        min_eigenvalue=hermitian_eigen(seed_effect).lambda_min,
        rep=rep,
        path=path,
    )


def _block_vector(term: BlockTerm, phase: float, unitary: Optional[CMatrix] = None) -> CVector:
    v = np.eye(term.d, dtype=np.complex128) if unitary is None else unitary
    return math.sqrt(term.d) * complex(math.cos(phase), math.sin(phase)) * vectorize(v)


def _check_completeness(povm: CovariantPovm, tolerances: Tolerances) -> None:
    if povm.completeness_defect > tolerances.completeness:
        raise CompletenessDefect(
            f"Completeness defect {povm.completeness_defect:.3e} exceeds {tolerances.completeness:.1e}",
            {"defect": povm.completeness_defect},
        )


@log_solver_call(solver_name="polygon_closure", metadata_fields={"outcomes": lambda p: len(p.labels)})
def construct_povm(instance: ExclusionInstance, tolerances: Optional[Tolerances] = None) -> CovariantPovm:
    """
    Orbit POVM from |phi> = direct sum of sqrt(d_mu) e^{i phi_mu} |V_mu>>, phases closing
    sum d_mu a_mu e^{-i phi_mu} = 0 so that <phi|psi> = 0.
    """
    tolerances = tolerances or get_tolerances()
    terms = instance.spectrum.terms
    phases = _closing_phases(terms)

    if instance.mode == MODE_BLOCK:
        phi = direct_sum_vectors([_block_vector(t, p) for t, p in zip(terms, phases)])
    else:
        phi = np.zeros(instance.dim, dtype=np.complex128)
        for term, p, v in zip(terms, phases, instance.block_vectors):
            phi += term.d * complex(math.cos(p), math.sin(p)) * v

    povm = _covariant_povm(instance, _seed_effect(instance, phi), PATH_POLYGON)
    _check_completeness(povm, tolerances)
    return povm


@log_solver_call(solver_name="heisenberg_weyl", metadata_fields={"outcomes": lambda p: len(p.labels)})
def construct_povm_hw_shift(
    instance: ExclusionInstance,
    shifts: Mapping[str, Tuple[int, int]],
    tolerances: Optional[Tolerances] = None,
) -> CovariantPovm:
    """
    Replace |V_mu>> by vectorize(W_{z,x} V_mu) on the designated blocks; those
    blocks then contribute nothing to <phi'|psi>, and the remaining blocks
    are closed by the polygon solver among themselves.
    """
    tolerances = tolerances or get_tolerances()
    terms = instance.spectrum.terms
    unitaries: Dict[str, CMatrix] = {}
    for label, (z, x) in shifts.items():
        term = instance.spectrum.term(label)
        if term.d == 1:
            raise ShiftNotOrthogonal(
                f"Block {label} is one-dimensional; its only Heisenberg-Weyl operator is the identity",
                {"label": label},
            )
        if not (0 <= z < term.d and 0 <= x < term.d):
            raise InvalidSpectrum(f"Shift ({z}, {x}) out of range for d={term.d}", {"label": label})
        w = heisenberg_weyl(term.d, z, x)
        overlap = abs(np.trace(w))
        if overlap > EXCLUSION_CONFIG["shift_orthogonality_tol"]:
            raise ShiftNotOrthogonal(
                f"Shift ({z}, {x}) on block {label} is not orthogonal to the identity (|tr W| = {overlap:.3e})",
                {"label": label, "overlap": float(overlap)},
            )
        unitaries[label] = w

    free = [t for t in terms if t.label not in unitaries]
    free_phases = dict(zip((t.label for t in free), _closing_phases(free))) if free else {}

    if instance.mode == MODE_BLOCK:
        phi = direct_sum_vectors(
            [_block_vector(t, free_phases.get(t.label, 0.0), unitaries.get(t.label)) for t in terms]
        )
    else:
        phi = np.zeros(instance.dim, dtype=np.complex128)
        for t, v in zip(terms, instance.block_vectors):
            if t.label in unitaries:
                phi += _embed_block(instance.decomposition.block(t.label), math.sqrt(t.d) * unitaries[t.label])
            else:
                p = free_phases[t.label]
                phi += t.d * complex(math.cos(p), math.sin(p)) * v

    povm = _covariant_povm(instance, _seed_effect(instance, phi), PATH_HEISENBERG_WEYL)
    _check_completeness(povm, tolerances)
    return povm


# ============================================================================
# Abelian dichotomy
# ============================================================================

def _require_abelian(instance: ExclusionInstance) -> None:
    if not instance.is_abelian:
        raise NotAbelian(
            f"Instance over {instance.group_name or 'a block-level group'} is not an explicit Abelian action",
            {"mode": instance.mode},
        )


def _orbit_errors(instance: ExclusionInstance, povm: AnyPovm) -> Dict[str, float]:
    errors = {}
    for g, label in enumerate(instance.labels):
        u = instance.orbit_state(g)
        errors[label] = float(np.real(np.vdot(u, povm.effect(label) @ u)))
    return errors


def _phi_prime(instance: ExclusionInstance, dominant: str) -> CVector:
    phi = np.zeros(instance.dim, dtype=np.complex128)
    for term, v in zip(instance.spectrum.terms, instance.block_vectors):
        sign = 1.0 if term.label == dominant else -1.0
        phi += sign * complex(math.cos(term.phase), math.sin(term.phase)) * v
    return phi / math.sqrt(instance.group.order)


def _checked_elements(instance: ExclusionInstance, operator: CMatrix, tol: float) -> Tuple[List[int], bool]:
    """All group elements for small groups; only e when covariance of ``operator`` is confirmed."""
    order = instance.orbit_size
    if instance.mode == MODE_BLOCK:
        return [0], True
    if order <= EXCLUSION_CONFIG["exhaustive_orbit_max_order"]:
        return list(range(order)), False
    if commutation_defect(instance.rep, operator) <= tol:
        return [0], True
    return list(range(order)), False


@log_solver_call(solver_name="abelian_dual", metadata_fields={"gap": lambda c: f"{c.gap:.6g}"})
def build_dual_certificate(instance: ExclusionInstance, tolerances: Optional[Tolerances] = None) -> DualCertificate:
    tolerances = tolerances or get_tolerances()
    _require_abelian(instance)
    condition = check_sufficient_condition(instance.spectrum)
    t = condition.gap
    if t <= EXCLUSION_CONFIG["gap_tol"]:
        raise GapNotPositive(f"Gap t = {t:.3e} is not positive", {"gap": t})

    n_operator = np.zeros((instance.dim, instance.dim), dtype=np.complex128)
    for term, v in zip(instance.spectrum.terms, instance.block_vectors):
        sign = 1.0 if term.label == condition.dominant else -1.0
        n_operator += sign * term.modulus * outer(v)
    n_operator *= t

    phi_prime = _phi_prime(instance, condition.dominant)
    psi = instance.seed
    a_e = outer(psi) - n_operator
    kernel_residual = float(np.linalg.norm(a_e @ phi_prime))
    trace = float(np.real(np.trace(n_operator)))
    herm_defect = hermiticity_defect(n_operator)

    elements, reduced = _checked_elements(instance, n_operator, tolerances.dual)
    max_lambda = -math.inf
    lambda0_defect = 0.0
    for g in elements:
        u = instance.orbit_state(g)
        top = hermitian_eigen(hermitize(n_operator - outer(u))).lambda_max
        max_lambda = max(max_lambda, top)
        lambda0_defect = max(lambda0_defect, abs(top))

    certificate = DualCertificate(
        operator=n_operator,
        gap=t,
        optimal_error=t * t,
        phi_prime=phi_prime,
        hermiticity_defect=herm_defect,
        max_lambda=max_lambda,
        lambda0_defect=lambda0_defect,
        kernel_residual=kernel_residual,
        trace=trace,
        covariance_reduced=reduced,
    )

    failures = {}
    if herm_defect > tolerances.hermitian:
        failures["hermiticity_defect"] = herm_defect
    if max_lambda > tolerances.dual:
        failures["max_lambda"] = max_lambda
    if lambda0_defect > tolerances.dual:
        failures["lambda0"] = lambda0_defect
    if kernel_residual > tolerances.dual:
        failures["kernel_residual"] = kernel_residual
    if abs(trace - t * t) > tolerances.dual:
        failures["trace_defect"] = abs(trace - t * t)
    if failures:
        raise DualInfeasible("Dual certificate failed its feasibility checks", failures)
    return certificate


def complement_povm(instance: ExclusionInstance, tolerances: Optional[Tolerances] = None) -> CovariantPovm:
    """
    M_g = (I - |u_g><u_g|) / (|G| - 1).

    Zero error by construction; complete only when the orbit is a tight frame,
    sum_g |u_g><u_g| = I. Every other outcome then fires with probability
    1/(|G|-1), giving the complete-minus-matching confusability graph.
    """
    tolerances = tolerances or get_tolerances()
    if instance.mode != MODE_EXPLICIT:
        raise UnsupportedMode("The orbit complement needs an explicit group action", {"mode": instance.mode})
    order = instance.group.order
    if order < 2:
        raise UnsupportedMode("The orbit complement needs at least two group elements", {"order": order})

    frame_defect = _norm(group_average(instance.rep, outer(instance.seed)) - np.eye(instance.dim))
    if frame_defect > tolerances.completeness:
        raise CompletenessDefect(
            f"Orbit is not a tight frame (defect {frame_defect:.3e})", {"frame_defect": frame_defect}
        )
    seed_effect = (np.eye(instance.dim, dtype=np.complex128) - outer(instance.seed)) / (order - 1)
    return _covariant_povm(instance, seed_effect, PATH_COMPLEMENT)


def dual_optimal_povm(instance: ExclusionInstance) -> CovariantPovm:
    """Seed effect |phi'><phi'| plus the invariant complement; total error t^2 when t > 0."""
    _require_abelian(instance)
    condition = check_sufficient_condition(instance.spectrum)
    phi_prime = _phi_prime(instance, condition.dominant)
    seed_effect = outer(phi_prime) + _complement(instance) / instance.group.order
    return _covariant_povm(instance, seed_effect, PATH_ABELIAN_DUAL)


@log_solver_call(solver_name="abelian_iff", metadata_fields={"verdict": lambda c: c.verdict.value})
def check_abelian_iff(instance: ExclusionInstance, tolerances: Optional[Tolerances] = None) -> ExclusionCertificate:
    """For Abelian actions the polygon condition is necessary and sufficient."""
    tolerances = tolerances or get_tolerances()
    _require_abelian(instance)
    condition = check_sufficient_condition(instance.spectrum)

    if condition.holds:
        povm = construct_povm(instance, tolerances)
        max_error = max(_orbit_errors(instance, povm).values())
        if max_error > tolerances.povm_residual:
            raise ResidualTooLarge(
                f"Constructed POVM leaves error {max_error:.3e}", {"max_error": max_error}
            )
        return ExclusionCertificate(
            verdict=Verdict.EXCLUDABLE,
            path=PATH_POLYGON,
            povm=povm,
            max_error_residual=max_error,
            gap=condition.gap,
            condition=condition,
        )

    dual = build_dual_certificate(instance, tolerances)
    return ExclusionCertificate(
        verdict=Verdict.NOT_EXCLUDABLE,
        path=PATH_ABELIAN_DUAL,
        dual=dual,
        gap=dual.gap,
        optimal_error=dual.optimal_error,
        optimal_povm=dual_optimal_povm(instance),
        condition=condition,
    )


def certify(
    instance: ExclusionInstance,
    shifts: Optional[Mapping[str, Tuple[int, int]]] = None,
    tolerances: Optional[Tolerances] = None,
) -> ExclusionCertificate:
    """
    Decision procedure: Abelian actions get the exact dichotomy; otherwise
    the polygon condition, then any supplied Heisenberg-Weyl shifts, else
    Undecided.
    """
    tolerances = tolerances or get_tolerances()
    if instance.is_abelian:
        return check_abelian_iff(instance, tolerances)

    condition = check_sufficient_condition(instance.spectrum)
    if condition.holds:
        povm = construct_povm(instance, tolerances)
        path = PATH_POLYGON
    elif shifts:
        povm = construct_povm_hw_shift(instance, shifts, tolerances)
        path = PATH_HEISENBERG_WEYL
    else:
        return ExclusionCertificate(
            verdict=Verdict.UNDECIDED,
            gap=condition.gap,
            condition=condition,
            reason="polygon condition fails and no shift construction was supplied; "
            "the condition is not necessary for non-Abelian groups",
        )

    max_error = max(_orbit_errors(instance, povm).values())
    if max_error > tolerances.povm_residual:
        raise ResidualTooLarge(f"Constructed POVM leaves error {max_error:.3e}", {"max_error": max_error})
    return ExclusionCertificate(
        verdict=Verdict.EXCLUDABLE,
        path=path,
        povm=povm,
        max_error_residual=max_error,
        gap=condition.gap,
        condition=condition,
    )


# ============================================================================
# Verification
# ============================================================================

def block_constraint_defect(decomp: IsotypicalDecomposition, m: CMatrix) -> float:
    """max_mu || tr_{H_mu}[P_mu M P_mu] - d_mu I || in block coordinates."""
    worst = 0.0
    for block in decomp.blocks:
        local = adjoint(block.basis) @ m @ block.basis
        reduced = partial_trace_left(local, block.d, block.m)
        worst = max(worst, _norm(reduced - block.d * np.eye(block.m)))
    return worst


def evaluate_error(instance: ExclusionInstance, povm: AnyPovm) -> float:
    """alpha = sum_g tr[M_g |u_g><u_g|]."""
    return float(sum(_orbit_errors(instance, povm).values()))


@log_solver_call(solver_name="verify_povm", metadata_fields={"passed": lambda r: r.passed})
def verify_povm(
    instance: ExclusionInstance,
    povm: AnyPovm,
    tolerances: Optional[Tolerances] = None,
) -> PovmVerification:
    """
    Per-outcome errors, completeness, PSD margin and the optimality test:
    N = sum_g |u_g><u_g| M_g must be Hermitian with N <= |u_g><u_g| for all g.
    """
    tolerances = tolerances or get_tolerances()
    if sorted(povm.labels) != sorted(instance.labels):
        raise LabelMismatch(
            "POVM outcome labels do not match the group elements",
            {"povm": list(povm.labels)[:32], "group": list(instance.labels)[:32]},
        )

    errors = _orbit_errors(instance, povm)
    psi = instance.seed

    if isinstance(povm, CovariantPovm):
        product = outer(psi) @ povm.seed_effect
        if instance.mode == MODE_BLOCK:
            n_operator = block_twirl(instance.decomposition, product)
            normalized = povm.seed_effect
        else:
            n_operator = group_average(instance.rep, product)
            normalized = povm.seed_effect * instance.group.order
        constraint = block_constraint_defect(instance.decomposition, normalized) if instance.decomposition else None
    else:
        n_operator = np.zeros((instance.dim, instance.dim), dtype=np.complex128)
        for g, label in enumerate(instance.labels):
            u = instance.orbit_state(g)
            n_operator += outer(u) @ povm.effect(label)
        constraint = None

    herm_defect = hermiticity_defect(n_operator)
    elements, reduced = (
        _checked_elements(instance, n_operator, tolerances.dual)
        if isinstance(povm, CovariantPovm)
        else (list(range(instance.orbit_size)), False)
    )
    max_lambda = max(
        hermitian_eigen(hermitize(n_operator - outer(instance.orbit_state(g)))).lambda_max for g in elements
    )

    max_error = max(errors.values())
    passed = (
        max_error <= tolerances.povm_residual
        and povm.completeness_defect <= tolerances.completeness
        and povm.min_eigenvalue >= -tolerances.psd
    )
    return PovmVerification(
        errors=errors,
        max_error=max_error,
        total_error=float(sum(errors.values())),
        completeness_defect=povm.completeness_defect,
        psd_margin=povm.min_eigenvalue,
        optimality_hermiticity_defect=herm_defect,
        optimality_max_eigenvalue=max_lambda,
        optimality_certified=bool(herm_defect <= tolerances.dual and max_lambda <= tolerances.dual),
        block_constraint_defect=constraint,
        covariance_reduced=reduced,
        passed=bool(passed),
    )
