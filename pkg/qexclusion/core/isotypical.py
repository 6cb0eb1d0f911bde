"""
Isotypical decomposition and the group-averaging (commutant) map.

A block stores an isometry from H_mu (x) C^{m_mu} coordinates (row-major, irrep
index on the left) into the carrier; the projector is formed on demand.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from qexclusion.config import LINALG_CONFIG
from qexclusion.core.groups import FiniteGroup, UnitaryRep
from qexclusion.core.linalg import CMatrix, adjoint, as_cmatrix, hermitian_eigen, hermitize, partial_trace_left
from qexclusion.errors import DimensionMismatch, NotAbelian
from qexclusion.utils.solver_logger import log_solver_call

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Character:
    label: str
    exponents: Tuple[int, ...]
    values: NDArray[np.complex128]


@dataclass(frozen=True, eq=False)
class IsotypicBlock:
    label: str
    d: int
    m: int
    basis: CMatrix
    character: Optional[NDArray[np.complex128]] = None

    @property
    def projector(self) -> CMatrix:
        return self.basis @ adjoint(self.basis)


@dataclass(frozen=True, eq=False)
class IsotypicalDecomposition:
    blocks: Tuple[IsotypicBlock, ...]
    dim: int
    source: str = ""

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(b.label for b in self.blocks)

    def block(self, label: str) -> IsotypicBlock:
        for block in self.blocks:
            if block.label == label:
                return block
        raise KeyError(label)

    def has_block(self, label: str) -> bool:
        return any(b.label == label for b in self.blocks)

    def full_basis(self) -> Tuple[CMatrix, List[Tuple[int, int]]]:
        """Concatenated block isometries and their column ranges."""
        ranges = []
        start = 0
        for block in self.blocks:
            ranges.append((start, start + block.basis.shape[1]))
            start += block.basis.shape[1]
        basis = np.concatenate([b.basis for b in self.blocks], axis=1) if self.blocks else np.zeros((self.dim, 0))
        return basis, ranges

    def completeness_defect(self) -> float:
        total = sum((b.projector for b in self.blocks), np.zeros((self.dim, self.dim), dtype=np.complex128))
        return float(np.max(np.abs(total - np.eye(self.dim))))


def _character_label(exponents: Sequence[int], orders: Sequence[int]) -> str:
    sep = "" if all(n <= 10 for n in orders) else ","
    return sep.join(str(k) for k in exponents)


def characters(group: FiniteGroup) -> List[Character]:
    """All characters of an Abelian group, labelled by exponent tuples over its cyclic factors."""
    if not group.is_abelian:
        raise NotAbelian(f"Group {group.label} is not Abelian")
    _, orders = group.cyclic_factorization
    coords = group.coordinates
    result = []
    for exponents in np.ndindex(*orders) if orders else [()]:
        phase = np.zeros(group.order)
        for i, (k, n) in enumerate(zip(exponents, orders)):
            phase = phase + k * coords[:, i] / n
        result.append(
            Character(
                label=_character_label(exponents, orders),
                exponents=tuple(int(k) for k in exponents),
                values=np.exp(2j * np.pi * phase),
            )
        )
    return result


def _diagonal_blocks(rep: UnitaryRep, chars: List[Character]) -> List[IsotypicBlock]:
    generators, orders = rep.group.cyclic_factorization
    dim = rep.dim
    if not orders:
        return [IsotypicBlock(label=chars[0].label, d=1, m=dim, basis=np.eye(dim, dtype=np.complex128), character=chars[0].values)]

    # joint eigenvalue of basis vector j on generator i is exp(2 pi i k_i / n_i)
    exponents = np.empty((dim, len(orders)), dtype=np.int64)
    for i, (gen, n) in enumerate(zip(generators, orders)):
        angles = np.angle(rep.diagonals[gen])
        exponents[:, i] = np.rint(angles * n / (2 * np.pi)).astype(np.int64) % n

    by_label: Dict[Tuple[int, ...], List[int]] = {}
    for j, key in enumerate(map(tuple, exponents)):
        by_label.setdefault(key, []).append(j)

    blocks = []
    for char in chars:
        indices = by_label.get(char.exponents)
        if not indices:
            continue
        basis = np.zeros((dim, len(indices)), dtype=np.complex128)
        basis[indices, np.arange(len(indices))] = 1.0
        blocks.append(IsotypicBlock(label=char.label, d=1, m=len(indices), basis=basis, character=char.values))
    return blocks


def character_projector(rep: UnitaryRep, char: Character) -> CMatrix:
    """P_chi = (1/|G|) sum_g conj(chi(g)) U_g, evaluated as a product over the cyclic factors."""
    generators, orders = rep.group.cyclic_factorization
    projector = np.eye(rep.dim, dtype=np.complex128)
    for gen, n in zip(generators, orders):
        u = rep.matrix(gen)
        weight = np.conj(char.values[gen])
        factor = np.zeros_like(projector)
        power = np.eye(rep.dim, dtype=np.complex128)
        for e in range(n):
            factor += (weight ** e) * power
            power = power @ u
        projector = projector @ (factor / n)
    return projector


@log_solver_call(
    solver_name="characters",
    metadata_fields={"blocks": lambda r: len(r.blocks), "dim": lambda r: r.dim},
)
def decompose_abelian(rep: UnitaryRep) -> IsotypicalDecomposition:
    """
    Split the carrier of an Abelian representation into character eigenspaces.

    All blocks have d = 1; m is the projector rank (eigenvalue threshold
    1e-8); characters with zero rank are omitted.
    """
    group = rep.group
    if not group.is_abelian:
        raise NotAbelian(f"Representation {rep.label} is over a non-Abelian group", {"group": group.label})

    chars = characters(group)
    if rep.is_diagonal:
        blocks = _diagonal_blocks(rep, chars)
    else:
        threshold = LINALG_CONFIG["rank_threshold"]
        blocks = []
        for char in chars:
            projector = hermitize(character_projector(rep, char))
            eig = hermitian_eigen(projector, tol=1e-8)
            keep = eig.eigenvalues > threshold
            rank = int(np.count_nonzero(keep))
            if rank == 0:
                continue
            blocks.append(
                IsotypicBlock(label=char.label, d=1, m=rank, basis=eig.eigenvectors[:, keep], character=char.values)
            )

    total = sum(b.d * b.m for b in blocks)
    if total != rep.dim:
        raise DimensionMismatch(
            f"Character blocks cover {total} of {rep.dim} dimensions",
            {"covered": total, "dim": rep.dim},
        )
    logger.debug(f"Decomposed {rep.label}: {len(blocks)} blocks")
    return IsotypicalDecomposition(blocks=tuple(blocks), dim=rep.dim, source=rep.label)


def decompose_blocks(layout: Sequence[Tuple[str, int, int]]) -> IsotypicalDecomposition:
    """Block-level coordinates: the carrier is the direct sum of H_mu (x) C^{m_mu} in layout order."""
    dim = sum(d * m for _, d, m in layout)
    blocks = []
    start = 0
    for label, d, m in layout:
        size = d * m
        basis = np.zeros((dim, size), dtype=np.complex128)
        basis[start:start + size, :] = np.eye(size)
        blocks.append(IsotypicBlock(label=label, d=d, m=m, basis=basis))
        start += size
    return IsotypicalDecomposition(blocks=tuple(blocks), dim=dim, source="block-level")


def group_average(rep: UnitaryRep, m: CMatrix) -> CMatrix:
    """Unnormalized orbit sum sum_g U_g M U_g^H."""
    m = as_cmatrix(m)
    if m.shape != (rep.dim, rep.dim):
        raise DimensionMismatch(f"Expected a {rep.dim}x{rep.dim} operator, got {m.shape}")
    if rep.is_diagonal:
        phases = rep.diagonals
        return m * (phases.T @ np.conj(phases))
    stack = rep.dense
    return np.sum(stack @ m @ adjoint(stack), axis=0)


def block_twirl(decomp: IsotypicalDecomposition, m: CMatrix) -> CMatrix:
    """Schur-lemma average: the direct sum of I_{d_mu} (x) tr_{H_mu}[P_mu M P_mu] / d_mu."""
    m = as_cmatrix(m)
    if m.shape != (decomp.dim, decomp.dim):
        raise DimensionMismatch(f"Expected a {decomp.dim}x{decomp.dim} operator, got {m.shape}")
    result = np.zeros_like(m)
    for block in decomp.blocks:
        local = adjoint(block.basis) @ m @ block.basis
        reduced = partial_trace_left(local, block.d, block.m) / block.d
        result += block.basis @ np.kron(np.eye(block.d), reduced) @ adjoint(block.basis)
    return result


def commutation_defect(rep: UnitaryRep, m: CMatrix) -> float:
    """Largest |U_g M - M U_g| entry over the generators (all elements for non-Abelian groups)."""
    m = as_cmatrix(m)
    if rep.group.is_abelian:
        elements = rep.group.cyclic_factorization[0]
    else:
        elements = range(rep.group.order)
    worst = 0.0
    for g in elements:
        u = rep.matrix(g)
        worst = max(worst, float(np.max(np.abs(u @ m - m @ u))) if m.size else 0.0)
    return worst


def commutes_with(rep: UnitaryRep, m: CMatrix, tol: float = 1e-9) -> bool:
    return commutation_defect(rep, m) <= tol


@dataclass(frozen=True)
class BlockFormReport:
    holds: bool
    worst_entry: float
    location: Optional[Dict[str, object]]
    tol: float

    def __bool__(self) -> bool:
        return self.holds


def verify_block_form(decomp: IsotypicalDecomposition, m: CMatrix, tol: float = 1e-9) -> BlockFormReport:
    """
    Check that M equals the direct sum of I_{d_mu} (x) O_mu in decomposed coordinates.

    The report names the worst entry: either an off-block coupling between
    two blocks or a deviation from the I (x) O pattern inside one block.
    """
    m = as_cmatrix(m)
    basis, ranges = decomp.full_basis()
    if m.shape != (decomp.dim, decomp.dim):
        raise DimensionMismatch(f"Expected a {decomp.dim}x{decomp.dim} operator, got {m.shape}")
    local = adjoint(basis) @ m @ basis

    worst, location = 0.0, None
    for a, (block_a, (ra0, ra1)) in enumerate(zip(decomp.blocks, ranges)):
        for b, (block_b, (rb0, rb1)) in enumerate(zip(decomp.blocks, ranges)):
            piece = local[ra0:ra1, rb0:rb1]
            if a == b:
                reduced = partial_trace_left(piece, block_a.d, block_a.m) / block_a.d
                piece = piece - np.kron(np.eye(block_a.d), reduced)
            if piece.size == 0:
                continue
            i, j = np.unravel_index(int(np.argmax(np.abs(piece))), piece.shape)
            value = float(abs(piece[i, j]))
            if value > worst:
                worst = value
                location = {"row_block": block_a.label, "col_block": block_b.label, "row": int(i), "col": int(j)}

    return BlockFormReport(holds=worst <= tol, worst_entry=worst, location=location, tol=tol)


_GENERIC_SEED = 20240917


def check_declared_blocks(rep: UnitaryRep, decomp: IsotypicalDecomposition, tol: float = 1e-9) -> BlockFormReport:
    """
    Check that declared blocks are the isotypic components of ``rep``.

    The commutant of the action must be exactly the direct sum of
    I_{d_mu} (x) M_{m_mu}: the matrix units I (x) E_k0 and I (x) E_0k commute
    with every U_g, and the orbit average of a generic operator has the
    declared block form.
    """
    if decomp.dim != rep.dim:
        raise DimensionMismatch(
            f"Declared blocks cover {decomp.dim} dimensions, the action has {rep.dim}",
            {"covered": decomp.dim, "dim": rep.dim},
        )
    for block in decomp.blocks:
        for k in range(block.m):
            for row, col in {(k, 0), (0, k)}:
                unit = np.zeros((block.m, block.m), dtype=np.complex128)
                unit[row, col] = 1.0
                embedded = block.basis @ np.kron(np.eye(block.d), unit) @ adjoint(block.basis)
                defect = commutation_defect(rep, embedded)
                if defect > tol:
                    return BlockFormReport(
                        holds=False,
                        worst_entry=defect,
                        location={"block": block.label, "unit": [row, col]},
                        tol=tol,
                    )

    rng = np.random.default_rng(_GENERIC_SEED)
    generic = rng.standard_normal((rep.dim, rep.dim)) + 1j * rng.standard_normal((rep.dim, rep.dim))
    average = group_average(rep, hermitize(generic)) / rep.group.order
    report = verify_block_form(decomp, average, tol)
    logger.debug(f"Declared blocks of {rep.label}: worst entry {report.worst_entry:.3e}")
    return report
