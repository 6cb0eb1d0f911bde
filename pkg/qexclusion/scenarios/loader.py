"""
Scenario files to toolkit objects.

Descriptors are validated by the pydantic models first; this module only
turns validated data into groups, representations, instances, POVMs and
ensembles.
"""

import json
import logging
from functools import reduce
from pathlib import Path
from typing import Optional, Union

import numpy as np

from qexclusion.constants import (
    GROUP_KIND_CLOCK,
    GROUP_KIND_CONTINUOUS,
    GROUP_KIND_CYCLIC,
    GROUP_KIND_EXPLICIT,
    GROUP_KIND_PAULI_Z,
    GROUP_KIND_PRODUCT,
    MODE_BLOCK,
)
from qexclusion.core.exclusion import BlockSpectrum, BlockTerm, ExclusionInstance, Povm
from qexclusion.core.groups import (
    UnitaryRep,
    clock_rep,
    cyclic,
    direct_product,
    from_cayley,
    pauli_z_rep,
    regular_rep,
    rep_from_matrices,
)
from qexclusion.core.oracle import EnsembleInstance, ensemble_from_instance
from qexclusion.errors import InvalidEnsemble, InvalidSpectrum, SchemaError
from qexclusion.models import (
    ComplexMatrix,
    EnsembleDescriptor,
    InstanceDescriptor,
    PovmDescriptor,
    ScenarioFile,
    to_complex,
)

logger = logging.getLogger(__name__)


def load_scenario(source: Union[str, Path, dict]) -> ScenarioFile:
    """Parse and validate a scenario from a path or an already-decoded dict."""
    if isinstance(source, dict):
        return ScenarioFile.model_validate(source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"Cannot read scenario file {path}: {e.strerror}", {"path": str(path)})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"Scenario file {path} is not valid JSON: {e.msg}", {"line": e.lineno, "column": e.colno})
    logger.debug(f"Loaded scenario {path}")
    return ScenarioFile.model_validate(data)


def _matrix(rows: ComplexMatrix) -> np.ndarray:
    return np.array([[to_complex(v) for v in row] for row in rows], dtype=np.complex128)


def build_rep(descriptor: InstanceDescriptor) -> Optional[UnitaryRep]:
    group = descriptor.group
    if group.kind == GROUP_KIND_CYCLIC:
        return clock_rep(group.n, 1) if group.action == "clock" else regular_rep(cyclic(group.n))
    if group.kind == GROUP_KIND_PRODUCT:
        return regular_rep(reduce(direct_product, [cyclic(n) for n in group.factors]))
    if group.kind == GROUP_KIND_PAULI_Z:
        return pauli_z_rep(group.n)
    if group.kind == GROUP_KIND_CLOCK:
        return clock_rep(group.d, group.n)
    if group.kind == GROUP_KIND_EXPLICIT:
        finite = from_cayley(group.cayley, group.names, group.label)
        if group.matrices is None:
            return regular_rep(finite)
        return rep_from_matrices(finite, [_matrix(m) for m in group.matrices], label=group.label)
    return None


def _group_name(descriptor: InstanceDescriptor) -> str:
    group = descriptor.group
    if group.kind == GROUP_KIND_CONTINUOUS:
        return group.name
    return group.kind


def build_spectrum(descriptor: InstanceDescriptor) -> BlockSpectrum:
    terms = [BlockTerm(label=t.label, d=t.d, m=t.m, amplitude=to_complex(t.amp)) for t in descriptor.spectrum]
    if descriptor.normalize and terms:
        norm = float(np.sqrt(sum(t.modulus ** 2 for t in terms)))
        terms = [BlockTerm(t.label, t.d, t.m, t.amplitude / norm) for t in terms]
    return BlockSpectrum(tuple(terms))


def check_block_group(rep: UnitaryRep, spectrum: BlockSpectrum) -> None:
    """Declared blocks must fit the named finite group and its carrier."""
    order = rep.group.order
    covered = sum(t.d * t.m for t in spectrum.terms)
    if covered != rep.dim:
        raise InvalidSpectrum(
            f"Declared blocks cover {covered} dimensions, {rep.label} acts on {rep.dim}",
            {"covered": covered, "dim": rep.dim},
        )
    for term in spectrum.terms:
        if order % term.d or (rep.group.is_abelian and term.d != 1):
            raise InvalidSpectrum(
                f"Block {term.label} of dimension {term.d} is not an irrep dimension of a group of order {order}",
                {"label": term.label, "d": term.d, "order": order},
            )
    squares = sum(t.d ** 2 for t in spectrum.terms)
    if squares > order:
        raise InvalidSpectrum(
            f"Declared irreps have sum d^2 = {squares}, above the group order {order}",
            {"sum_d_squared": squares, "order": order},
        )


def build_instance(descriptor: InstanceDescriptor) -> ExclusionInstance:
    if descriptor.mode == MODE_BLOCK:
        spectrum = build_spectrum(descriptor)
        rep = build_rep(descriptor)
        if rep is not None:
            check_block_group(rep, spectrum)
        reference_dim = 1
        if any(t.m != t.d for t in spectrum.terms):
            spectrum, reference_dim = spectrum.reference_extension()
            logger.info(f"Block-level spectrum extended with a reference system of dimension {reference_dim}")
        return ExclusionInstance.block_level(spectrum, group_name=_group_name(descriptor), reference_dim=reference_dim)

    rep = build_rep(descriptor)
    if descriptor.seed is not None:
        seed = np.array([to_complex(v) for v in descriptor.seed], dtype=np.complex128)
        if descriptor.normalize:
            seed = seed / np.linalg.norm(seed)
        return ExclusionInstance.from_seed(rep, seed)
    if not rep.group.is_abelian:
        return ExclusionInstance.from_declared_blocks(rep, build_spectrum(descriptor))
    return ExclusionInstance.from_spectrum(rep, build_spectrum(descriptor))


def build_povm(descriptor: PovmDescriptor) -> Povm:
    return Povm.build(descriptor.labels, [_matrix(e) for e in descriptor.effects])


def build_ensemble(scenario: ScenarioFile) -> EnsembleInstance:
    if scenario.ensemble is not None:
        return ensemble_from_descriptor(scenario.ensemble)
    if scenario.instance is not None:
        return ensemble_from_instance(build_instance(scenario.instance))
    raise InvalidEnsemble("Scenario needs an 'ensemble' or an 'instance' for the oracle")


def ensemble_from_descriptor(descriptor: EnsembleDescriptor) -> EnsembleInstance:
    if descriptor.states is not None:
        return EnsembleInstance.from_pure([[to_complex(v) for v in state] for state in descriptor.states])
    return EnsembleInstance.from_densities([_matrix(m) for m in descriptor.densities])


def require_instance(scenario: ScenarioFile, command: str) -> InstanceDescriptor:
    if scenario.instance is None:
        raise SchemaError(f"Command '{command}' needs an 'instance' section", {"command": command})
    return scenario.instance
