from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from qexclusion.constants import (
    GROUP_KIND_CLOCK,
    GROUP_KIND_CONTINUOUS,
    GROUP_KIND_CYCLIC,
    GROUP_KIND_EXPLICIT,
    GROUP_KIND_PAULI_Z,
    GROUP_KIND_PRODUCT,
    MODE_BLOCK,
    MODE_EXPLICIT,
    ORACLE_METHOD_BISECTION,
    REPORT_VERSION,
    VERDICT_EXCLUDABLE,
    VERDICT_NOT_EXCLUDABLE,
    VERDICT_UNDECIDED,
)


class Verdict(str, Enum):
    EXCLUDABLE = VERDICT_EXCLUDABLE
    NOT_EXCLUDABLE = VERDICT_NOT_EXCLUDABLE
    UNDECIDED = VERDICT_UNDECIDED


# Complex numbers travel as [re, im]; a bare real is accepted for amplitudes
ComplexPair = Tuple[float, float]
ComplexMatrix = List[List[ComplexPair]]


def to_complex(value: Union[float, ComplexPair]) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    return complex(value[0], value[1])


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ============================================================================
# Group descriptors
# ============================================================================

class CyclicGroupModel(StrictModel):
    kind: Literal["cyclic"] = GROUP_KIND_CYCLIC
    n: int = Field(ge=1)
    action: Literal["clock", "regular"] = "clock"


class ProductGroupModel(StrictModel):
    """Direct product of cyclic groups acting by the left-regular representation."""

    kind: Literal["product"] = GROUP_KIND_PRODUCT
    factors: List[int] = Field(min_length=1)


class PauliZGroupModel(StrictModel):
    kind: Literal["pauli_z"] = GROUP_KIND_PAULI_Z
    n: int = Field(ge=1)


class ClockGroupModel(StrictModel):
    kind: Literal["clock"] = GROUP_KIND_CLOCK
    d: int = Field(ge=2)
    n: int = Field(default=1, ge=1)


class ExplicitGroupModel(StrictModel):
    kind: Literal["explicit"] = GROUP_KIND_EXPLICIT
    cayley: List[List[int]]
    names: Optional[List[str]] = None
    matrices: Optional[List[ComplexMatrix]] = None
    label: str = "explicit"


class ContinuousGroupModel(StrictModel):
    """Named compact group; only usable with block-level instances."""

    kind: Literal["continuous"] = GROUP_KIND_CONTINUOUS
    name: str


GroupDescriptor = Annotated[
    Union[
        CyclicGroupModel,
        ProductGroupModel,
        PauliZGroupModel,
        ClockGroupModel,
        ExplicitGroupModel,
        ContinuousGroupModel,
    ],
    Field(discriminator="kind"),
]


# ============================================================================
# Instance descriptors
# ============================================================================

class SpectrumTermModel(StrictModel):
    label: str
    d: int = Field(default=1, ge=1)
    m: int = Field(default=1, ge=1)
    amp: Union[float, ComplexPair]


class InstanceDescriptor(StrictModel):
    mode: Literal["explicit", "block"] = MODE_EXPLICIT
    group: GroupDescriptor
    spectrum: Optional[List[SpectrumTermModel]] = None
    seed: Optional[List[Union[float, ComplexPair]]] = None
    normalize: bool = False
    shifts: Optional[Dict[str, Tuple[int, int]]] = None

    @model_validator(mode="after")
    def check_source(self):
        if (self.spectrum is None) == (self.seed is None):
            raise ValueError("instance needs exactly one of 'spectrum' or 'seed'")
        if self.mode == MODE_BLOCK and self.seed is not None:
            raise ValueError("block-level instances are described by a spectrum, not a seed vector")
        if self.mode == MODE_EXPLICIT and self.group.kind == GROUP_KIND_CONTINUOUS:
            raise ValueError("continuous groups are only supported with mode 'block'")
        return self


class PbrDescriptor(StrictModel):
    theta: Optional[float] = None
    unit: Optional[Literal["rad", "deg"]] = None
    n: Optional[int] = Field(default=None, ge=1)
    amplitudes: Optional[List[Union[float, ComplexPair]]] = None

    @field_validator("amplitudes")
    @classmethod
    def check_amplitudes(cls, value):
        if value is not None and len(value) < 2:
            raise ValueError("qudit amplitudes need at least two levels")
        return value

    @model_validator(mode="after")
    def check_unit(self):
        # an angle is never read without its unit
        if self.theta is not None and self.unit is None:
            raise ValueError("pbr 'theta' needs an explicit 'unit' ('rad' or 'deg')")
        return self


class PovmDescriptor(StrictModel):
    labels: List[str]
    effects: List[ComplexMatrix]

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.labels) != len(self.effects):
            raise ValueError("povm needs one effect per label")
        return self


class EnsembleDescriptor(StrictModel):
    """Either pure states (vectors) or density matrices, uniform priors."""

    states: Optional[List[List[Union[float, ComplexPair]]]] = None
    densities: Optional[List[ComplexMatrix]] = None

    @model_validator(mode="after")
    def check_source(self):
        if (self.states is None) == (self.densities is None):
            raise ValueError("ensemble needs exactly one of 'states' or 'densities'")
        return self


class ScenarioOptions(StrictModel):
    oracle_method: Literal["bisection", "splitting"] = ORACLE_METHOD_BISECTION
    max_iterations: Optional[int] = Field(default=None, ge=1)
    graph_threshold: Optional[float] = Field(default=None, ge=0.0)
    sweep_degrees: Optional[List[float]] = None
    phase_diagram: bool = True
    capacity_povm: Literal["constructed", "complement"] = "constructed"
    zero_only: bool = False
    full_effects: bool = False


class ToleranceOverrides(StrictModel):
    povm_residual: Optional[float] = Field(default=None, gt=0)
    completeness: Optional[float] = Field(default=None, gt=0)
    psd: Optional[float] = Field(default=None, gt=0)
    dual: Optional[float] = Field(default=None, gt=0)
    adjacency_threshold: Optional[float] = Field(default=None, ge=0)
    hermitian: Optional[float] = Field(default=None, gt=0)
    oracle: Optional[float] = Field(default=None, gt=0)


class ScenarioFile(StrictModel):
    version: str = REPORT_VERSION
    name: Optional[str] = None
    instance: Optional[InstanceDescriptor] = None
    pbr: Optional[PbrDescriptor] = None
    povm: Optional[PovmDescriptor] = None
    ensemble: Optional[EnsembleDescriptor] = None
    options: ScenarioOptions = Field(default_factory=ScenarioOptions)
    tolerances: Optional[ToleranceOverrides] = None


class BatchFile(StrictModel):
    """A list of (command, scenario) jobs run concurrently."""

    jobs: List["BatchJob"] = Field(min_length=1)


class BatchJob(StrictModel):
    command: str
    scenario: Optional[ScenarioFile] = None
    scenario_path: Optional[str] = None
    demo: Optional[str] = None


BatchFile.model_rebuild()


# ============================================================================
# Reports
# ============================================================================

class NumericField(BaseModel):
    value: Optional[Union[float, int, str]]
    tolerance: Optional[float] = None


class ErrorInfo(BaseModel):
    code: str
    message: str
    details: Dict[str, Any] = Field(default_factory=dict)


class Report(BaseModel):
    version: str = REPORT_VERSION
    command: str
    verdict: Optional[Verdict] = None
    payload: Dict[str, Any] = Field(default_factory=dict)
    provenance: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[ErrorInfo] = None
    timing: Optional[Dict[str, float]] = None

    @property
    def exit_code(self) -> int:
        return 1 if self.error is not None else 0
