"""
The PBR game: n copies of cos(theta/2)|0> + sin(theta/2)|1> under the Pauli-Z group.

The orbit is excludable iff (1 + tan(theta/2))^n >= 2; the equality boundary
counts as success. The qudit variant replaces the qubit by sum_k c_k |k> under
the clock action of Z_d^n and is excludable iff (sum|c_k| / max|c_k|)^n >= 2.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from qexclusion.config import PBR_CONFIG
from qexclusion.core.exclusion import BlockSpectrum, BlockTerm, ExclusionInstance
from qexclusion.core.groups import UnitaryRep, clock_rep, pauli_z_rep
from qexclusion.core.isotypical import decompose_abelian
from qexclusion.errors import DomainError, Unbounded

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2


def to_radians(theta: float, unit: str = "rad") -> float:
    if unit == "rad":
        return float(theta)
    if unit == "deg":
        return math.radians(theta)
    raise DomainError(f"Unknown angle unit: {unit}", {"unit": unit})


def _check_theta(theta: float) -> None:
    if not math.isfinite(theta) or theta < 0.0 or theta > HALF_PI:
        raise DomainError(f"theta must lie in [0, pi/2], got {theta!r}", {"theta": theta})


def _check_copies(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"copy count must be a positive integer, got {n!r}", {"n": n})


@dataclass(frozen=True)
class PbrInstance:
    theta: float
    n: int

    def __post_init__(self):
        _check_theta(self.theta)
        _check_copies(self.n)

    @property
    def cos_half(self) -> float:
        return math.cos(self.theta / 2)

    @property
    def sin_half(self) -> float:
        return math.sin(self.theta / 2)

    def amplitude(self, weight: int) -> float:
        """a_x for a bitstring of Hamming weight ``weight``."""
        return self.cos_half ** (self.n - weight) * self.sin_half ** weight


def pbr_condition_value(theta: float, n: int) -> float:
    """(1 + tan(theta/2))^n."""
    _check_theta(theta)
    _check_copies(n)
    return (1.0 + math.tan(theta / 2)) ** n


def pbr_condition(theta: float, n: int) -> bool:
    return pbr_condition_value(theta, n) >= 2.0 * (1.0 - PBR_CONFIG["boundary_rtol"])


def minimal_n(theta: float) -> int:
    """Smallest n with (1 + tan(theta/2))^n >= 2."""
    _check_theta(theta)
    if theta == 0.0:
        raise Unbounded("Identical states are never excludable (theta = 0)", {"theta": theta})

    # start from the real-valued root and correct by integer steps around it
    estimate = math.log(2.0) / math.log1p(math.tan(theta / 2))
    n = max(1, math.ceil(estimate) - 1)
    while n > 1 and pbr_condition(theta, n - 1):
        n -= 1
    while not pbr_condition(theta, n):
        n += 1
    return n


def _spectrum_from_basis(rep: UnitaryRep, amplitude_of_index) -> ExclusionInstance:
    """Each character block of a diagonal action holds one computational basis vector."""
    decomposition = decompose_abelian(rep)
    terms = []
    for block in decomposition.blocks:
        index = int(np.argmax(np.abs(block.basis[:, 0])))
        terms.append(BlockTerm(label=block.label, d=1, m=block.m, amplitude=complex(amplitude_of_index(index))))
    return ExclusionInstance.from_spectrum(rep, BlockSpectrum(tuple(terms)), decomposition=decomposition)


def build_pbr_instance(theta: float, n: int) -> ExclusionInstance:
    """Z_2^n orbit of |psi_0>^{xn}; a_x = cos(theta/2)^{n-|x|} sin(theta/2)^{|x|}."""
    game = PbrInstance(theta=theta, n=n)
    rep = pauli_z_rep(n)
    instance = _spectrum_from_basis(rep, lambda index: game.amplitude(bin(index).count("1")))
    logger.debug(f"Built PBR instance theta={theta:.6f} n={n} dim={rep.dim}")
    return instance


def pbr_sweep(degrees: Optional[Sequence[float]] = None) -> List[Dict[str, float]]:
    """Minimal copy count over a grid of angles in degrees."""
    degrees = list(degrees) if degrees is not None else PBR_CONFIG["sweep_degrees"]
    rows = []
    for deg in degrees:
        theta = math.radians(deg)
        n = minimal_n(theta)
        rows.append(
            {
                "theta_deg": float(deg),
                "theta_rad": theta,
                "minimal_n": n,
                "condition_value": pbr_condition_value(theta, n),
            }
        )
    return rows


# ============================================================================
# Qudit generalization
# ============================================================================

def _qudit_moduli(amplitudes: Sequence[complex]) -> np.ndarray:
    values = np.asarray(amplitudes, dtype=np.complex128)
    if values.ndim != 1 or values.size < 2:
        raise DomainError("Qudit amplitudes need at least two levels")
    moduli = np.abs(values)
    if not np.all(np.isfinite(moduli)) or moduli.max() == 0.0:
        raise DomainError("Qudit amplitudes must be finite and not all zero")
    return moduli


def qudit_pbr_condition_value(amplitudes: Sequence[complex], n: int) -> float:
    """(sum_k |c_k| / max_k |c_k|)^n; normalization does not matter."""
    _check_copies(n)
    moduli = _qudit_moduli(amplitudes)
    return float((moduli.sum() / moduli.max()) ** n)


def qudit_pbr_condition(amplitudes: Sequence[complex], n: int) -> bool:
    return qudit_pbr_condition_value(amplitudes, n) >= 2.0 * (1.0 - PBR_CONFIG["boundary_rtol"])


def build_qudit_pbr_instance(amplitudes: Sequence[complex], n: int) -> ExclusionInstance:
    """Z_d^n clock orbit of (sum_k c_k |k>)^{xn}; amplitudes are normalized here."""
    _check_copies(n)
    _qudit_moduli(amplitudes)
    values = np.asarray(amplitudes, dtype=np.complex128)
    values = values / np.linalg.norm(values)
    d = values.size
    rep = clock_rep(d, n)

    def amplitude_of_index(index: int) -> complex:
        product = 1.0 + 0.0j
        for _ in range(n):
            product *= values[index % d]
            index //= d
        return product

    return _spectrum_from_basis(rep, amplitude_of_index)
