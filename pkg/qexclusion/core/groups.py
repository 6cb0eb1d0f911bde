"""
Finite groups and their unitary actions.

Elements are opaque indices 0..|G|-1 with the identity at 0; names are
display metadata. Products are read from the Cayley table.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from qexclusion.config import GROUP_CONFIG
from qexclusion.core.linalg import CMatrix, adjoint, as_cmatrix, as_cvector
from qexclusion.errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InvalidGroup,
    InvalidOrder,
    NotAbelian,
    NotHomomorphism,
    NotUnitary,
)

logger = logging.getLogger(__name__)


def _digit_names(order: int, base: int, length: int) -> Tuple[str, ...]:
    sep = "" if base <= 10 else ","
    names = []
    for index in range(order):
        digits = []
        rest = index
        for _ in range(length):
            digits.append(rest % base)
            rest //= base
        names.append(sep.join(str(d) for d in reversed(digits)))
    return tuple(names)


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """
    A finite group given by its Cayley table.

    ``generators``/``factor_orders`` describe a direct decomposition into
    cyclic factors when it is known up front (builtin groups); explicit
    tables get one from ``cyclic_factorization``.
    """

    cayley: NDArray[np.int64]
    names: Tuple[str, ...]
    label: str = ""
    generators: Optional[Tuple[int, ...]] = None
    factor_orders: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        table = np.asarray(self.cayley, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise InvalidGroup(f"Cayley table must be a non-empty square array, got shape {table.shape}")
        n = table.shape[0]
        expected = np.arange(n)
        if not (np.all(np.sort(table, axis=1) == expected) and np.all(np.sort(table, axis=0) == expected[:, None])):
            raise InvalidGroup("Cayley table is not a Latin square")
        if not (np.all(table[0] == expected) and np.all(table[:, 0] == expected)):
            raise InvalidGroup("Element 0 must be the identity")
        if len(self.names) != n:
            raise InvalidGroup(f"Expected {n} element names, got {len(self.names)}")
        table.setflags(write=False)
        object.__setattr__(self, "cayley", table)

    @property
    def order(self) -> int:
        return int(self.cayley.shape[0])

    @property
    def identity(self) -> int:
        return 0

    @cached_property
    def inverses(self) -> NDArray[np.int64]:
        return np.argmax(self.cayley == 0, axis=1)

    @cached_property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.cayley, self.cayley.T))

    def multiply(self, g: int, h: int) -> int:
        return int(self.cayley[g, h])

    def inverse(self, g: int) -> int:
        return int(self.inverses[g])

    def power(self, g: int, k: int) -> int:
        result = 0
        for _ in range(k % self.order if self.order else 0):
            result = int(self.cayley[result, g])
        return result

    def element_order(self, g: int) -> int:
        current, k = g, 1
        while current != 0:
            current = int(self.cayley[current, g])
            k += 1
        return k

    def order_profile(self) -> Tuple[int, ...]:
        """Sorted multiset of element orders."""
        return tuple(sorted(self.element_order(g) for g in range(self.order)))

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidGroup(f"Unknown element name: {name}", {"name": name})

    def check_associativity(self) -> bool:
        table = self.cayley
        n = self.order
        left = table[table]
        right = table[np.arange(n)[:, None, None], table[None, :, :]]
        return bool(np.array_equal(left, right))

    @cached_property
    def cyclic_factorization(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """
        (generators, orders) with G the internal direct product of the cyclic
        subgroups they generate.

        Greedy invariant-factor search: repeatedly take the element of largest
        order modulo the subgroup built so far, then correct it by a subgroup
        element so that its own order equals that quotient order.
        """
        if self.generators is not None and self.factor_orders is not None:
            return self.generators, self.factor_orders
        if not self.is_abelian:
            raise NotAbelian(f"Group {self.label or self.order} is not Abelian")

        table = self.cayley
        subgroup: List[int] = [0]
        members = {0}
        generators: List[int] = []
        orders: List[int] = []

        while len(subgroup) < self.order:
            best, best_order = None, 0
            for b in range(self.order):
                if b in members:
                    continue
                k, current = 1, b
                while current not in members:
                    current = int(table[current, b])
                    k += 1
                if k > best_order:
                    best, best_order = b, k

            lifted = None
            for h in subgroup:
                candidate = int(table[best, h])
                if self.power(candidate, best_order) == 0:
                    lifted = candidate
                    break
            if lifted is None:
                raise InvalidGroup("Cyclic factorization failed", {"element": best, "quotient_order": best_order})

            powers = [0]
            for _ in range(best_order - 1):
                powers.append(int(table[powers[-1], lifted]))
            subgroup = [int(table[h, p]) for p in powers for h in subgroup]
            members = set(subgroup)
            generators.append(lifted)
            orders.append(best_order)

        return tuple(generators), tuple(orders)

    @cached_property
    def coordinates(self) -> NDArray[np.int64]:
        """(order, factors) exponents e with g = prod_i gen_i^{e_i}."""
        generators, orders = self.cyclic_factorization
        coords = np.zeros((self.order, len(orders)), dtype=np.int64)
        if not orders:
            return coords
        for exponents in np.ndindex(*orders):
            element = 0
            for gen, e in zip(generators, exponents):
                element = int(self.cayley[element, self.power(gen, e)])
            coords[element] = exponents
        return coords


def from_cayley(
    table: ArrayLike,
    names: Optional[Sequence[str]] = None,
    label: str = "explicit",
) -> FiniteGroup:
    """Build a group from a user table, checking associativity exhaustively up to the configured order."""
    table = np.asarray(table, dtype=np.int64)
    n = table.shape[0] if table.ndim == 2 else 0
    group = FiniteGroup(cayley=table, names=tuple(names) if names else tuple(str(i) for i in range(n)), label=label)
    if group.order <= GROUP_CONFIG["associativity_check_max_order"] and not group.check_associativity():
        raise InvalidGroup("Cayley table is not associative")
    return group


def cyclic(n: int) -> FiniteGroup:
    """Z_n with cayley[i][j] = (i + j) mod n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidOrder(f"Cyclic group order must be >= 1, got {n}", {"n": n})
    idx = np.arange(n)
    table = (idx[:, None] + idx[None, :]) % n
    generators = (1 % n,) if n > 1 else ()
    factor_orders = (n,) if n > 1 else ()
    return FiniteGroup(
        cayley=table,
        names=tuple(str(i) for i in range(n)),
        label=f"Z{n}",
        generators=generators,
        factor_orders=factor_orders,
    )


def direct_product(a: FiniteGroup, b: FiniteGroup, names: Optional[Sequence[str]] = None) -> FiniteGroup:
    """A x B with element (i, j) stored at index i * |B| + j."""
    nb = b.order
    n = a.order * nb
    table = (a.cayley[:, None, :, None] * nb + b.cayley[None, :, None, :]).reshape(n, n)

    generators = factor_orders = None
    if a.is_abelian and b.is_abelian:
        gens_a, orders_a = a.cyclic_factorization
        gens_b, orders_b = b.cyclic_factorization
        generators = tuple(g * nb for g in gens_a) + tuple(gens_b)
        factor_orders = tuple(orders_a) + tuple(orders_b)

    if names is None:
        names = tuple(f"({x},{y})" for x in a.names for y in b.names)
    return FiniteGroup(
        cayley=table,
        names=tuple(names),
        label=f"{a.label}x{b.label}",
        generators=generators,
        factor_orders=factor_orders,
    )


def _cyclic_power(d: int, n: int) -> FiniteGroup:
    group = cyclic(d)
    for _ in range(n - 1):
        group = direct_product(group, cyclic(d))
    return replace(group, names=_digit_names(d ** n, d, n), label=f"Z{d}^{n}")


@dataclass(frozen=True, eq=False)
class UnitaryRep:
    """
    A unitary action g -> U_g.

    Diagonal actions are stored as an (order, dim) phase array so that large
    Pauli-type representations never hold |G| dense matrices.
    """

    group: FiniteGroup
    dim: int
    dense: Optional[NDArray[np.complex128]] = field(default=None, repr=False)
    diagonals: Optional[NDArray[np.complex128]] = field(default=None, repr=False)
    label: str = ""

    @property
    def is_diagonal(self) -> bool:
        return self.diagonals is not None

    def matrix(self, g: int) -> CMatrix:
        if self.diagonals is not None:
            return np.diag(self.diagonals[g])
        return self.dense[g]

    @property
    def matrices(self) -> Tuple[CMatrix, ...]:
        return tuple(self.matrix(g) for g in range(self.group.order))

    def apply(self, g: int, vector: ArrayLike) -> NDArray[np.complex128]:
        vector = as_cvector(vector)
        if self.diagonals is not None:
            return self.diagonals[g] * vector
        return self.dense[g] @ vector

    def conjugate(self, g: int, m: CMatrix) -> CMatrix:
        """U_g M U_g^H."""
        if self.diagonals is not None:
            phases = self.diagonals[g]
            return phases[:, None] * m * np.conj(phases)[None, :]
        u = self.dense[g]
        return u @ m @ adjoint(u)


def _check_dimension(dim: int, what: str) -> None:
    cap = GROUP_CONFIG["max_carrier_dim"]
    if dim > cap:
        raise DimensionTooLarge(f"{what} needs dimension {dim}, above the cap {cap}", {"dim": dim, "cap": cap})


def clock_rep(d: int, n: int = 1) -> UnitaryRep:
    """Z_d^n acting on (C^d)^{xn} by tensor products of clock operators: U_x|b> = w^{x.b}|b>."""
    if d < 1 or n < 1:
        raise InvalidOrder(f"clock_rep needs d >= 1 and n >= 1, got d={d}, n={n}", {"d": d, "n": n})
    dim = d ** n
    _check_dimension(dim, f"clock_rep(d={d}, n={n})")
    group = _cyclic_power(d, n)
    digits = np.array([[(i // d ** (n - 1 - j)) % d for j in range(n)] for i in range(dim)], dtype=np.int64)
    exponents = (digits @ digits.T) % d
    diagonals = np.exp(2j * np.pi * exponents / d)
    diagonals.setflags(write=False)
    return UnitaryRep(group=group, dim=dim, diagonals=diagonals, label=f"clock(d={d},n={n})")


def pauli_z_rep(n: int) -> UnitaryRep:
    """Z_2^n on 2^n dimensions; bitstring x acts as the tensor product of Z^{x_j}."""
    if n < 1:
        raise InvalidOrder(f"pauli_z_rep needs n >= 1, got {n}", {"n": n})
    cap = GROUP_CONFIG["max_pauli_qubits"]
    if n > cap:
        raise DimensionTooLarge(f"pauli_z_rep(n={n}) exceeds the {cap}-qubit cap", {"n": n, "cap": cap})
    rep = clock_rep(2, n)
    return replace(rep, diagonals=np.real(rep.diagonals).round().astype(np.complex128), label=f"pauli_z(n={n})")


def regular_rep(group: FiniteGroup) -> UnitaryRep:
    """Left-regular permutation action U_g|h> = |gh>."""
    n = group.order
    _check_dimension(n, f"regular_rep({group.label})")
    dense = np.zeros((n, n, n), dtype=np.complex128)
    for g in range(n):
        dense[g, group.cayley[g], np.arange(n)] = 1.0
    dense.setflags(write=False)
    return UnitaryRep(group=group, dim=n, dense=dense, label=f"regular({group.label})")


def rep_from_matrices(group: FiniteGroup, matrices: Sequence[ArrayLike], label: str = "explicit") -> UnitaryRep:
    """Validate a user-supplied action: one unitary per element, multiplicative on the Cayley table."""
    if len(matrices) != group.order:
        raise DimensionMismatch(
            f"Expected {group.order} matrices, got {len(matrices)}",
            {"expected": group.order, "got": len(matrices)},
        )
    stack = np.stack([as_cmatrix(m) for m in matrices])
    if stack.shape[1] != stack.shape[2]:
        raise DimensionMismatch(f"Representation matrices must be square, got {stack.shape[1:]}")
    dim = stack.shape[1]
    identity = np.eye(dim)

    unitary_tol = GROUP_CONFIG["unitary_tol"]
    defects = np.max(np.abs(adjoint(stack) @ stack - identity), axis=(1, 2))
    worst = int(np.argmax(defects))
    if defects[worst] > unitary_tol:
        raise NotUnitary(
            f"Matrix for element {group.names[worst]} is not unitary (defect {defects[worst]:.3e})",
            {"element": group.names[worst], "defect": float(defects[worst])},
        )

    products = np.einsum("gij,hjk->ghik", stack, stack)
    expected = stack[group.cayley]
    pair_defects = np.max(np.abs(products - expected), axis=(2, 3))
    g, h = np.unravel_index(int(np.argmax(pair_defects)), pair_defects.shape)
    if pair_defects[g, h] > GROUP_CONFIG["homomorphism_tol"]:
        raise NotHomomorphism(
            f"U_gh != U_g U_h for pair ({group.names[g]}, {group.names[h]})",
            {"pair": [group.names[g], group.names[h]], "defect": float(pair_defects[g, h])},
        )

    stack.setflags(write=False)
    logger.debug(f"Validated representation {label}: order={group.order} dim={dim}")
    return UnitaryRep(group=group, dim=dim, dense=stack, label=label)
