"""Operator-set closure and cumulative K-moment bases."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .errors import BuildError
from .hamiltonian import TimeDependentHamiltonian
from .pauli import PauliString

log = logging.getLogger(__name__)

DEFAULT_CLOSURE_CAP = 4096
DEFAULT_BASIS_CAP = 8192


@dataclass(frozen=True)
class ExtendedOperatorSet:
    n_qubits: int
    operators: tuple[PauliString, ...]
    depths: tuple[int, ...]
    capped: bool = False

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def keys(self) -> list[tuple[int, int]]:
        return [p.key for p in self.operators]

    @property
    def generators(self) -> tuple[PauliString, ...]:
        """Non-identity members."""
        return self.operators[1:]


@dataclass(frozen=True)
class MomentBasis:
    K: int
    operators: tuple[PauliString, ...]
    source: ExtendedOperatorSet
    level_sizes: tuple[int, ...] = field(default=())
    capped: bool = False

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def n_qubits(self) -> int:
        return self.source.n_qubits

    @property
    def keys(self) -> list[tuple[int, int]]:
        return [p.key for p in self.operators]


def _anticommute(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return ((a[0] & b[1]) ^ (a[1] & b[0])).bit_count() & 1 == 1


def closure_of_strings(
    n_qubits: int, seeds: Sequence[PauliString], cap: int = DEFAULT_CLOSURE_CAP
) -> ExtendedOperatorSet:
    """Close a list of strings under pairwise commutators.

    Round 0 holds the distinct non-identity seeds in the given order.  Round
    ``r + 1`` holds every new canonical string ``a b`` with ``a, b``
    anticommuting and at least one of them from round ``r``; each round is
    sorted by key so the result does not depend on pair enumeration order.
    """
    order: list[tuple[int, int]] = []
    depth: dict[tuple[int, int], int] = {}
    for p in seeds:
        if p.n_qubits != n_qubits:
            raise BuildError("seed string has wrong qubit count")
        if not p.is_identity and p.key not in depth:
            depth[p.key] = 0
            order.append(p.key)
    if len(order) > cap:
        raise BuildError(f"closure cap {cap} below the {len(order)} distinct input strings")

    capped = False
    frontier = list(order)
    rnd = 0
    while frontier and not capped:
        rnd += 1
        fresh: set[tuple[int, int]] = set()
        for a in frontier:
            for b in order:
                if _anticommute(a, b):
                    c = (a[0] ^ b[0], a[1] ^ b[1])
                    if c not in depth and c != (0, 0):
                        fresh.add(c)
        new = sorted(fresh)
        room = cap - len(order)
        if len(new) > room:
            new = new[:room]
            capped = True
        for c in new:
            depth[c] = rnd
            order.append(c)
        frontier = new
    if capped:
        log.warning("operator closure stopped at cap=%d", cap)

    ops = [PauliString.identity(n_qubits)] + [PauliString(n_qubits, x, z) for x, z in order]
    return ExtendedOperatorSet(
        n_qubits, tuple(ops), (0,) + tuple(depth[k] for k in order), capped
    )


def extended_operator_set(
    h: TimeDependentHamiltonian, cap: int = DEFAULT_CLOSURE_CAP
) -> ExtendedOperatorSet:
    """Identity plus the commutator closure of the Hamiltonian's Pauli strings."""
    h.require_hermitian()
    return closure_of_strings(h.n_qubits, h.strings(), cap)


def cumulative_k_moment_basis(
    s: ExtendedOperatorSet, K: int, cap: int = DEFAULT_BASIS_CAP
) -> MomentBasis:
    """Breadth-first product expansion of ``s`` up to ``K`` factors.

    Level 0 is the identity; level ``j + 1`` appends every new canonical
    ``P Q`` for ``P`` from level ``j`` and ``Q`` in ``s`` (in that nested order).
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    if cap < 1:
        raise ValueError("basis cap must be positive")
    n = s.n_qubits
    order: list[tuple[int, int]] = [(0, 0)]
    seen = {(0, 0)}
    frontier = [(0, 0)]
    sizes = [1]
    gens = [p.key for p in s.operators]
    capped = False
    for _ in range(K):
        nxt = []
        for px, pz in frontier:
            for qx, qz in gens:
                c = (px ^ qx, pz ^ qz)
                if c in seen:
                    continue
                if len(order) >= cap:
                    capped = True
                    break
                seen.add(c)
                order.append(c)
                nxt.append(c)
            if capped:
                break
        sizes.append(len(order))
        frontier = nxt
        if capped:
            log.warning("moment basis stopped at cap=%d", cap)
            break
    ops = tuple(PauliString(n, x, z) for x, z in order)
    return MomentBasis(K, ops, s, tuple(sizes), capped)


@dataclass(frozen=True)
class GrowthReport:
    sizes: tuple[int, ...]
    saturation_K: int | None

    @property
    def saturated_size(self) -> int | None:
        return None if self.saturation_K is None else self.sizes[self.saturation_K]


def group_growth_report(s: ExtendedOperatorSet, K_max: int, cap: int = DEFAULT_BASIS_CAP) -> GrowthReport:
    """Cumulative basis size for ``K = 0..K_max`` and the first K where growth stops."""
    basis = cumulative_k_moment_basis(s, K_max, cap)
    sizes = basis.level_sizes
    sat = None
    for k in range(len(sizes) - 1):
        if sizes[k + 1] == sizes[k]:
            sat = k
            break
    return GrowthReport(tuple(sizes), sat)
