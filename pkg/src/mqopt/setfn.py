"""Ground sets, set-function oracles and monotone-minus-additive decompositions.

Subsets are plain ``int`` bitmasks over ground-set ids: bit ``i`` set means
element ``i`` is in the subset. Oracles memoize by bitmask and count distinct
underlying evaluations in ``call_count``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import NormalizationError, PreconditionError, SizeGuardError

EXHAUSTIVE_CHECK_LIMIT = 14
TOLERANCE = 1e-9


def members(subset: int) -> Iterator[int]:
    """Yield the ids in ``subset`` in ascending order."""
    while subset:
        low = subset & -subset
        yield low.bit_length() - 1
        subset ^= low


def mask_of(ids: Iterable[int]) -> int:
    mask = 0
    for e in ids:
        mask |= 1 << e
    return mask


def _expand(elements: Sequence[int]) -> list[int]:
    """All subsets of ``elements`` as masks; list index bit j <-> elements[j]."""
    masks = [0]
    for e in elements:
        bit = 1 << e
        masks += [m | bit for m in masks]
    return masks


@dataclass(frozen=True)
class GroundSet:
    """Universe U of ``n`` elements with optional display labels.

    ``members_mask`` restricts the universe to a subset of ids (a reduced
    universe); root ground sets leave it unset and own ids ``0..n-1``.
    """

    n: int
    labels: tuple[str, ...] | None = None
    members_mask: int | None = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("ground set size must be non-negative")
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError(f"expected {self.n} labels, got {len(self.labels)}")
        if self.members_mask is not None and self.members_mask >> self.n:
            raise ValueError("members_mask has bits outside the ground set")

    @property
    def full(self) -> int:
        if self.members_mask is None:
            return (1 << self.n) - 1
        return self.members_mask

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(members(self.full))

    def __len__(self) -> int:
        return self.full.bit_count()

    def __contains__(self, e: object) -> bool:
        return isinstance(e, int) and e >= 0 and bool(self.full >> e & 1)

    def label(self, e: int) -> str:
        if self.labels is None:
            return str(e)
        return self.labels[e]

    def describe(self, subset: int) -> list[str]:
        return [self.label(e) for e in members(subset)]

    def restrict(self, subset: int) -> GroundSet:
        return GroundSet(self.n, self.labels, subset & self.full)

    def subsets(self) -> Iterator[int]:
        """Every subset of the universe, in ascending bitmask order."""
        if self.members_mask is None:
            yield from range(1 << self.n)
            return
        elements = self.elements
        for local in range(1 << len(elements)):
            mask = 0
            for j, e in enumerate(elements):
                if local >> j & 1:
                    mask |= 1 << e
            yield mask


class SetFunctionOracle(ABC):
    """Deterministic f: 2^U -> R with a subset-keyed memo.

    Oracles whose ``normalized`` flag is set answer f(∅) = 0 without an
    evaluation. The memo is a plain dict; concurrent writers store equal
    values, so last-write-wins is harmless.
    """

    normalized: bool = False

    def __init__(self, ground: GroundSet) -> None:
        self.ground = ground
        self.call_count = 0
        self._memo: dict[int, float] = {}

    def __call__(self, subset: int) -> float:
        if subset == 0 and self.normalized:
            return 0.0
        cached = self._memo.get(subset)
        if cached is not None:
            return cached
        value = float(self._evaluate(subset))
        self._memo[subset] = value
        self.call_count += 1
        return value

    @property
    def n(self) -> int:
        return self.ground.n

    def evaluated_subsets(self) -> list[int]:
        return sorted(self._memo)

    @abstractmethod
    def _evaluate(self, subset: int) -> float: ...


class FunctionOracle(SetFunctionOracle):
    """Wrap a callable taking a frozenset of element ids."""

    def __init__(
        self,
        ground: GroundSet,
        fn: Callable[[frozenset[int]], float],
        *,
        normalized: bool = False,
    ) -> None:
        super().__init__(ground)
        self._fn = fn
        self.normalized = normalized

    def _evaluate(self, subset: int) -> float:
        return self._fn(frozenset(members(subset)))


class AdditiveOracle(SetFunctionOracle):
    normalized = True

    def __init__(self, ground: GroundSet, weights: Sequence[float]) -> None:
        super().__init__(ground)
        if len(weights) != ground.n:
            raise ValueError(f"expected {ground.n} weights, got {len(weights)}")
        self.weights = tuple(float(w) for w in weights)

    def _evaluate(self, subset: int) -> float:
        return math.fsum(self.weights[e] for e in members(subset))


class CoverageOracle(SetFunctionOracle):
    """Weighted coverage: ``scale * Σ weight[item] / divisor`` over covered items.

    Element ``i`` of the ground set is the i-th set of items. With integer
    weights and unit scale every value is an exact integer.
    """

    normalized = True

    def __init__(
        self,
        sets: Sequence[Iterable[int]],
        weights: Sequence[float] | np.ndarray,
        *,
        scale: float = 1.0,
        divisor: float = 1.0,
        labels: tuple[str, ...] | None = None,
    ) -> None:
        super().__init__(GroundSet(len(sets), labels))
        self.weights = np.asarray(weights)
        n_items = len(self.weights)
        self.incidence = np.zeros((len(sets), n_items), dtype=bool)
        for i, items in enumerate(sets):
            for item in items:
                if not 0 <= item < n_items:
                    raise ValueError(f"set {i} covers unknown item {item}")
                self.incidence[i, item] = True
        self.scale = scale
        self.divisor = divisor

    def covered(self, subset: int) -> np.ndarray:
        rows = list(members(subset))
        if not rows:
            return np.zeros(len(self.weights), dtype=bool)
        return self.incidence[rows].any(axis=0)

    def _evaluate(self, subset: int) -> float:
        total = self.weights[self.covered(subset)].sum()
        return self.scale * total.item() / self.divisor


class DifferenceOracle(SetFunctionOracle):
    """f(S) = f_m(S) - Σ_{e∈S} cost[e]."""

    def __init__(self, f_m: SetFunctionOracle, cost: Sequence[float]) -> None:
        super().__init__(f_m.ground)
        self.f_m = f_m
        self.cost = tuple(cost)
        self.normalized = f_m.normalized

    def _evaluate(self, subset: int) -> float:
        return self.f_m(subset) - math.fsum(self.cost[e] for e in members(subset))


class CanonicalMonotonePart(SetFunctionOracle):
    """Lazy f_m*(S) = f(S) + Σ_{e∈S} cost[e]; evaluates f on demand."""

    normalized = True

    def __init__(self, f: SetFunctionOracle, cost: Sequence[float]) -> None:
        super().__init__(f.ground)
        self.f = f
        self.cost = tuple(cost)

    def _evaluate(self, subset: int) -> float:
        return self.f(subset) + math.fsum(self.cost[e] for e in members(subset))


class ShiftedOracle(SetFunctionOracle):
    """base(S) - Σ_{e∈S} shift[e]."""

    def __init__(self, base: SetFunctionOracle, shift: Sequence[float]) -> None:
        super().__init__(base.ground)
        self.base = base
        self.shift = tuple(shift)
        self.normalized = base.normalized

    def _evaluate(self, subset: int) -> float:
        return self.base(subset) - math.fsum(self.shift[e] for e in members(subset))


@dataclass(frozen=True)
class Decomposition:
    """f = f_m - c with f_m monotone and c additive (one weight per element)."""

    f_m: SetFunctionOracle
    cost: tuple[float, ...]
    source: SetFunctionOracle | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.cost) != self.f_m.ground.n:
            raise ValueError(
                f"expected {self.f_m.ground.n} cost weights, got {len(self.cost)}"
            )

    @property
    def ground(self) -> GroundSet:
        return self.f_m.ground

    def cost_of(self, subset: int) -> float:
        return math.fsum(self.cost[e] for e in members(subset))

    def value(self, subset: int) -> float:
        return self.f_m(subset) - self.cost_of(subset)

    def as_oracle(self) -> SetFunctionOracle:
        return DifferenceOracle(self.f_m, self.cost)


def marginal_gain(f: SetFunctionOracle, e: int, subset: int) -> float:
    """f'(e, S) = f(S ∪ {e}) - f(S)."""
    if subset >> e & 1:
        raise PreconditionError(f"element {e} is already in the subset")
    return f(subset | 1 << e) - f(subset)


def canonical_decomposition(f: SetFunctionOracle, ground: GroundSet | None = None) -> Decomposition:
    """Split a normalized submodular f into f_m* - c* with c*[e] = f(U∖{e}) - f(U).

    Uses exactly n+1 evaluations of f beyond f(∅): f(U) and every f(U∖{e}).
    """
    ground = ground or f.ground
    empty = f(0)
    if empty != 0.0:
        raise NormalizationError(f"f(∅) = {empty!r}, expected 0")

    full = ground.full
    cost = [0.0] * f.ground.n
    if full:
        whole = f(full)
        for e in ground.elements:
            cost[e] = f(full & ~(1 << e)) - whole
    return Decomposition(CanonicalMonotonePart(f, cost), tuple(cost), source=f)


def improve_decomposition(d: Decomposition, ground: GroundSet | None = None) -> Decomposition:
    """Shift w[i] = f_m(U) - f_m(U∖{i}) out of both parts; f_m stays monotone."""
    ground = ground or d.ground
    full = ground.full
    shift = [0.0] * d.ground.n
    if full:
        whole = d.f_m(full)
        for e in ground.elements:
            shift[e] = whole - d.f_m(full & ~(1 << e))
    cost = tuple(c - w for c, w in zip(d.cost, shift))
    return Decomposition(ShiftedOracle(d.f_m, shift), cost, source=d.source)


def _value_table(
    f: SetFunctionOracle, ground: GroundSet, limit: int
) -> tuple[tuple[int, ...], np.ndarray]:
    elements = ground.elements
    if len(elements) > limit:
        raise SizeGuardError(
            f"exhaustive check over {len(elements)} elements exceeds the limit of {limit}"
        )
    values = np.array([f(mask) for mask in _expand(elements)], dtype=float)
    return elements, values


def is_monotone(
    f: SetFunctionOracle,
    ground: GroundSet | None = None,
    *,
    limit: int = EXHAUSTIVE_CHECK_LIMIT,
    tol: float = TOLERANCE,
) -> bool:
    """f(A) <= f(B) for all A ⊆ B ⊆ U, checked on single-element steps."""
    elements, values = _value_table(f, ground or f.ground, limit)
    index = np.arange(len(values))
    for j in range(len(elements)):
        without = index[(index >> j & 1) == 0]
        if np.any(values[without | 1 << j] < values[without] - tol):
            return False
    return True


def is_submodular(
    f: SetFunctionOracle,
    ground: GroundSet | None = None,
    *,
    limit: int = EXHAUSTIVE_CHECK_LIMIT,
    tol: float = TOLERANCE,
) -> bool:
    """f'(u, A) >= f'(u, B) for all A ⊆ B ⊆ U, u ∉ B.

    Checked through the equivalent pairwise form
    f(S+u) + f(S+v) >= f(S+u+v) + f(S) for every S and u, v ∉ S.
    """
    elements, values = _value_table(f, ground or f.ground, limit)
    index = np.arange(len(values))
    m = len(elements)
    for a in range(m):
        for b in range(a + 1, m):
            pair = (1 << a) | (1 << b)
            base = index[(index & pair) == 0]
            lhs = values[base | 1 << a] + values[base | 1 << b]
            rhs = values[base | pair] + values[base]
            if np.any(lhs < rhs - tol):
                return False
    return True


@dataclass(frozen=True)
class DiminishingReturnsTally:
    checked: int
    satisfied: int
    mode: str  # "exhaustive" | "sampled"

    @property
    def fraction(self) -> float:
        if self.checked == 0:
            return 1.0
        return self.satisfied / self.checked


def diminishing_returns_tally(
    f: SetFunctionOracle,
    ground: GroundSet | None = None,
    *,
    sample_budget: int = 2000,
    exhaustive_limit: int = 16,
    seed: int = 0,
    tol: float = TOLERANCE,
) -> DiminishingReturnsTally:
    """Count triples (x, Y ⊆ X, x ∉ X) with f'(x, X) <= f'(x, Y).

    All triples are checked when the universe is small enough and their count
    fits the budget; otherwise ``sample_budget`` random triples are drawn.
    """
    ground = ground or f.ground
    elements = ground.elements
    m = len(elements)
    triples = m * 3 ** (m - 1) if m else 0

    def holds(x: int, big: int, small: int) -> bool:
        return marginal_gain(f, x, big) <= marginal_gain(f, x, small) + tol

    if m <= exhaustive_limit and triples <= sample_budget:
        checked = satisfied = 0
        for x in elements:
            others = [e for e in elements if e != x]
            for big in _expand(others):
                small = big
                while True:
                    checked += 1
                    satisfied += holds(x, big, small)
                    if small == 0:
                        break
                    small = (small - 1) & big
        return DiminishingReturnsTally(checked, satisfied, "exhaustive")

    rng = np.random.default_rng(seed)
    satisfied = 0
    for _ in range(sample_budget):
        x = elements[int(rng.integers(m))]
        big = small = 0
        for e in elements:
            if e == x or rng.random() < 0.5:
                continue
            big |= 1 << e
            if rng.random() < 0.5:
                small |= 1 << e
        satisfied += holds(x, big, small)
    return DiminishingReturnsTally(sample_budget, satisfied, "sampled")
