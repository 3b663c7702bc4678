"""Instance generators: profitted max coverage, planted covers, random
coverage-minus-cost functions and synthetic batched-join workloads.

Every generator draws from ``numpy.random.default_rng(seed)`` and is
deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .costing import CostModel, FixtureCosts, FIXTURE
from .errors import PreconditionError, WorkloadError
from .qdag import Query, Relation
from .setfn import CoverageOracle, Decomposition
from .workload import WorkloadSpec

BETA_GRID_POINTS = 10_000
BETA_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CoverageInstance:
    """Ground items ``0..n_elements-1``, a family of item sets, budget ``l`` and γ."""

    n_elements: int
    sets: tuple[tuple[int, ...], ...]
    l: int
    gamma: float
    planted: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.n_elements < 1:
            raise PreconditionError("n_elements must be positive")
        if not 1 <= self.l <= len(self.sets):
            raise PreconditionError(f"l must be in [1, {len(self.sets)}], got {self.l}")
        if self.gamma <= 0:
            raise PreconditionError(f"gamma must be positive, got {self.gamma}")
        for i, items in enumerate(self.sets):
            if any(not 0 <= x < self.n_elements for x in items):
                raise PreconditionError(f"set {i} has items outside the ground set")

    @property
    def set_cost(self) -> float:
        return 1.0 / (self.gamma * self.l)

    def coverage_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_elements, dtype=int)
        for items in self.sets:
            counts[list(items)] += 1
        return counts

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": "planted-cover",
            "n_elements": self.n_elements,
            "l": self.l,
            "gamma": self.gamma,
            "planted": list(self.planted),
            "sets": [list(items) for items in self.sets],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> CoverageInstance:
        return cls(
            n_elements=int(data["n_elements"]),
            sets=tuple(tuple(int(x) for x in items) for items in data["sets"]),
            l=int(data["l"]),
            gamma=float(data["gamma"]),
            planted=tuple(int(i) for i in data.get("planted", ())),
        )


def profitted_oracle(inst: CoverageInstance) -> Decomposition:
    """f(A) = ((γ+1)/γ)·|∪A|/n - (1/γ)·|A|/l as scaled coverage minus a uniform cost."""
    f_m = CoverageOracle(
        inst.sets,
        np.ones(inst.n_elements, dtype=np.int64),
        scale=inst.gamma + 1.0,
        divisor=inst.gamma * inst.n_elements,
        labels=tuple(f"S{i}" for i in range(len(inst.sets))),
    )
    return Decomposition(f_m, (inst.set_cost,) * len(inst.sets))


def gen_planted_cover(
    n: int,
    l: int,
    extra_sets: int = 0,
    seed: int = 0,
    *,
    gamma: float = 1.0,
) -> CoverageInstance:
    """l disjoint planted sets partition the items; extra random sets have at most n/l items.

    Planted sets are duplicated where needed so every item is covered at least twice.
    """
    if l < 1 or n < 1:
        raise PreconditionError("n and l must be positive")
    if n % l:
        raise PreconditionError(f"n={n} is not divisible by l={l}")
    if extra_sets < 0:
        raise PreconditionError("extra_sets must be non-negative")
    rng = np.random.default_rng(seed)
    size = n // l
    order = rng.permutation(n)
    planted = [tuple(sorted(int(x) for x in order[i * size:(i + 1) * size])) for i in range(l)]
    sets = list(planted)
    for _ in range(extra_sets):
        k = int(rng.integers(1, size + 1))
        sets.append(tuple(sorted(int(x) for x in rng.choice(n, size=k, replace=False))))

    counts = np.zeros(n, dtype=int)
    for items in sets:
        counts[list(items)] += 1
    for block in planted:
        if any(counts[x] < 2 for x in block):
            sets.append(block)
            counts[list(block)] += 1
    return CoverageInstance(n, tuple(sets), l, gamma, tuple(range(l)))


@dataclass(frozen=True)
class WeightedCoverageInstance:
    """Weighted coverage minus an additive cost; integer data keeps every value exact."""

    weights: tuple[int, ...]
    sets: tuple[tuple[int, ...], ...]
    costs: tuple[int, ...]
    seed: int | None = None

    def decomposition(self) -> Decomposition:
        f_m = CoverageOracle(self.sets, np.asarray(self.weights, dtype=np.int64))
        return Decomposition(f_m, tuple(float(c) for c in self.costs))

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "kind": "random-submodular",
            "items": len(self.weights),
            "weights": list(self.weights),
            "sets": [list(items) for items in self.sets],
            "costs": list(self.costs),
        }
        if self.seed is not None:
            data["seed"] = self.seed
        return data


def random_coverage_instance(
    n: int,
    seed: int = 0,
    *,
    items: int | None = None,
    max_weight: int = 10,
    cost_spread: float = 1.5,
) -> WeightedCoverageInstance:
    """Random sets over ``items`` weighted items, each priced around its own value.

    Costs are drawn from [1, cost_spread · w(set)], so singleton ratios straddle 1
    and optima are positive for most seeds.
    """
    if n < 1:
        raise PreconditionError("n must be positive")
    items = items or 2 * n
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, max_weight + 1, size=items)
    sets: list[tuple[int, ...]] = []
    costs: list[int] = []
    for _ in range(n):
        k = int(rng.integers(1, max(2, items // 3) + 1))
        chosen = tuple(sorted(int(x) for x in rng.choice(items, size=min(k, items), replace=False)))
        sets.append(chosen)
        value = int(weights[list(chosen)].sum())
        costs.append(int(rng.integers(1, max(2, math.ceil(cost_spread * value)) + 1)))
    return WeightedCoverageInstance(
        tuple(int(w) for w in weights), tuple(sets), tuple(costs), seed
    )


def gen_random_submodular(n: int, seed: int = 0, **params: Any) -> Decomposition:
    return random_coverage_instance(n, seed, **params).decomposition()


def gen_join_workload(
    num_queries: int,
    num_relations: int,
    overlap: float,
    seed: int = 0,
    *,
    shape: str = "mixed",
) -> WorkloadSpec:
    """Batch of chain or star join queries sharing a core of relations.

    The core has ``max(2, round(overlap · num_relations))`` relations (none when
    ``overlap`` is 0), joined the same way in every query; the remaining
    relations of each query are private to it. Shared join nodes appear whenever
    ``overlap > 0``, ``num_queries >= 2`` and ``num_relations >= 2``.
    """
    if num_queries < 1 or num_relations < 1:
        raise PreconditionError("num_queries and num_relations must be positive")
    if not 0 <= overlap <= 1:
        raise PreconditionError(f"overlap must be in [0, 1], got {overlap}")
    if shape not in ("chain", "star", "mixed"):
        raise PreconditionError(f"unknown shape {shape!r}")
    rng = np.random.default_rng(seed)

    core_size = 0 if overlap == 0 else min(num_relations, max(2, round(overlap * num_relations)))
    relations: list[Relation] = []
    cards: dict[str, int] = {}

    def relation(name: str) -> str:
        card = int(rng.integers(100, 100_000))
        relations.append(Relation(name, card))
        cards[name] = card
        return name

    def predicate(a: str, b: str) -> tuple[str, str, float]:
        return (a, b, 1.0 / max(cards[a], cards[b]))

    core = [relation(f"C{i}") for i in range(core_size)]
    core_predicates = [predicate(core[i], core[i + 1]) for i in range(len(core) - 1)]

    queries: list[Query] = []
    for qi in range(num_queries):
        private = [relation(f"Q{qi}R{j}") for j in range(num_relations - core_size)]
        rels = core + private
        query_shape = shape if shape != "mixed" else ("chain", "star")[int(rng.integers(2))]
        preds = list(core_predicates)
        for position in range(max(core_size, 1), len(rels)):
            anchor = rels[0] if query_shape == "star" else rels[position - 1]
            preds.append(predicate(anchor, rels[position]))
        queries.append(Query(tuple(rels), tuple(preds), name=f"Q{qi}"))

    return WorkloadSpec(
        relations=tuple(relations),
        queries=tuple(queries),
        cost_model=CostModel(),
        seed=seed,
        name=f"join-workload-{num_queries}x{num_relations}-{overlap:g}",
    )


def example1_workload(join_cost: float = 100.0) -> WorkloadSpec:
    """Two three-way chain joins sharing B⋈C, priced 10 per scan, read and write."""
    relations = tuple(Relation(name, 1000) for name in "ABCD")
    queries = (
        Query(("A", "B", "C"), (("A", "B", 0.001), ("B", "C", 0.001)), name="Q1"),
        Query(("B", "C", "D"), (("B", "C", 0.001), ("C", "D", 0.001)), name="Q2"),
    )
    model = CostModel(
        mode=FIXTURE,
        fixture=FixtureCosts(scan=10.0, join=join_cost, read=10.0, write=10.0),
    )
    return WorkloadSpec(relations, queries, model, name="example1")


def hardness_value(beta: float, gamma: float) -> float:
    """g(β) = ((γ+1)(1 - e^-β) - β) / γ."""
    return ((gamma + 1.0) * -math.expm1(-beta) - beta) / gamma


def beta_optimum_check(gamma: float) -> float:
    """Numerical argmax of g over [0, γ+1]: grid scan, then golden-section refinement."""
    if gamma <= 0:
        raise PreconditionError(f"gamma must be positive, got {gamma}")
    hi = gamma + 1.0
    grid = np.linspace(0.0, hi, BETA_GRID_POINTS)
    values = ((gamma + 1.0) * -np.expm1(-grid) - grid) / gamma
    i = int(np.argmax(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    gc, gd = hardness_value(c, gamma), hardness_value(d, gamma)
    while b - a > BETA_TOLERANCE:
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - inv_phi * (b - a)
            gc = hardness_value(c, gamma)
        else:
            a, c, gc = c, d, gd
            d = a + inv_phi * (b - a)
            gd = hardness_value(d, gamma)
    return (a + b) / 2.0


def instance_from_dict(data: Mapping[str, Any]) -> CoverageInstance | WeightedCoverageInstance:
    kind = data.get("kind")
    if kind == "planted-cover":
        return CoverageInstance.from_dict(data)
    if kind == "random-submodular":
        return WeightedCoverageInstance(
            tuple(int(w) for w in data["weights"]),
            tuple(tuple(int(x) for x in s) for s in data["sets"]),
            tuple(int(c) for c in data["costs"]),
            data.get("seed"),
        )
    raise WorkloadError(f"unknown instance kind {kind!r}", path="$.kind")
