"""Cost models, the bestCost dynamic program and the materialization-benefit oracle.

bc(S) is evaluated in one bottom-up pass over the DAG: comp(e) is the cheapest
way to compute e, use(e) = min(read(e), comp(e)) when e is materialized, the
query side costs comp(root) and every materialized node adds comp(s) + write(s).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .errors import MissingCostError, PreconditionError, WorkloadError
from .events import EventLog
from .qdag import JOIN, ROOT, SCAN, SELECT, QueryDag, shareable_nodes
from .setfn import (
    DiminishingReturnsTally,
    GroundSet,
    SetFunctionOracle,
    diminishing_returns_tally,
    members,
)

FIXTURE = "fixture"
ANALYTICAL = "analytical"

READ = -1
"""Marker in a plan's choice map: the node is read from its materialization."""

Price = float | Mapping[str, float] | None


@dataclass(frozen=True)
class AnalyticalParams:
    read: float = 2.0
    write: float = 4.0
    seek: float = 10.0
    cpu: float = 0.2
    block_size: int = 4096
    tuple_width: int = 100

    @property
    def tuples_per_block(self) -> int:
        return max(1, self.block_size // self.tuple_width)

    def blocks(self, cardinality: float) -> int:
        return max(1, math.ceil(cardinality / self.tuples_per_block))


@dataclass(frozen=True)
class FixtureCosts:
    """Explicit prices: a number applies everywhere, a map is keyed by relation
    name (``scan``) or signature key such as ``"B,C"``, with optional ``"default"``."""

    scan: Price = None
    join: Price = None
    select: Price = None
    read: Price = None
    write: Price = None


@dataclass(frozen=True)
class CostModel:
    mode: str = ANALYTICAL
    fixture: FixtureCosts = field(default_factory=FixtureCosts)
    params: AnalyticalParams = field(default_factory=AnalyticalParams)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None, *, path: str = "$.cost_model") -> CostModel:
        if data is None:
            return cls()
        if not isinstance(data, Mapping):
            raise WorkloadError("cost model must be an object", path=path)
        mode = data.get("mode", ANALYTICAL)
        if mode == FIXTURE:
            prices: dict[str, Price] = {}
            for key in ("scan", "join", "select", "read", "write"):
                prices[key] = _parse_price(data.get(key), path=f"{path}.{key}")
            unknown = set(data) - {"mode", *prices}
            if unknown:
                raise WorkloadError(f"unknown fixture keys: {sorted(unknown)}", path=path)
            return cls(mode=FIXTURE, fixture=FixtureCosts(**prices))
        if mode == ANALYTICAL:
            defaults = AnalyticalParams()
            values: dict[str, Any] = {}
            for key, default in vars(defaults).items():
                if key not in data:
                    continue
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
                    raise WorkloadError("must be a non-negative number", path=f"{path}.{key}")
                values[key] = type(default)(value)
            unknown = set(data) - {"mode", *vars(defaults)}
            if unknown:
                raise WorkloadError(f"unknown analytical keys: {sorted(unknown)}", path=path)
            params = AnalyticalParams(**values)
            if params.block_size <= 0 or params.tuple_width <= 0:
                raise WorkloadError("block_size and tuple_width must be positive", path=path)
            return cls(mode=ANALYTICAL, params=params)
        raise WorkloadError(f"unknown cost model mode {mode!r}", path=f"{path}.mode")

    def to_dict(self) -> dict[str, Any]:
        if self.mode == FIXTURE:
            data: dict[str, Any] = {"mode": FIXTURE}
            for key, value in vars(self.fixture).items():
                if value is not None:
                    data[key] = dict(value) if isinstance(value, Mapping) else value
            return data
        return {"mode": ANALYTICAL, **vars(self.params)}


def _parse_price(value: Any, *, path: str) -> Price:
    if value is None:
        return None
    if isinstance(value, Mapping):
        parsed: dict[str, float] = {}
        for key, price in value.items():
            parsed[str(key)] = _non_negative(price, path=f"{path}.{key}")
        return parsed
    return _non_negative(value, path=path)


def _non_negative(value: Any, *, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
        raise WorkloadError("cost must be a non-negative number", path=path)
    return float(value)


def _lookup(price: Price, key: str) -> float | None:
    if price is None:
        return None
    if isinstance(price, Mapping):
        if key in price:
            return price[key]
        return price.get("default")
    return price


def estimate_cardinality(
    cardinalities: Mapping[str, float],
    predicates: Iterable[tuple[str, str, float]] = (),
    selections: Iterable[tuple[str, float]] = (),
) -> float:
    """Product of base cardinalities times every applicable selectivity.

    Predicates and selections touching relations outside ``cardinalities``
    are ignored.
    """
    estimate = math.prod(float(c) for c in cardinalities.values())
    for a, b, selectivity in predicates:
        if a in cardinalities and b in cardinalities:
            estimate *= selectivity
    for relation, selectivity in selections:
        if relation in cardinalities:
            estimate *= selectivity
    return estimate


def node_cardinality(dag: QueryDag, node_id: int) -> float:
    signature = dag.nodes[node_id].signature
    names = set(signature.relations)
    return estimate_cardinality(
        {name: dag.relations[name].cardinality for name in signature.relations},
        [(*sorted(pair), sel) for pair, sel in dag.predicates.items() if pair <= names],
        [
            (dag.selections[token].relation, dag.selections[token].selectivity)
            for token in signature.selections
        ],
    )


class Pricer:
    """Per-DAG price table for one cost model; prices are computed on first use."""

    def __init__(self, dag: QueryDag, model: CostModel) -> None:
        self.dag = dag
        self.model = model
        self._ops: dict[int, float] = {}
        self._blocks: dict[int, int] = {}

    def blocks(self, node_id: int) -> int:
        if node_id not in self._blocks:
            self._blocks[node_id] = self.model.params.blocks(node_cardinality(self.dag, node_id))
        return self._blocks[node_id]

    def op_cost(self, op_id: int) -> float:
        cached = self._ops.get(op_id)
        if cached is None:
            cached = self._ops[op_id] = self._price_op(op_id)
        return cached

    def _price_op(self, op_id: int) -> float:
        op = self.dag.ops[op_id]
        if op.kind == ROOT:
            return 0.0
        output = self.dag.nodes[op.output]
        if op.kind == SCAN:
            assert op.relation is not None
            explicit = self.dag.relations[op.relation].scan_cost
            if explicit is not None:
                return explicit
        if self.model.mode == FIXTURE:
            price = {SCAN: self.model.fixture.scan, JOIN: self.model.fixture.join, SELECT: self.model.fixture.select}[op.kind]
            key = op.relation if op.kind == SCAN else output.signature.key
            value = _lookup(price, key or "")
            if value is None:
                raise MissingCostError(output.label, op.kind)
            return value

        params = self.model.params
        if op.kind == SCAN:
            return params.seek + params.read * self.blocks(output.id)
        if op.kind == SELECT:
            return params.cpu * self.blocks(op.inputs[0])
        outer, inner = sorted(self.blocks(i) for i in op.inputs)
        return params.read * (outer + outer * inner) + params.cpu * self.blocks(output.id)

    def read_cost(self, node_id: int) -> float:
        return self._node_price(node_id, "read")

    def write_cost(self, node_id: int) -> float:
        return self._node_price(node_id, "write")

    def _node_price(self, node_id: int, what: str) -> float:
        """Fixture price, or analytical ``seek + rate·blocks``.

        Analytical reads and writes add one seek to the ``rate·blocks`` transfer.
        """
        node = self.dag.nodes[node_id]
        if self.model.mode == FIXTURE:
            value = _lookup(getattr(self.model.fixture, what), node.signature.key)
            if value is None:
                raise MissingCostError(node.label, what)
            return value
        params = self.model.params
        rate = params.read if what == "read" else params.write
        return params.seek + rate * self.blocks(node_id)


@dataclass(frozen=True)
class PlanChoice:
    """Cheapest compute operator per node plus the nodes the plan reads back.

    The query side starts at the root; each materialized node s is computed
    through ``compute[s]`` and may itself read materialized descendants.
    """

    compute: Mapping[int, int]
    reads: frozenset[int]
    materialized: frozenset[int]

    def use(self, node_id: int) -> int:
        """Operator used where ``node_id`` is consumed, or READ."""
        if node_id in self.reads:
            return READ
        return self.compute[node_id]


@dataclass(frozen=True)
class CostReport:
    total: float
    use_cost: float
    materialization_cost: float
    plan: PlanChoice
    breakdown: Mapping[str, Mapping[str, float | str]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "use_cost": self.use_cost,
            "materialization_cost": self.materialization_cost,
            "breakdown": {label: dict(row) for label, row in self.breakdown.items()},
        }


def _node_set(dag: QueryDag, chosen: Iterable[int]) -> frozenset[int]:
    nodes = frozenset(chosen)
    unknown = [n for n in nodes if not 0 <= n < len(dag.nodes)]
    if unknown:
        raise PreconditionError(f"unknown equivalence nodes: {sorted(unknown)}")
    return nodes


def _solve(dag: QueryDag, pricer: Pricer, materialized: frozenset[int]) -> tuple[dict[int, float], dict[int, float], PlanChoice]:
    comp: dict[int, float] = {}
    use: dict[int, float] = {}
    compute: dict[int, int] = {}
    reads: set[int] = set()
    for node_id in dag.topo_order:
        best, best_op = math.inf, -1
        for op_id in dag.nodes[node_id].child_ops:
            op = dag.ops[op_id]
            cost = pricer.op_cost(op_id) + math.fsum(use[i] for i in op.inputs)
            if cost < best:
                best, best_op = cost, op_id
        comp[node_id] = best
        compute[node_id] = best_op
        use[node_id] = best
        if node_id in materialized:
            read = pricer.read_cost(node_id)
            if read <= best:
                use[node_id] = read
                reads.add(node_id)
    return comp, use, PlanChoice(compute, frozenset(reads), materialized)


def best_use_cost(dag: QueryDag, chosen: Iterable[int], model: CostModel, *, pricer: Pricer | None = None) -> CostReport:
    """buc(S): cheapest plan for the batch when S is already materialized for free."""
    materialized = _node_set(dag, chosen)
    comp, _, plan = _solve(dag, pricer or Pricer(dag, model), materialized)
    total = comp[dag.root]
    return CostReport(total, total, 0.0, plan)


def materialization_cost(dag: QueryDag, chosen: Iterable[int], model: CostModel, *, pricer: Pricer | None = None) -> float:
    """c(S): each s in S is computed reading the materialized nodes below it, then written."""
    materialized = _node_set(dag, chosen)
    pricer = pricer or Pricer(dag, model)
    comp, _, _ = _solve(dag, pricer, materialized)
    return math.fsum(comp[s] + pricer.write_cost(s) for s in sorted(materialized))


def best_cost(dag: QueryDag, chosen: Iterable[int], model: CostModel, *, pricer: Pricer | None = None) -> CostReport:
    """bc(S) = buc(S) + c(S) with per-node breakdown for the materialized set."""
    materialized = _node_set(dag, chosen)
    pricer = pricer or Pricer(dag, model)
    comp, _, plan = _solve(dag, pricer, materialized)
    use_cost = comp[dag.root]
    breakdown: dict[str, dict[str, float | str]] = {}
    mat_parts = []
    for s in sorted(materialized):
        write = pricer.write_cost(s)
        read = pricer.read_cost(s)
        mat_parts.append(comp[s] + write)
        breakdown[dag.label(s)] = {
            "compute": comp[s],
            "write": write,
            "read": read,
            "used": "read" if s in plan.reads else "compute",
        }
    mat_cost = math.fsum(mat_parts)
    return CostReport(use_cost + mat_cost, use_cost, mat_cost, plan, breakdown)


def plan_cost(dag: QueryDag, plan: PlanChoice, model: CostModel, *, pricer: Pricer | None = None) -> float:
    """Re-cost an extracted plan by walking it as a tree."""
    pricer = pricer or Pricer(dag, model)

    def computed(node_id: int) -> float:
        op_id = plan.compute[node_id]
        if op_id < 0:
            raise PreconditionError(f"node {dag.label(node_id)} has no compute choice")
        return pricer.op_cost(op_id) + math.fsum(used(i) for i in dag.ops[op_id].inputs)

    def used(node_id: int) -> float:
        if plan.use(node_id) == READ:
            return pricer.read_cost(node_id)
        return computed(node_id)

    total = computed(dag.root)
    for s in sorted(plan.materialized):
        total += computed(s) + pricer.write_cost(s)
    return total


def enumerate_plan_costs(dag: QueryDag, chosen: Iterable[int], model: CostModel) -> list[float]:
    """Cost of every combined plan: each query tree and each materialized node's
    compute tree ranges over all operator choices and read decisions."""
    materialized = _node_set(dag, chosen)
    pricer = Pricer(dag, model)

    def compute_alternatives(node_id: int) -> list[float]:
        out: list[float] = []
        for op_id in dag.nodes[node_id].child_ops:
            inputs = [use_alternatives(i) for i in dag.ops[op_id].inputs]
            for combo in itertools.product(*inputs):
                out.append(pricer.op_cost(op_id) + math.fsum(combo))
        return out

    def use_alternatives(node_id: int) -> list[float]:
        out = compute_alternatives(node_id)
        if node_id in materialized:
            out.append(pricer.read_cost(node_id))
        return out

    parts = [compute_alternatives(dag.root)]
    writes = 0.0
    for s in sorted(materialized):
        parts.append(compute_alternatives(s))
        writes += pricer.write_cost(s)
    return [math.fsum(combo) + writes for combo in itertools.product(*parts)]


class BestCostOracle(SetFunctionOracle):
    """bc over subsets of ``universe`` (equivalence-node ids, element i <-> universe[i])."""

    def __init__(self, dag: QueryDag, model: CostModel, universe: Iterable[int]) -> None:
        self.universe = tuple(universe)
        super().__init__(GroundSet(len(self.universe), tuple(dag.label(n) for n in self.universe)))
        self.dag = dag
        self.model = model
        self.pricer = Pricer(dag, model)

    def nodes_of(self, subset: int) -> frozenset[int]:
        return frozenset(self.universe[i] for i in members(subset))

    def report(self, subset: int) -> CostReport:
        return best_cost(self.dag, self.nodes_of(subset), self.model, pricer=self.pricer)

    def _evaluate(self, subset: int) -> float:
        return self.report(subset).total


class BenefitOracle(SetFunctionOracle):
    """mb(S) = bc(∅) - bc(S); bc(∅) is evaluated once, at construction."""

    normalized = True

    def __init__(self, bc: BestCostOracle) -> None:
        super().__init__(bc.ground)
        self.bc = bc
        self.baseline = bc(0)

    def _evaluate(self, subset: int) -> float:
        return self.baseline - self.bc(subset)


def benefit_oracle(dag: QueryDag, model: CostModel) -> BenefitOracle:
    universe = sorted(shareable_nodes(dag))
    return BenefitOracle(BestCostOracle(dag, model, universe))


@dataclass(frozen=True)
class SupermodularityReport:
    universe_size: int
    tally: DiminishingReturnsTally

    @property
    def fraction(self) -> float:
        return self.tally.fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "universe_size": self.universe_size,
            "mode": self.tally.mode,
            "checked": self.tally.checked,
            "satisfied": self.tally.satisfied,
            "fraction": self.fraction,
        }


def measure_supermodularity(
    benefit: SetFunctionOracle,
    *,
    sample_budget: int = 2000,
    seed: int = 0,
    events: EventLog | None = None,
) -> SupermodularityReport:
    """How often benefit(x, X) <= benefit(x, Y) holds for Y ⊆ X, x ∉ X."""
    tally = diminishing_returns_tally(benefit, sample_budget=sample_budget, seed=seed)
    report = SupermodularityReport(len(benefit.ground), tally)
    if events is not None:
        events.emit("costing.supermodularity", source="costing", payload=report.to_dict())
    return report


def supermodularity_report(
    dag: QueryDag,
    model: CostModel,
    sample_budget: int = 2000,
    *,
    seed: int = 0,
    events: EventLog | None = None,
) -> SupermodularityReport:
    return measure_supermodularity(
        benefit_oracle(dag, model), sample_budget=sample_budget, seed=seed, events=events
    )
