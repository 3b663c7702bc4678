"""Workload → DAG → benefit oracle → solver, for one algorithm or all of them."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .config import RunConfig
from .costing import (
    BenefitOracle,
    BestCostOracle,
    CostReport,
    SupermodularityReport,
    measure_supermodularity,
)
from .events import EventLog
from .qdag import QueryDag, shareable_nodes
from .setfn import canonical_decomposition
from .solvers import (
    EXHAUSTIVE_LIMIT,
    Bound,
    SolverResult,
    approx_bound,
    exhaustive_max,
    lazy_marginal_greedy,
    marginal_greedy,
    roy_greedy,
    universe_reduce,
)
from .workload import WorkloadSpec

COMPARE_ALGORITHMS = ("none", "roy", "marginal", "lazy")


@dataclass(frozen=True)
class OptimizeOutcome:
    workload: str
    algorithm: str
    baseline: float
    plan_cost: float
    chosen: tuple[str, ...]
    equivalence_nodes: int
    operator_nodes: int
    shareable: int
    oracle_calls: int
    result: SolverResult | None = None
    cost_report: CostReport | None = None
    reduced_universe: int | None = None
    bound: Bound | None = None
    labels: tuple[str, ...] = ()

    @property
    def benefit(self) -> float:
        return self.baseline - self.plan_cost


@dataclass(frozen=True)
class CompareRow:
    algorithm: str
    plan_cost: float
    materialized: int
    oracle_calls: int
    cpu_seconds: float
    chosen: tuple[str, ...] = ()


@dataclass(frozen=True)
class CompareResult:
    workload: str
    baseline: float
    shareable: int
    rows: tuple[CompareRow, ...] = field(default_factory=tuple)
    bound: Bound | None = None
    supermodularity: SupermodularityReport | None = None


def _phase(events: EventLog, name: str, **payload: Any) -> None:
    events.emit("pipeline.phase", source="pipeline", payload={"phase": name, **payload})


def _oracles(dag: QueryDag, spec: WorkloadSpec) -> tuple[BestCostOracle, BenefitOracle]:
    bc = BestCostOracle(dag, spec.cost_model, sorted(shareable_nodes(dag)))
    return bc, BenefitOracle(bc)


def _exhaustive_bound(benefit: BenefitOracle, result: SolverResult) -> Bound | None:
    """Bound at Θ when f(Θ) > 0 and c*(Θ) >= 0 under the canonical decomposition."""
    if result.objective <= 0:
        return None
    c_theta = canonical_decomposition(benefit).cost_of(result.chosen)
    if c_theta < 0:
        return None
    return approx_bound(result.objective, c_theta)


def _solve(
    algorithm: str,
    bc: BestCostOracle,
    benefit: BenefitOracle,
    config: RunConfig,
    events: EventLog,
) -> tuple[SolverResult, int | None]:
    if algorithm == "roy":
        return roy_greedy(bc, events=events), None
    if algorithm == "exhaustive":
        return exhaustive_max(benefit, events=events), None

    d = canonical_decomposition(benefit)
    ground = benefit.ground
    k = config.k
    reduced: int | None = None
    if k is not None:
        k = min(k, len(ground))
        if 1 <= k < len(ground):
            ground = universe_reduce(d, ground, k)
            reduced = len(ground)
            _phase(events, "universe-reduce", k=k, size=reduced)
            k = min(k, reduced)
    solver = lazy_marginal_greedy if algorithm == "lazy" else marginal_greedy
    return solver(d, ground, k=k, prune=config.prune, events=events), reduced


def optimize_workload(
    spec: WorkloadSpec, config: RunConfig, events: EventLog | None = None
) -> OptimizeOutcome:
    events = events or EventLog()
    _phase(events, "build")
    dag = spec.build(events=events)
    bc, benefit = _oracles(dag, spec)
    _phase(events, "baseline", cost=benefit.baseline, shareable=len(benefit.ground))

    common = dict(
        workload=spec.name,
        algorithm=config.algorithm,
        baseline=benefit.baseline,
        equivalence_nodes=len(dag.nodes),
        operator_nodes=len(dag.ops),
        shareable=len(benefit.ground),
        labels=benefit.ground.labels or (),
    )
    if config.algorithm == "none":
        return OptimizeOutcome(
            plan_cost=benefit.baseline, chosen=(), oracle_calls=bc.call_count, **common
        )

    _phase(events, "solve", algorithm=config.algorithm)
    result, reduced = _solve(config.algorithm, bc, benefit, config, events)
    report = bc.report(result.chosen)
    bound = _exhaustive_bound(benefit, result) if config.algorithm == "exhaustive" else None
    return OptimizeOutcome(
        plan_cost=report.total,
        chosen=tuple(benefit.ground.describe(result.chosen)),
        oracle_calls=bc.call_count,
        result=result,
        cost_report=report,
        reduced_universe=reduced,
        bound=bound,
        **common,
    )


def compare_workload(
    spec: WorkloadSpec, config: RunConfig, events: EventLog | None = None
) -> CompareResult:
    """One row per algorithm; each row starts from fresh oracles so call counts are comparable."""
    events = events or EventLog()
    dag = spec.build(events=events)
    size = len(shareable_nodes(dag))
    algorithms = list(COMPARE_ALGORITHMS)
    if size <= min(config.exhaustive_limit, EXHAUSTIVE_LIMIT):
        algorithms.append("exhaustive")

    rows: list[CompareRow] = []
    baseline = 0.0
    bound: Bound | None = None
    for algorithm in algorithms:
        _phase(events, "compare", algorithm=algorithm)
        started = time.process_time()
        bc, benefit = _oracles(dag, spec)
        baseline = benefit.baseline
        if algorithm == "none":
            chosen, cost = 0, benefit.baseline
        else:
            result, _ = _solve(algorithm, bc, benefit, config, events)
            chosen, cost = result.chosen, bc(result.chosen)
            if algorithm == "exhaustive":
                bound = _exhaustive_bound(benefit, result)
        elapsed = time.process_time() - started
        rows.append(
            CompareRow(
                algorithm=algorithm,
                plan_cost=cost,
                materialized=chosen.bit_count(),
                oracle_calls=bc.call_count,
                cpu_seconds=elapsed,
                chosen=tuple(benefit.ground.describe(chosen)),
            )
        )
    _, benefit = _oracles(dag, spec)
    supermodularity = measure_supermodularity(
        benefit,
        sample_budget=config.supermodularity_budget,
        seed=config.seed,
        events=events,
    )
    return CompareResult(spec.name, baseline, size, tuple(rows), bound, supermodularity)
