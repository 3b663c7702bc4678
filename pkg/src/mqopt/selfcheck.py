"""Fast built-in checks: the two-query fixture, decomposition identities,
lazy/eager and reduced/full greedy agreement, and planted-cover sanity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .costing import BenefitOracle, BestCostOracle, best_use_cost, materialization_cost, plan_cost
from .events import EventLog
from .instances import (
    CoverageInstance,
    beta_optimum_check,
    example1_workload,
    gen_planted_cover,
    gen_random_submodular,
    hardness_value,
    profitted_oracle,
)
from .qdag import shareable_nodes
from .setfn import (
    DifferenceOracle,
    canonical_decomposition,
    improve_decomposition,
    is_monotone,
    is_submodular,
)
from .solvers import exhaustive_max, lazy_marginal_greedy, marginal_greedy, roy_greedy, universe_reduce
from .workload import WorkloadSpec

PASS = "pass"
FAIL = "fail"
SKIP = "skip"

TOL = 1e-9
SEEDS = range(5)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status != FAIL


def _check(name: str, ok: bool, detail: str = "") -> CheckResult:
    return CheckResult(name, PASS if ok else FAIL, detail)


def _example1(join_cost: float, expected_empty: float, expected_shared: float) -> CheckResult:
    spec = example1_workload(join_cost)
    dag = spec.build()
    universe = sorted(shareable_nodes(dag))
    bc = BestCostOracle(dag, spec.cost_model, universe)
    benefit = BenefitOracle(bc)
    marginal = marginal_greedy(canonical_decomposition(benefit))
    roy = roy_greedy(bc)
    labels = [dag.label(n) for n in universe]
    ok = (
        labels == ["B⋈C"]
        and math.isclose(bc(0), expected_empty, abs_tol=TOL)
        and math.isclose(bc(1), expected_shared, abs_tol=TOL)
        and marginal.chosen == 1
        and roy.chosen == 1
    )
    return _check(
        f"example1 join={join_cost:g}",
        ok,
        f"bc(∅)={bc(0):.6f} bc({{B⋈C}})={bc(1):.6f} mb={benefit(1):.6f}",
    )


def _decomposition_identity() -> CheckResult:
    for seed in SEEDS:
        d0 = gen_random_submodular(8, seed)
        f = DifferenceOracle(d0.f_m, d0.cost)
        d = canonical_decomposition(f)
        improved = improve_decomposition(d)
        for subset in f.ground.subsets():
            if abs(d.value(subset) - f(subset)) > TOL:
                return _check("decomposition identity", False, f"seed {seed}, subset {subset:#b}")
            if abs(improved.f_m(subset) - d.f_m(subset)) > TOL:
                return _check("decomposition identity", False, f"improve moved f_m, seed {seed}")
        if not (is_monotone(d.f_m) and is_submodular(d.f_m)):
            return _check("decomposition identity", False, f"canonical f_m not monotone submodular, seed {seed}")
    return _check("decomposition identity", True, f"{len(SEEDS)} instances, n=8")


def _lazy_matches_eager() -> CheckResult:
    for seed in SEEDS:
        eager = marginal_greedy(gen_random_submodular(30, seed))
        lazy = lazy_marginal_greedy(gen_random_submodular(30, seed))
        if eager.chosen != lazy.chosen or eager.trace != lazy.trace:
            return _check("lazy = eager", False, f"seed {seed}")
        if lazy.oracle_calls > eager.oracle_calls:
            return _check("lazy = eager", False, f"lazy used more calls, seed {seed}")
    return _check("lazy = eager", True, f"{len(SEEDS)} instances, n=30")


def _reduction_preserves_output() -> CheckResult:
    rng = np.random.default_rng(0)
    for seed in SEEDS:
        d = gen_random_submodular(10, seed)
        k = int(rng.integers(1, 10))
        reduced = universe_reduce(d, None, k)
        full = marginal_greedy(d, k=k)
        small = marginal_greedy(d, reduced, k=min(k, len(reduced)))
        if full.chosen != small.chosen:
            return _check("universe reduction", False, f"seed {seed}, k={k}")
    return _check("universe reduction", True, f"{len(SEEDS)} instances, n=10")


def planted_cover_checks(inst: CoverageInstance) -> list[CheckResult]:
    """Exhaustive optimum 1, canonical cost = set cost, and the β optimum for γ."""
    d = profitted_oracle(inst)
    f = d.as_oracle()
    results: list[CheckResult] = []
    if len(inst.sets) <= 22:
        best = exhaustive_max(f)
        results.append(
            _check("planted optimum", abs(best.objective - 1.0) <= TOL, f"f(Θ)={best.objective:.9f}")
        )
    else:
        results.append(CheckResult("planted optimum", SKIP, f"{len(inst.sets)} sets"))
    canon = canonical_decomposition(f)
    worst = max(abs(c - inst.set_cost) for c in canon.cost)
    results.append(_check("canonical cost", worst <= TOL, f"max deviation {worst:.2e}"))
    beta = beta_optimum_check(inst.gamma)
    g = hardness_value(beta, inst.gamma)
    target = 1.0 - math.log1p(inst.gamma) / inst.gamma
    ok = abs(beta - math.log1p(inst.gamma)) <= 1e-6 and abs(g - target) <= TOL
    results.append(_check("beta optimum", ok, f"β*={beta:.9f} g(β*)={g:.9f}"))
    return results


def _workload_checks(spec: WorkloadSpec) -> Iterator[CheckResult]:
    dag = spec.build()
    universe = sorted(shareable_nodes(dag))
    bc = BestCostOracle(dag, spec.cost_model, universe)
    benefit = BenefitOracle(bc)
    d = canonical_decomposition(benefit)
    result = marginal_greedy(d)
    yield CheckResult("workload bc(∅)", PASS, f"{benefit.baseline:.6f} over {len(universe)} shareable nodes")

    evaluated = bc.evaluated_subsets()
    for subset in evaluated:
        nodes = bc.nodes_of(subset)
        report = bc.report(subset)
        buc = best_use_cost(dag, nodes, spec.cost_model).total
        mat = materialization_cost(dag, nodes, spec.cost_model)
        if abs(report.total - (buc + mat)) > TOL:
            yield _check("bc = buc + c", False, f"subset {sorted(nodes)}")
            break
        if abs(plan_cost(dag, report.plan, spec.cost_model) - report.total) > TOL:
            yield _check("plan re-costing", False, f"subset {sorted(nodes)}")
            break
    else:
        yield _check("bc = buc + c, plan re-costing", True, f"{len(evaluated)} evaluated sets")

    if len(universe) <= 12 and is_submodular(benefit):
        lazy = lazy_marginal_greedy(d)
        yield _check("workload lazy = eager", lazy.chosen == result.chosen and lazy.trace == result.trace)
    else:
        yield CheckResult("workload lazy = eager", SKIP, "benefit is not submodular or universe too large")


BUILTIN_CHECKS: tuple[Callable[[], CheckResult], ...] = (
    lambda: _example1(100.0, 460.0, 370.0),
    lambda: _example1(50.0, 260.0, 220.0),
    _decomposition_identity,
    _lazy_matches_eager,
    _reduction_preserves_output,
)


def run_selfcheck(workload: WorkloadSpec | None = None, *, events: EventLog | None = None) -> list[CheckResult]:
    events = events or EventLog()
    results = [check() for check in BUILTIN_CHECKS]
    results.extend(planted_cover_checks(gen_planted_cover(12, 3, seed=0)))
    if workload is not None:
        results.extend(_workload_checks(workload))
    for r in results:
        events.emit("selfcheck.check", source="selfcheck", payload={"name": r.name, "status": r.status, "detail": r.detail})
    return results
