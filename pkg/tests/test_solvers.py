"""Tests for MarginalGreedy, its lazy variant and the reference solvers."""

from __future__ import annotations

import math

import pytest

from mqopt.costing import BenefitOracle, BestCostOracle
from mqopt.errors import DomainError, PreconditionError, SizeGuardError
from mqopt.events import EventLog
from mqopt.instances import gen_random_submodular
from mqopt.qdag import shareable_nodes
from mqopt.setfn import (
    AdditiveOracle,
    CoverageOracle,
    Decomposition,
    FunctionOracle,
    GroundSet,
    canonical_decomposition,
)
from mqopt.solvers import (
    PHASE_DESCENT,
    PHASE_MAIN,
    PHASE_SWEEP,
    approx_bound,
    exhaustive_max,
    lazy_marginal_greedy,
    marginal_greedy,
    roy_greedy,
    universe_reduce,
)
from mqopt.workload import WorkloadSpec


def _additive(weights: list[float], cost: list[float]) -> Decomposition:
    return Decomposition(AdditiveOracle(GroundSet(len(weights)), weights), tuple(cost))


class TestMarginalGreedy:
    def test_two_element_function_takes_negative_cost_element(self, wp_oracle: FunctionOracle) -> None:
        result = marginal_greedy(canonical_decomposition(wp_oracle))
        assert result.chosen == 0b01
        assert result.objective == 3.0
        assert len(result.trace) == 1
        record = result.trace[0]
        assert record.phase == PHASE_SWEEP
        assert record.element == 0
        assert record.ratio == -0.5

    def test_stops_when_ratio_reaches_one(self) -> None:
        result = marginal_greedy(_additive([3.0, 1.0, 2.0], [1.0, 2.0, 2.0]))
        assert result.chosen_ids == [0]
        assert result.objective == 2.0
        assert [r.ratio for r in result.accepted(PHASE_MAIN)] == [3.0]

    def test_ties_go_to_smallest_id(self) -> None:
        d = Decomposition(CoverageOracle([[0], [0]], [5]), (1.0, 1.0))
        result = marginal_greedy(d)
        assert result.chosen == 0b01

    def test_zero_cost_element_with_gain_is_taken_first(self) -> None:
        result = marginal_greedy(_additive([10.0, 1.0], [2.0, 0.0]))
        assert result.trace[0].element == 1
        assert math.isinf(result.trace[0].ratio)
        assert result.chosen == 0b11

    def test_zero_cost_without_gain_is_never_taken(self) -> None:
        result = marginal_greedy(_additive([0.0, 4.0], [0.0, 1.0]))
        assert result.chosen == 0b10

    def test_cap(self) -> None:
        d = _additive([5.0, 4.0, 3.0], [1.0, 1.0, 1.0])
        assert marginal_greedy(d, k=2).chosen == 0b011
        assert marginal_greedy(d, k=0).chosen == 0

    def test_cap_applies_to_sweep(self) -> None:
        d = _additive([5.0, 1.0, 1.0], [1.0, -1.0, -1.0])
        result = marginal_greedy(d, k=2)
        assert result.chosen == 0b011
        assert [r.phase for r in result.trace] == [PHASE_MAIN, PHASE_SWEEP]

    def test_cap_out_of_range(self) -> None:
        d = _additive([1.0], [0.5])
        with pytest.raises(PreconditionError):
            marginal_greedy(d, k=2)
        with pytest.raises(PreconditionError):
            marginal_greedy(d, k=-1)

    def test_sweep_skips_elements_that_lower_f(self) -> None:
        # f_m is not monotone here: adding element 1 after 0 drops f_m by 5
        table = {0: 0.0, 1: 4.0, 2: 1.0, 3: -1.0}
        f_m = FunctionOracle(GroundSet(2), lambda s: table[sum(1 << e for e in s)], normalized=True)
        result = marginal_greedy(Decomposition(f_m, (1.0, -1.0)))
        assert result.chosen == 0b01
        assert result.objective == 3.0

    def test_events(self) -> None:
        events = EventLog()
        marginal_greedy(_additive([3.0, 1.0], [1.0, 2.0]), events=events, prune=True)
        types = [ev["type"] for ev in events.records]
        assert types[0] == "solver.run.start"
        assert types[-1] == "solver.run.end"
        assert "solver.pick" in types
        assert "solver.prune" in types
        assert all(ev["source"] == "solver.marginal" for ev in events.records)

    def test_oracle_calls_counts_the_run_only(self) -> None:
        d = gen_random_submodular(8, seed=1)
        d.f_m(0b1)
        before = d.f_m.call_count
        result = marginal_greedy(d)
        assert result.oracle_calls == d.f_m.call_count - before

    def test_result_to_dict_encodes_infinity(self) -> None:
        result = marginal_greedy(_additive([1.0], [0.0]))
        data = result.to_dict(GroundSet(1, ("x",)))
        assert data["trace"][0]["ratio"] == "inf"
        assert data["chosen_labels"] == ["x"]


class TestLazyMarginalGreedy:
    @pytest.mark.parametrize("seed", range(6))
    def test_matches_eager(self, seed: int) -> None:
        eager = marginal_greedy(gen_random_submodular(20, seed))
        lazy = lazy_marginal_greedy(gen_random_submodular(20, seed))
        assert lazy.chosen == eager.chosen
        assert lazy.accepted() == eager.accepted()
        assert lazy.oracle_calls <= eager.oracle_calls

    def test_two_element_function(self, wp_oracle: FunctionOracle) -> None:
        result = lazy_marginal_greedy(canonical_decomposition(wp_oracle))
        assert result.chosen == 0b01
        assert result.algorithm == "lazy"

    def test_ties_go_to_smallest_id(self) -> None:
        d = Decomposition(CoverageOracle([[0], [0], [1]], [5, 5]), (1.0, 1.0, 1.0))
        result = lazy_marginal_greedy(d)
        assert [r.element for r in result.trace] == [0, 2]

    def test_cap(self) -> None:
        d = _additive([5.0, 4.0, 3.0], [1.0, 1.0, 1.0])
        assert lazy_marginal_greedy(d, k=1).chosen == 0b001


class TestRoyGreedy:
    def test_example1_picks_shared_join(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        bc = BestCostOracle(dag, example1.cost_model, sorted(shareable_nodes(dag)))
        result = roy_greedy(bc)
        assert result.chosen == 0b1
        assert result.objective == 370.0
        assert result.trace[0].ratio == 90.0
        assert result.trace[0].phase == PHASE_DESCENT

    def test_strict_improvement_only(self) -> None:
        costs = {0: 10.0, 1: 10.0, 2: 7.0, 3: 8.0}
        bc = FunctionOracle(GroundSet(2), lambda s: costs[sum(1 << e for e in s)])
        result = roy_greedy(bc)
        assert result.chosen == 0b10
        assert result.objective == 7.0


class TestExhaustive:
    def test_first_maximum_in_mask_order(self) -> None:
        values = {0: 0.0, 1: 1.0, 2: 1.0, 3: 0.5}
        f = FunctionOracle(GroundSet(2), lambda s: values[sum(1 << e for e in s)])
        result = exhaustive_max(f)
        assert result.chosen == 0b01
        assert result.objective == 1.0

    def test_two_element_function(self, wp_oracle: FunctionOracle) -> None:
        assert exhaustive_max(wp_oracle).chosen == 0b01

    def test_size_guard(self) -> None:
        f = AdditiveOracle(GroundSet(5), [1.0] * 5)
        with pytest.raises(SizeGuardError):
            exhaustive_max(f, limit=4)


class TestUniverseReduce:
    def test_k_equal_n_returns_universe(self) -> None:
        d = gen_random_submodular(6, seed=0)
        assert universe_reduce(d, None, 6) is d.ground

    def test_k_out_of_range(self) -> None:
        d = gen_random_submodular(6, seed=0)
        with pytest.raises(PreconditionError):
            universe_reduce(d, None, 0)
        with pytest.raises(PreconditionError):
            universe_reduce(d, None, 7)

    def test_keeps_non_positive_costs(self) -> None:
        d = _additive([5.0, 1.0, 1.0, 0.5], [1.0, -1.0, 0.0, 1.0])
        reduced = universe_reduce(d, None, 1)
        # the zero-cost element ranks +inf, so only it survives among candidates
        assert reduced.elements == (1, 2)
        assert marginal_greedy(d, reduced, k=1).chosen == marginal_greedy(d, k=1).chosen == 0b100

    @pytest.mark.parametrize("seed", range(5))
    def test_preserves_capped_output(self, seed: int) -> None:
        d = gen_random_submodular(10, seed)
        for k in (1, 3, 5):
            reduced = universe_reduce(d, None, k)
            assert len(reduced) >= min(k, 10)
            full = marginal_greedy(d, k=k)
            small = marginal_greedy(d, reduced, k=min(k, len(reduced)))
            assert small.chosen == full.chosen


class TestApproxBound:
    def test_gamma_one(self) -> None:
        bound = approx_bound(2.0, 2.0)
        assert bound.gamma == 1.0
        assert bound.factor == pytest.approx(1.0 - math.log(2.0), abs=1e-12)

    def test_gamma_e_minus_one_forms_agree(self) -> None:
        gamma = math.e - 1.0
        bound = approx_bound(1.0, 1.0 / gamma)
        assert bound.gamma == pytest.approx(gamma, abs=1e-12)
        assert bound.factor == pytest.approx(1.0 - math.log1p(gamma) / gamma, abs=1e-12)
        assert bound.factor == pytest.approx(1.0 - 1.0 / gamma, abs=1e-12)

    def test_zero_cost(self) -> None:
        bound = approx_bound(3.0, 0.0)
        assert bound.factor == 1.0
        assert math.isinf(bound.gamma)

    def test_factor_grows_with_gamma(self) -> None:
        factors = [approx_bound(g, 1.0).factor for g in (0.5, 1.0, 4.0, 100.0)]
        assert factors == sorted(factors)
        assert all(0.0 < f < 1.0 for f in factors)

    def test_domain(self) -> None:
        with pytest.raises(DomainError):
            approx_bound(0.0, 1.0)
        with pytest.raises(DomainError):
            approx_bound(1.0, -0.1)


def test_benefit_decomposition_on_example1(example1: WorkloadSpec) -> None:
    dag = example1.build()
    benefit = BenefitOracle(BestCostOracle(dag, example1.cost_model, sorted(shareable_nodes(dag))))
    eager = marginal_greedy(canonical_decomposition(benefit))
    assert eager.chosen == 0b1
    assert eager.objective == pytest.approx(90.0, abs=1e-9)
