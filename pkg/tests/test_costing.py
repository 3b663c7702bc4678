"""Tests for cost models, the bestCost DP and the benefit oracle."""

from __future__ import annotations

import pytest

from mqopt.costing import (
    ANALYTICAL,
    FIXTURE,
    AnalyticalParams,
    BenefitOracle,
    BestCostOracle,
    CostModel,
    FixtureCosts,
    Pricer,
    best_cost,
    best_use_cost,
    enumerate_plan_costs,
    estimate_cardinality,
    materialization_cost,
    measure_supermodularity,
    node_cardinality,
    plan_cost,
    supermodularity_report,
)
from mqopt.errors import MissingCostError, WorkloadError
from mqopt.events import EventLog
from mqopt.instances import example1_workload
from mqopt.qdag import Query, Relation, build_dag, shareable_nodes
from mqopt.setfn import AdditiveOracle, GroundSet, canonical_decomposition
from mqopt.workload import WorkloadSpec


def _ids(dag, *keys: str) -> list[int]:
    return [dag.node(key).id for key in keys]


class TestExample1:
    def test_baseline_and_shared_join(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        model = example1.cost_model
        assert best_cost(dag, [], model).total == 460.0
        report = best_cost(dag, _ids(dag, "B,C"), model)
        assert report.total == 370.0
        assert report.use_cost == 240.0
        assert report.materialization_cost == 130.0
        assert report.breakdown["B⋈C"] == {
            "compute": 120.0,
            "write": 10.0,
            "read": 10.0,
            "used": "read",
        }

    def test_unshared_node_hurts(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        assert best_cost(dag, _ids(dag, "A,B"), example1.cost_model).total == 480.0

    def test_cheaper_joins(self) -> None:
        spec = example1_workload(join_cost=50.0)
        dag = spec.build()
        assert best_cost(dag, [], spec.cost_model).total == 260.0
        assert best_cost(dag, _ids(dag, "B,C"), spec.cost_model).total == 220.0

    def test_benefit_oracle(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        bc = BestCostOracle(dag, example1.cost_model, sorted(shareable_nodes(dag)))
        benefit = BenefitOracle(bc)
        assert benefit.baseline == 460.0
        assert benefit(0) == 0.0
        assert benefit(1) == 90.0
        assert bc.ground.labels == ("B⋈C",)


class TestBestCostIdentities:
    def test_sum_of_use_and_materialization(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        model = example1.cost_model
        for keys in ([], ["B,C"], ["A,B"], ["A,B", "B,C"], ["A,B,C", "B,C"]):
            nodes = _ids(dag, *keys)
            total = best_cost(dag, nodes, model).total
            buc = best_use_cost(dag, nodes, model).total
            mat = materialization_cost(dag, nodes, model)
            assert total == pytest.approx(buc + mat, abs=1e-9)

    def test_plan_recosting(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        for keys in ([], ["B,C"], ["A,B", "B,C"]):
            report = best_cost(dag, _ids(dag, *keys), example1.cost_model)
            assert plan_cost(dag, report.plan, example1.cost_model) == pytest.approx(report.total)

    def test_matches_brute_force(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        for keys in ([], ["B,C"], ["A,B"], ["A,B", "B,C", "C,D"]):
            nodes = _ids(dag, *keys)
            expected = min(enumerate_plan_costs(dag, nodes, example1.cost_model))
            assert best_cost(dag, nodes, example1.cost_model).total == pytest.approx(expected)

    def test_materialized_descendant_is_read_below_materialized_parent(
        self, example1: WorkloadSpec
    ) -> None:
        dag = example1.build()
        report = best_cost(dag, _ids(dag, "B,C", "A,B,C"), example1.cost_model)
        # A⋈B⋈C is computed once from the stored B⋈C (100 + 10 + 10) and written
        assert report.breakdown["A⋈B⋈C"]["compute"] == 120.0


class TestCallAccounting:
    def test_canonical_uses_n_plus_one_cost_evaluations(self) -> None:
        query = Query(("A", "B", "C"), (("A", "B", 0.01), ("B", "C", 0.01)))
        dag = build_dag([query, query], [Relation(n, 500) for n in "ABC"])
        bc = BestCostOracle(dag, CostModel(), sorted(shareable_nodes(dag)))
        benefit = BenefitOracle(bc)
        n = len(benefit.ground)
        assert n == 3
        assert bc.call_count == 1
        canonical_decomposition(benefit)
        assert bc.call_count == 1 + n + 1


class TestFixtureModel:
    def test_missing_price_names_node(self, example1: WorkloadSpec) -> None:
        model = CostModel(mode=FIXTURE, fixture=FixtureCosts(scan=10.0, read=10.0, write=10.0))
        dag = example1.build()
        with pytest.raises(MissingCostError, match="join"):
            best_cost(dag, [], model)

    def test_map_with_default(self, example1: WorkloadSpec) -> None:
        model = CostModel(
            mode=FIXTURE,
            fixture=FixtureCosts(scan=10.0, join={"B,C": 20.0, "default": 100.0}, read=10.0, write=10.0),
        )
        dag = example1.build()
        # B⋈C now costs 40 to compute; each three-way join uses it
        assert best_cost(dag, [], model).total == 300.0

    def test_relation_scan_cost_overrides(self) -> None:
        spec = example1_workload()
        dag = build_dag(spec.queries, [Relation("A", 1000, scan_cost=1.0), *spec.relations[1:]])
        pricer = Pricer(dag, spec.cost_model)
        (scan_a,) = dag.node("A").child_ops
        (scan_b,) = dag.node("B").child_ops
        assert pricer.op_cost(scan_a) == 1.0
        assert pricer.op_cost(scan_b) == 10.0


class TestAnalyticalModel:
    def test_cardinality(self) -> None:
        assert estimate_cardinality({"A": 1000, "B": 1000}, [("A", "B", 0.001), ("A", "Z", 0.5)]) == 1000.0
        assert estimate_cardinality({"A": 100}, selections=[("A", 0.25)]) == 25.0

    def test_node_cardinality_and_prices(self, example1: WorkloadSpec) -> None:
        dag = example1.build()
        model = CostModel()
        ab = dag.node("A,B").id
        assert node_cardinality(dag, ab) == pytest.approx(1000.0)
        pricer = Pricer(dag, model)
        assert pricer.blocks(ab) == 25
        (scan_a,) = dag.node("A").child_ops
        assert pricer.op_cost(scan_a) == 10.0 + 2.0 * 25
        (join_ab,) = dag.node("A,B").child_ops
        assert pricer.op_cost(join_ab) == pytest.approx(2.0 * (25 + 25 * 25) + 0.2 * 25)
        assert pricer.read_cost(ab) == 10.0 + 2.0 * 25
        assert pricer.write_cost(ab) == 10.0 + 4.0 * 25

    def test_params(self) -> None:
        params = AnalyticalParams(block_size=1000, tuple_width=300)
        assert params.tuples_per_block == 3
        assert params.blocks(0) == 1
        assert params.blocks(10) == 4


class TestCostModelParsing:
    def test_defaults(self) -> None:
        assert CostModel.from_dict(None) == CostModel()
        assert CostModel.from_dict({"seek": 5}).params.seek == 5.0

    def test_fixture_round_trip(self, example1: WorkloadSpec) -> None:
        model = example1.cost_model
        assert CostModel.from_dict(model.to_dict()) == model
        assert CostModel().to_dict()["mode"] == ANALYTICAL

    @pytest.mark.parametrize(
        "data, path",
        [
            ({"mode": "magic"}, "$.cost_model.mode"),
            ({"mode": "fixture", "join": -1}, "$.cost_model.join"),
            ({"mode": "fixture", "scan": {"A": "x"}}, "$.cost_model.scan.A"),
            ({"read": "fast"}, "$.cost_model.read"),
            ({"mode": "analytical", "bogus": 1}, "$.cost_model"),
        ],
    )
    def test_invalid(self, data: dict, path: str) -> None:
        with pytest.raises(WorkloadError) as exc:
            CostModel.from_dict(data)
        assert exc.value.path == path


class TestSupermodularity:
    def test_single_node_universe(self, example1: WorkloadSpec) -> None:
        events = EventLog()
        report = supermodularity_report(example1.build(), example1.cost_model, events=events)
        assert report.universe_size == 1
        assert report.fraction == 1.0
        (event,) = events.of_type("costing.supermodularity")
        assert event["payload"]["mode"] == "exhaustive"

    def test_additive_benefit_is_fully_consistent(self) -> None:
        report = measure_supermodularity(AdditiveOracle(GroundSet(6), [3, 1, 4, 1, 5, 9]))
        assert report.fraction == 1.0
        assert report.to_dict()["checked"] == report.tally.checked
