"""Tests for workload parsing and validation."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from mqopt.errors import WorkloadError
from mqopt.instances import example1_workload
from mqopt.qdag import Selection
from mqopt.workload import WorkloadSpec, load_workload, parse_workload

REPO_ROOT = Path(__file__).resolve().parent.parent


def _doc(**overrides: object) -> dict:
    data: dict = {
        "relations": [{"name": "A", "cardinality": 10}, {"name": "B", "cardinality": 20}],
        "queries": [{"relations": ["A", "B"], "predicates": [["A", "B", 0.1]]}],
    }
    data.update(overrides)
    return data


class TestParse:
    def test_minimal(self) -> None:
        spec = WorkloadSpec.from_dict(_doc())
        assert [r.name for r in spec.relations] == ["A", "B"]
        assert spec.queries[0].predicates == (("A", "B", 0.1),)
        assert spec.cost_model.mode == "analytical"

    def test_selections_both_forms(self) -> None:
        query = {
            "relations": ["A", "B"],
            "predicates": [["A", "B", 0.1]],
            "selections": [["A", 0.5], {"relation": "B", "selectivity": 0.2, "name": "b_small"}],
        }
        spec = WorkloadSpec.from_dict(_doc(queries=[query]))
        assert spec.queries[0].selections == (Selection("A", 0.5), Selection("B", 0.2, "b_small"))
        assert WorkloadSpec.from_dict(spec.to_dict()) == spec

    def test_yaml(self) -> None:
        text = """
relations:
  - {name: A, cardinality: 10}
  - {name: B, cardinality: 20}
queries:
  - relations: [A, B]
    predicates: [[A, B, 0.1]]
cost_model: {mode: fixture, scan: 1, join: 2, read: 1, write: 1}
"""
        spec = parse_workload(text, fmt="yaml")
        assert spec.cost_model.fixture.join == 2.0

    def test_invalid_json(self) -> None:
        with pytest.raises(WorkloadError, match="invalid JSON"):
            parse_workload("{")


class TestValidation:
    @pytest.mark.parametrize(
        "data, path",
        [
            (_doc(extra=1), "$"),
            (_doc(queries=[]), "$.queries"),
            (_doc(relations=[]), "$.relations"),
            (_doc(relations=[{"name": "A", "cardinality": 0}]), "$.relations[0].cardinality"),
            (
                _doc(relations=[{"name": "A", "cardinality": 1}, {"name": "A", "cardinality": 2}]),
                "$.relations[1].name",
            ),
            (_doc(queries=[{"relations": ["A", "Z"]}]), "$.queries[0].relations[1]"),
            (_doc(queries=[{"relations": ["A", "A"]}]), "$.queries[0].relations"),
            (_doc(queries=[{"relations": ["A", "B"], "predicates": [["A", "B"]]}]), "$.queries[0].predicates[0]"),
            (
                _doc(queries=[{"relations": ["A", "B"], "predicates": [["A", "B", "x"]]}]),
                "$.queries[0].predicates[0][2]",
            ),
            (_doc(seed="7"), "$.seed"),
            (_doc(cost_model={"mode": "fixture", "join": -5}), "$.cost_model.join"),
        ],
    )
    def test_error_names_path(self, data: dict, path: str) -> None:
        with pytest.raises(WorkloadError) as exc:
            WorkloadSpec.from_dict(data)
        assert exc.value.path == path
        assert str(exc.value).startswith(f"{path}: ")

    def test_semantic_errors_surface_at_build(self) -> None:
        spec = WorkloadSpec.from_dict(
            _doc(queries=[{"relations": ["A", "B"], "predicates": [["A", "B", 2.0]]}])
        )
        with pytest.raises(WorkloadError, match="selectivity"):
            spec.build()


class TestLoad:
    def test_shipped_example1(self) -> None:
        spec = load_workload(REPO_ROOT / "workloads" / "example1.json")
        assert spec.to_dict() == example1_workload().to_dict()

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(WorkloadError, match="cannot read"):
            load_workload(tmp_path / "nope.json")

    def test_yaml_suffix(self, tmp_path: Path) -> None:
        path = tmp_path / "w.yml"
        path.write_text(json.dumps(_doc()))
        assert load_workload(path).queries[0].relations == ("A", "B")
