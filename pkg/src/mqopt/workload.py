"""Workload documents: relations, queries and a cost model.

Schema (JSON, or YAML with the same shape)::

    {
      "name": "example1",                      # optional
      "seed": 7,                               # optional, set by generators
      "relations": [{"name": "A", "cardinality": 1000, "scan_cost": 10}],
      "queries": [
        {
          "name": "Q1",                        # optional
          "relations": ["A", "B"],
          "predicates": [["A", "B", 0.001]],
          "selections": [["A", 0.5]]           # or {"relation", "selectivity", "name"}
        }
      ],
      "cost_model": {"mode": "fixture", "scan": 10, "join": 100, "read": 10, "write": 10}
    }

Every validation failure raises ``WorkloadError`` naming the JSON path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .costing import CostModel
from .errors import WorkloadError
from .events import EventLog
from .qdag import Query, QueryDag, Relation, Selection, build_dag


@dataclass(frozen=True)
class WorkloadSpec:
    relations: tuple[Relation, ...]
    queries: tuple[Query, ...]
    cost_model: CostModel = field(default_factory=CostModel)
    seed: int | None = None
    name: str = ""

    @classmethod
    def from_dict(cls, data: Any) -> WorkloadSpec:
        if not isinstance(data, Mapping):
            raise WorkloadError("workload must be an object")
        unknown = set(data) - {"name", "seed", "relations", "queries", "cost_model"}
        if unknown:
            raise WorkloadError(f"unknown keys: {sorted(unknown)}")

        relations = _parse_relations(data.get("relations"))
        queries = _parse_queries(data.get("queries"), {r.name for r in relations})
        seed = data.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise WorkloadError("seed must be an integer", path="$.seed")
        name = data.get("name", "")
        if not isinstance(name, str):
            raise WorkloadError("name must be a string", path="$.name")
        return cls(
            relations=relations,
            queries=queries,
            cost_model=CostModel.from_dict(data.get("cost_model")),
            seed=seed,
            name=name,
        )

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "relations": [_relation_to_dict(r) for r in self.relations],
            "queries": [_query_to_dict(q) for q in self.queries],
            "cost_model": self.cost_model.to_dict(),
        }
        if self.name:
            data["name"] = self.name
        if self.seed is not None:
            data["seed"] = self.seed
        return data

    def build(self, *, events: EventLog | None = None) -> QueryDag:
        return build_dag(self.queries, self.relations, events=events)


def _relation_to_dict(relation: Relation) -> dict[str, Any]:
    data: dict[str, Any] = {"name": relation.name, "cardinality": relation.cardinality}
    if relation.scan_cost is not None:
        data["scan_cost"] = relation.scan_cost
    return data


def _query_to_dict(query: Query) -> dict[str, Any]:
    data: dict[str, Any] = {
        "relations": list(query.relations),
        "predicates": [[a, b, s] for a, b, s in query.predicates],
    }
    if query.selections:
        data["selections"] = [
            {"relation": s.relation, "selectivity": s.selectivity, "name": s.name}
            if s.name
            else [s.relation, s.selectivity]
            for s in query.selections
        ]
    if query.name:
        data["name"] = query.name
    return data


def _number(value: Any, *, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WorkloadError("expected a number", path=path)
    return value


def _parse_relations(raw: Any) -> tuple[Relation, ...]:
    if not isinstance(raw, list) or not raw:
        raise WorkloadError("expected a non-empty list of relations", path="$.relations")
    relations: list[Relation] = []
    seen: set[str] = set()
    for i, item in enumerate(raw):
        path = f"$.relations[{i}]"
        if not isinstance(item, Mapping):
            raise WorkloadError("relation must be an object", path=path)
        name = item.get("name")
        if not isinstance(name, str) or not name:
            raise WorkloadError("relation name must be a non-empty string", path=f"{path}.name")
        if name in seen:
            raise WorkloadError(f"duplicate relation {name!r}", path=f"{path}.name")
        seen.add(name)
        cardinality = item.get("cardinality")
        if isinstance(cardinality, bool) or not isinstance(cardinality, int) or cardinality <= 0:
            raise WorkloadError("cardinality must be a positive integer", path=f"{path}.cardinality")
        scan_cost = item.get("scan_cost")
        if scan_cost is not None:
            scan_cost = float(_number(scan_cost, path=f"{path}.scan_cost"))
            if scan_cost < 0:
                raise WorkloadError("scan_cost must be non-negative", path=f"{path}.scan_cost")
        relations.append(Relation(name, cardinality, scan_cost))
    return tuple(relations)


def _parse_selection(item: Any, *, path: str) -> Selection:
    if isinstance(item, Mapping):
        relation = item.get("relation")
        selectivity = item.get("selectivity")
        name = item.get("name", "")
    elif isinstance(item, list) and len(item) == 2:
        relation, selectivity = item
        name = ""
    else:
        raise WorkloadError("selection must be [relation, selectivity] or an object", path=path)
    if not isinstance(relation, str) or not isinstance(name, str):
        raise WorkloadError("selection relation and name must be strings", path=path)
    return Selection(relation, float(_number(selectivity, path=path)), name)


def _parse_queries(raw: Any, known: set[str]) -> tuple[Query, ...]:
    if not isinstance(raw, list) or not raw:
        raise WorkloadError("expected a non-empty list of queries", path="$.queries")
    queries: list[Query] = []
    for i, item in enumerate(raw):
        path = f"$.queries[{i}]"
        if not isinstance(item, Mapping):
            raise WorkloadError("query must be an object", path=path)
        rels = item.get("relations")
        if not isinstance(rels, list) or not rels or not all(isinstance(r, str) for r in rels):
            raise WorkloadError("expected a non-empty list of relation names", path=f"{path}.relations")
        if len(set(rels)) != len(rels):
            raise WorkloadError("relation listed twice", path=f"{path}.relations")
        for j, name in enumerate(rels):
            if name not in known:
                raise WorkloadError(f"unknown relation {name!r}", path=f"{path}.relations[{j}]")

        predicates: list[tuple[str, str, float]] = []
        for j, pred in enumerate(item.get("predicates", [])):
            ppath = f"{path}.predicates[{j}]"
            if not isinstance(pred, list) or len(pred) != 3:
                raise WorkloadError("predicate must be [rel, rel, selectivity]", path=ppath)
            a, b, sel = pred
            if not isinstance(a, str) or not isinstance(b, str):
                raise WorkloadError("predicate relations must be strings", path=ppath)
            predicates.append((a, b, float(_number(sel, path=f"{ppath}[2]"))))

        selections = tuple(
            _parse_selection(sel, path=f"{path}.selections[{j}]")
            for j, sel in enumerate(item.get("selections", []))
        )
        name = item.get("name", "")
        if not isinstance(name, str):
            raise WorkloadError("query name must be a string", path=f"{path}.name")
        queries.append(Query(tuple(rels), tuple(predicates), selections, name))
    return tuple(queries)


def parse_workload(text: str, *, fmt: str = "json") -> WorkloadSpec:
    try:
        if fmt == "yaml":
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        raise WorkloadError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    except yaml.YAMLError as e:
        raise WorkloadError(f"invalid YAML: {e}") from e
    return WorkloadSpec.from_dict(data)


def load_workload(path: Path) -> WorkloadSpec:
    try:
        text = path.read_text()
    except OSError as e:
        raise WorkloadError(f"cannot read {path}: {e.strerror}") from e
    fmt = "yaml" if path.suffix in (".yaml", ".yml") else "json"
    return parse_workload(text, fmt=fmt)


def dump_workload(spec: WorkloadSpec) -> str:
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n"
