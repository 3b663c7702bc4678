"""Combined AND-OR query DAG for a batch of join queries.

Equivalence nodes (OR) group every expression producing the same result and
are keyed by an exact ``Signature``; operator nodes (AND) apply scan, select or
join to equivalence-node inputs. Each query is expanded to all connected
relation subsets with one join per unordered split, nodes are unified across
queries by signature, and a dummy root ties the query results together.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .errors import SizeGuardError, WorkloadError
from .events import EventLog

MAX_QUERY_RELATIONS = 20

SCAN = "scan"
SELECT = "select"
JOIN = "join"
ROOT = "dummy-root"


@dataclass(frozen=True)
class Relation:
    name: str
    cardinality: int
    scan_cost: float | None = None


@dataclass(frozen=True, order=True)
class Selection:
    """Predicate on one relation; ``name`` identifies it across queries."""

    relation: str
    selectivity: float
    name: str = ""

    @property
    def token(self) -> str:
        return self.name or f"{self.relation}@{self.selectivity!r}"


@dataclass(frozen=True)
class Query:
    relations: tuple[str, ...]
    predicates: tuple[tuple[str, str, float], ...] = ()
    selections: tuple[Selection, ...] = ()
    name: str = ""


@dataclass(frozen=True, order=True)
class Signature:
    """Sorted relation names plus sorted selection tokens."""

    relations: tuple[str, ...]
    selections: tuple[str, ...] = ()

    @property
    def key(self) -> str:
        base = ",".join(self.relations)
        if self.selections:
            return f"{base};{','.join(self.selections)}"
        return base

    @property
    def label(self) -> str:
        if not self.relations:
            return "ROOT"
        text = "⋈".join(self.relations)
        if self.selections:
            text += "[" + ",".join(self.selections) + "]"
        return text


def canonical_signature(relations: Iterable[str], selections: Iterable[str | Selection] = ()) -> Signature:
    tokens = {s.token if isinstance(s, Selection) else s for s in selections}
    return Signature(tuple(sorted(set(relations))), tuple(sorted(tokens)))


@dataclass
class EquivalenceNode:
    id: int
    signature: Signature
    child_ops: list[int] = field(default_factory=list)
    parent_ops: list[int] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.signature.label

    @property
    def is_base(self) -> bool:
        return len(self.signature.relations) == 1 and not self.signature.selections


@dataclass(frozen=True)
class OperatorNode:
    id: int
    kind: str
    inputs: tuple[int, ...]
    output: int
    relation: str | None = None


@dataclass
class QueryDag:
    """Finished DAG; treat as immutable once ``build_dag`` returns it."""

    relations: dict[str, Relation]
    predicates: dict[frozenset[str], float]
    selections: dict[str, Selection]
    nodes: list[EquivalenceNode]
    ops: list[OperatorNode]
    root: int
    query_roots: tuple[int, ...]
    by_signature: dict[Signature, int]
    topo_order: tuple[int, ...] = ()

    def node(self, signature: Signature | str) -> EquivalenceNode:
        if isinstance(signature, str):
            for node in self.nodes:
                if node.signature.key == signature or node.label == signature:
                    return node
            raise KeyError(signature)
        return self.nodes[self.by_signature[signature]]

    def label(self, node_id: int) -> str:
        return self.nodes[node_id].label

    def descendants(self, node_id: int) -> set[int]:
        """``node_id`` plus every equivalence node below it."""
        seen = {node_id}
        stack = [node_id]
        while stack:
            for op_id in self.nodes[stack.pop()].child_ops:
                for child in self.ops[op_id].inputs:
                    if child not in seen:
                        seen.add(child)
                        stack.append(child)
        return seen

    def to_graph(self) -> nx.DiGraph:
        """Bipartite digraph with edges from each node to its children."""
        graph = nx.DiGraph()
        for node in self.nodes:
            graph.add_node(("eq", node.id), label=node.label)
        for op in self.ops:
            graph.add_node(("op", op.id), label=op.kind)
            graph.add_edge(("eq", op.output), ("op", op.id))
            for child in op.inputs:
                graph.add_edge(("op", op.id), ("eq", child))
        return graph

    def to_dot(self) -> str:
        lines = ["digraph qdag {", "  rankdir=BT;"]
        for node in self.nodes:
            lines.append(f'  e{node.id} [shape=ellipse, label="{node.label}"];')
        for op in self.ops:
            text = op.kind if op.relation is None else f"{op.kind} {op.relation}"
            lines.append(f'  o{op.id} [shape=box, label="{text}"];')
            lines.append(f"  o{op.id} -> e{op.output};")
            for child in op.inputs:
                lines.append(f"  e{child} -> o{op.id};")
        lines.append("}")
        return "\n".join(lines) + "\n"


class _Builder:
    def __init__(
        self,
        relations: dict[str, Relation],
        predicates: dict[frozenset[str], float],
        selections: dict[str, Selection],
    ) -> None:
        self.relations = relations
        self.predicates = predicates
        self.selections = selections
        self.nodes: list[EquivalenceNode] = []
        self.ops: list[OperatorNode] = []
        self.by_signature: dict[Signature, int] = {}
        self._op_keys: dict[tuple[str, tuple[int, ...], int], int] = {}

    def node_for(self, signature: Signature) -> tuple[int, bool]:
        existing = self.by_signature.get(signature)
        if existing is not None:
            return existing, False
        node = EquivalenceNode(len(self.nodes), signature)
        self.nodes.append(node)
        self.by_signature[signature] = node.id
        return node.id, True

    def add_op(self, kind: str, inputs: tuple[int, ...], output: int, relation: str | None = None) -> int:
        key = (kind, inputs, output)
        if key in self._op_keys:
            return self._op_keys[key]
        op = OperatorNode(len(self.ops), kind, inputs, output, relation)
        self.ops.append(op)
        self._op_keys[key] = op.id
        self.nodes[output].child_ops.append(op.id)
        for child in inputs:
            self.nodes[child].parent_ops.append(op.id)
        return op.id

    def base(self, relation: str) -> int:
        node_id, created = self.node_for(Signature((relation,)))
        if created:
            self.add_op(SCAN, (), node_id, relation)
        return node_id

    def expand(self, query: Query) -> int:
        rels = sorted(set(query.relations))
        tokens: dict[str, tuple[str, ...]] = {}
        for sel in query.selections:
            tokens[sel.relation] = tokens.get(sel.relation, ()) + (sel.token,)

        adjacency = [0] * len(rels)
        for i, a in enumerate(rels):
            for j, b in enumerate(rels):
                if i != j and frozenset((a, b)) in self.predicates:
                    adjacency[i] |= 1 << j

        connected: dict[int, int] = {}
        full = (1 << len(rels)) - 1
        for mask in sorted(range(1, full + 1), key=int.bit_count):
            if not _is_connected(mask, adjacency):
                continue
            names = [rels[i] for i in range(len(rels)) if mask >> i & 1]
            signature = canonical_signature(
                names, (t for name in names for t in tokens.get(name, ()))
            )
            if len(names) == 1:
                connected[mask] = self._single(names[0], signature)
                continue
            node_id, created = self.node_for(signature)
            connected[mask] = node_id
            if not created:
                continue
            low = mask & -mask
            rest = mask ^ low
            sub = rest
            while True:
                left = sub | low
                right = mask ^ left
                if right and left in connected and right in connected:
                    pair = sorted(
                        (connected[left], connected[right]),
                        key=lambda n: self.nodes[n].signature,
                    )
                    self.add_op(JOIN, tuple(pair), node_id)
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        return connected[full]

    def _single(self, relation: str, signature: Signature) -> int:
        base_id = self.base(relation)
        if not signature.selections:
            return base_id
        node_id, created = self.node_for(signature)
        if created:
            self.add_op(SELECT, (base_id,), node_id, relation)
        return node_id


def _is_connected(mask: int, adjacency: Sequence[int]) -> bool:
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        low = frontier & -frontier
        frontier ^= low
        reach = adjacency[low.bit_length() - 1] & mask & ~seen
        seen |= reach
        frontier |= reach
    return seen == mask


def _collect_predicates(queries: Sequence[Query]) -> dict[frozenset[str], float]:
    predicates: dict[frozenset[str], float] = {}
    for qi, query in enumerate(queries):
        names = set(query.relations)
        for pi, (a, b, selectivity) in enumerate(query.predicates):
            path = f"$.queries[{qi}].predicates[{pi}]"
            if a == b:
                raise WorkloadError(f"predicate joins {a!r} with itself", path=path)
            if a not in names or b not in names:
                raise WorkloadError(
                    f"predicate {a}-{b} names a relation outside the query", path=path
                )
            if not 0 < selectivity <= 1:
                raise WorkloadError(
                    f"selectivity must be in (0, 1], got {selectivity}", path=path
                )
            pair = frozenset((a, b))
            known = predicates.get(pair)
            if known is not None and known != selectivity:
                raise WorkloadError(
                    f"predicate {a}-{b} declared with selectivities {known} and {selectivity}",
                    path=path,
                )
            predicates[pair] = selectivity
    return predicates


def _collect_selections(queries: Sequence[Query]) -> dict[str, Selection]:
    selections: dict[str, Selection] = {}
    for qi, query in enumerate(queries):
        for si, sel in enumerate(query.selections):
            path = f"$.queries[{qi}].selections[{si}]"
            if sel.relation not in query.relations:
                raise WorkloadError(
                    f"selection on {sel.relation!r} outside the query", path=path
                )
            if not 0 < sel.selectivity <= 1:
                raise WorkloadError(
                    f"selectivity must be in (0, 1], got {sel.selectivity}", path=path
                )
            known = selections.get(sel.token)
            if known is not None and known != sel:
                raise WorkloadError(
                    f"selection {sel.token!r} declared twice with different meanings",
                    path=path,
                )
            selections[sel.token] = sel
    return selections


def _check_connected(queries: Sequence[Query], predicates: Mapping[frozenset[str], float]) -> None:
    for qi, query in enumerate(queries):
        graph = nx.Graph()
        graph.add_nodes_from(query.relations)
        graph.add_edges_from(
            tuple(pair)
            for pair in predicates
            if pair <= set(query.relations)
        )
        if not nx.is_connected(graph):
            parts = sorted(sorted(c) for c in nx.connected_components(graph))
            raise WorkloadError(
                f"join graph is disconnected: {parts}", path=f"$.queries[{qi}]"
            )


def build_dag(
    queries: Sequence[Query],
    relations: Iterable[Relation] | None = None,
    *,
    max_relations: int = MAX_QUERY_RELATIONS,
    events: EventLog | None = None,
) -> QueryDag:
    """Expand and unify ``queries`` into one DAG under a dummy root.

    Without ``relations`` every referenced relation gets cardinality 1.
    """
    if not queries:
        raise WorkloadError("at least one query is required", path="$.queries")

    catalog: dict[str, Relation] = {}
    if relations is not None:
        for rel in relations:
            catalog[rel.name] = rel
    for qi, query in enumerate(queries):
        if not query.relations:
            raise WorkloadError("query has no relations", path=f"$.queries[{qi}].relations")
        if len(set(query.relations)) > max_relations:
            raise SizeGuardError(
                f"query {qi} joins {len(set(query.relations))} relations; "
                f"the limit is {max_relations}"
            )
        for name in query.relations:
            if name not in catalog:
                if relations is not None:
                    raise WorkloadError(
                        f"unknown relation {name!r}", path=f"$.queries[{qi}].relations"
                    )
                catalog[name] = Relation(name, 1)

    predicates = _collect_predicates(queries)
    selections = _collect_selections(queries)
    _check_connected(queries, predicates)

    builder = _Builder(catalog, predicates, selections)
    query_roots = tuple(builder.expand(query) for query in queries)
    root, _ = builder.node_for(Signature(()))
    builder.add_op(ROOT, query_roots, root)

    dag = QueryDag(
        relations=catalog,
        predicates=predicates,
        selections=selections,
        nodes=builder.nodes,
        ops=builder.ops,
        root=root,
        query_roots=query_roots,
        by_signature=builder.by_signature,
    )
    dag.topo_order = _topological_order(dag)

    (events or EventLog()).emit(
        "dag.build",
        source="qdag",
        payload={
            "queries": len(queries),
            "equivalence_nodes": len(dag.nodes),
            "operator_nodes": len(dag.ops),
        },
    )
    return dag


def _topological_order(dag: QueryDag) -> tuple[int, ...]:
    """Equivalence-node ids with every child before its parents."""
    graph = nx.DiGraph()
    graph.add_nodes_from(node.id for node in dag.nodes)
    for op in dag.ops:
        for child in op.inputs:
            graph.add_edge(child, op.output)
    if not nx.is_directed_acyclic_graph(graph):
        raise WorkloadError("query DAG contains a cycle")
    return tuple(nx.lexicographical_topological_sort(graph))


def shareable_nodes(dag: QueryDag) -> frozenset[int]:
    """Non-base, non-root nodes usable by at least two consumers.

    A consumer is one input slot of the dummy root; a query submitted twice
    counts as two consumers of the same subtree.
    """
    reach: Counter[int] = Counter()
    for query_root in dag.query_roots:
        reach.update(dag.descendants(query_root))
    return frozenset(
        node_id
        for node_id, count in reach.items()
        if count >= 2 and node_id != dag.root and not dag.nodes[node_id].is_base
    )
