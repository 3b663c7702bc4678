"""Text, JSON and CSV renderings of optimize and compare results.

Costs are printed with six decimals in text and CSV so reports diff cleanly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

from rich.console import Console
from rich.table import Table
from rich.text import Text

from .pipeline import CompareResult, OptimizeOutcome
from .solvers import Bound


def fmt_cost(value: float) -> str:
    return f"{value:.6f}"


def _bound_dict(bound: Bound | None) -> dict[str, Any] | None:
    if bound is None:
        return None
    return {
        "f_theta": bound.f_theta,
        "c_theta": bound.c_theta,
        "gamma": bound.gamma if bound.c_theta else "inf",
        "factor": bound.factor,
    }


def optimize_payload(outcome: OptimizeOutcome, *, trace: bool = False) -> dict[str, Any]:
    data: dict[str, Any] = {
        "workload": outcome.workload,
        "algorithm": outcome.algorithm,
        "bc_empty": outcome.baseline,
        "equivalence_nodes": outcome.equivalence_nodes,
        "operator_nodes": outcome.operator_nodes,
        "shareable_nodes": outcome.shareable,
        "oracle_calls": outcome.oracle_calls,
    }
    if outcome.result is None:
        return data
    data.update(
        materialized=list(outcome.chosen),
        bc_chosen=outcome.plan_cost,
        benefit=outcome.benefit,
        solver_oracle_calls=outcome.result.oracle_calls,
    )
    if outcome.cost_report is not None:
        data["cost_report"] = outcome.cost_report.to_dict()
    if outcome.reduced_universe is not None:
        data["reduced_universe"] = outcome.reduced_universe
    if outcome.bound is not None:
        data["bound"] = _bound_dict(outcome.bound)
    if trace:
        data["trace"] = [r.to_dict() for r in outcome.result.trace]
    return data


def compare_payload(result: CompareResult) -> dict[str, Any]:
    data: dict[str, Any] = {
        "workload": result.workload,
        "bc_empty": result.baseline,
        "shareable_nodes": result.shareable,
        "rows": [
            {
                "algorithm": row.algorithm,
                "plan_cost": row.plan_cost,
                "materialized": row.materialized,
                "chosen": list(row.chosen),
                "oracle_calls": row.oracle_calls,
                "cpu_seconds": row.cpu_seconds,
            }
            for row in result.rows
        ],
    }
    if result.bound is not None:
        data["bound"] = _bound_dict(result.bound)
    if result.supermodularity is not None:
        data["supermodularity"] = result.supermodularity.to_dict()
    return data


def to_json(payload: dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv(header: list[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def optimize_csv(outcome: OptimizeOutcome) -> str:
    header = [
        "algorithm",
        "materialized",
        "bc_empty",
        "bc_chosen",
        "benefit",
        "equivalence_nodes",
        "operator_nodes",
        "shareable_nodes",
        "oracle_calls",
    ]
    row = [
        outcome.algorithm,
        ";".join(outcome.chosen),
        fmt_cost(outcome.baseline),
        fmt_cost(outcome.plan_cost),
        fmt_cost(outcome.benefit),
        outcome.equivalence_nodes,
        outcome.operator_nodes,
        outcome.shareable,
        outcome.oracle_calls,
    ]
    return _csv(header, [row])


def compare_csv(result: CompareResult) -> str:
    header = ["algorithm", "plan_cost", "materialized", "oracle_calls", "cpu_seconds", "chosen"]
    rows = [
        [
            row.algorithm,
            fmt_cost(row.plan_cost),
            row.materialized,
            row.oracle_calls,
            fmt_cost(row.cpu_seconds),
            ";".join(row.chosen),
        ]
        for row in result.rows
    ]
    return _csv(header, rows)


def render_optimize(console: Console, outcome: OptimizeOutcome, *, trace: bool = False) -> None:
    title = f"mqopt optimize · {outcome.algorithm}"
    if outcome.workload:
        title += f" · {outcome.workload}"
    table = Table(title=title, show_header=False, box=None, pad_edge=False)
    table.add_column("Field", style="bold")
    table.add_column("Value")
    if outcome.result is not None:
        chosen = ", ".join(outcome.chosen) if outcome.chosen else "∅"
        table.add_row("materialized", chosen)
    table.add_row("bc(∅)", fmt_cost(outcome.baseline))
    if outcome.result is not None:
        table.add_row("bc(X)", fmt_cost(outcome.plan_cost))
        table.add_row("mb(X)", fmt_cost(outcome.benefit))
    table.add_row("equivalence nodes", str(outcome.equivalence_nodes))
    table.add_row("operator nodes", str(outcome.operator_nodes))
    table.add_row("shareable nodes", str(outcome.shareable))
    if outcome.reduced_universe is not None:
        table.add_row("reduced universe", str(outcome.reduced_universe))
    table.add_row("oracle calls", str(outcome.oracle_calls))
    if outcome.bound is not None:
        table.add_row("guarantee factor", fmt_cost(outcome.bound.factor))
    console.print(table)

    if trace and outcome.result is not None:
        rows = Table(title="Trace", expand=False)
        rows.add_column("#", justify="right", style="dim")
        rows.add_column("Phase")
        rows.add_column("Node", style="bold cyan")
        rows.add_column("Ratio", justify="right")
        rows.add_column("f(X)", justify="right")
        rows.add_column("f_m(X)", justify="right")
        for i, record in enumerate(outcome.result.trace, start=1):
            rows.add_row(
                str(i),
                record.phase,
                outcome.labels[record.element] if outcome.labels else str(record.element),
                _fmt_ratio(record.ratio),
                fmt_cost(record.f_value_after),
                fmt_cost(record.f_m_value_after),
            )
        if not outcome.result.trace:
            console.print(Text("No elements picked.", style="dim"))
        else:
            console.print(rows)


def _fmt_ratio(ratio: float) -> str:
    if math.isfinite(ratio):
        return fmt_cost(ratio)
    return "inf" if ratio > 0 else "-inf"


def render_compare(console: Console, result: CompareResult) -> None:
    title = "mqopt compare"
    if result.workload:
        title += f" · {result.workload}"
    table = Table(title=title, expand=False)
    table.add_column("Algorithm", style="bold cyan")
    table.add_column("Plan cost", justify="right")
    table.add_column("Materialized", justify="right")
    table.add_column("Oracle calls", justify="right")
    table.add_column("CPU s", justify="right", style="dim")
    table.add_column("Chosen", style="dim")
    for row in result.rows:
        table.add_row(
            row.algorithm,
            fmt_cost(row.plan_cost),
            str(row.materialized),
            str(row.oracle_calls),
            fmt_cost(row.cpu_seconds),
            ", ".join(row.chosen) or "∅",
        )
    console.print(table)
    console.print(
        Text(f"bc(∅) = {fmt_cost(result.baseline)}, shareable nodes = {result.shareable}", style="dim")
    )
    if result.bound is not None:
        console.print(
            Text(
                f"exhaustive optimum: γ = {_fmt_ratio(result.bound.gamma)}, "
                f"guaranteed factor = {fmt_cost(result.bound.factor)}",
                style="dim",
            )
        )
    if result.supermodularity is not None:
        sm = result.supermodularity
        console.print(
            Text(
                f"diminishing returns held on {sm.tally.satisfied}/{sm.tally.checked} "
                f"{sm.tally.mode} triples ({sm.fraction:.1%})",
                style="dim",
            )
        )
