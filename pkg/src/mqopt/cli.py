"""CLI entry point for mqopt."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from . import __version__
from .config import RunConfig, resolve_config
from .errors import ConfigError, MissingCostError, MqoError, SizeGuardError, WorkloadError
from .events import EventLog, new_run_id, run_context
from .instances import (
    example1_workload,
    gen_join_workload,
    gen_planted_cover,
    random_coverage_instance,
)
from .pipeline import compare_workload, optimize_workload
from .report import (
    compare_csv,
    compare_payload,
    optimize_csv,
    optimize_payload,
    render_compare,
    render_optimize,
    to_json,
)
from .selfcheck import FAIL, PASS, CheckResult, planted_cover_checks, run_selfcheck
from .solvers import SOLVERS
from .workload import WorkloadSpec, dump_workload, load_workload

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2

_INVALID = (WorkloadError, ConfigError, MissingCostError, SizeGuardError)


def _find_project_root() -> Path:
    """Walk up to the nearest directory holding .mqopt.yaml or .git."""
    p = Path.cwd()
    while p != p.parent:
        if (p / ".mqopt.yaml").exists() or (p / ".git").exists():
            return p
        p = p.parent
    return Path.cwd()


def _output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _print_next_steps(console: Console, steps: list[str], *, title: str = "Next Steps") -> None:
    if not steps:
        return
    table = Table(title=title, show_header=False, box=None, pad_edge=False)
    table.add_column("Step", style="bold")
    table.add_column("Command", style="bold cyan")
    for idx, command in enumerate(steps, start=1):
        table.add_row(str(idx), command)
    console.print(table)


def _fail(
    console: Console,
    msg: str,
    *,
    recovery: list[str] | None = None,
    json_mode: bool = False,
    code: int = EXIT_INVALID,
) -> int:
    if json_mode:
        _output(json.dumps({"error": msg}) + "\n", None)
        return code
    console.print(Text(msg, style="red"))
    if recovery:
        _print_next_steps(console, recovery, title="Recovery")
    return code


def _print_command_help(
    console: Console,
    *,
    title: str,
    usage: str,
    about: str,
    options: list[tuple[str, str]],
    examples: list[str],
) -> int:
    console.print(Panel.fit(about, title=title, border_style="cyan"))
    console.print(Text(f"Usage: {usage}", style="bold"))
    if options:
        table = Table(show_header=False, box=None, pad_edge=False)
        table.add_column("Option", style="bold")
        table.add_column("Description", style="dim")
        for opt, desc in options:
            table.add_row(opt, desc)
        console.print(table)
    if examples:
        console.print(Text("Examples:", style="bold"))
        for example in examples:
            console.print(f"  {example}")
    return 0


_RUN_OPTIONS = [
    ("--algo NAME", f"Solver: {' | '.join(SOLVERS)} (default: marginal)"),
    ("--k N", "Cardinality cap for marginal/lazy; the universe is reduced first"),
    ("--prune / --no-prune", "Drop candidates whose ratio falls to 1 or below (default: on)"),
    ("--seed N", "Seed recorded with the run (default: 0)"),
    ("--report FMT", "text | json | csv (default: text)"),
    ("--trace", "Include the per-pick trace"),
    ("--out PATH", "Write the report to PATH instead of stdout"),
]


def _run_parser(prog: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=prog, add_help=False)
    p.add_argument("workload", nargs="?")
    p.add_argument("--algo", dest="algorithm", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--prune", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--trace", action="store_const", const=True, default=None)
    p.add_argument("--out", default=None)
    return p


def _resolve(args: argparse.Namespace) -> RunConfig:
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key in ("workload", "algorithm", "k", "prune", "seed", "report", "trace", "out")
    }
    return resolve_config(overrides, _find_project_root())


def _event_log(config: RunConfig) -> EventLog:
    return EventLog(Path(config.events) if config.events else None)


def _load(config: RunConfig, command: str) -> WorkloadSpec:
    if not config.workload:
        raise WorkloadError(
            f"no workload given; pass a path or set `workload` in .mqopt.yaml ({command})"
        )
    return load_workload(Path(config.workload))


def _emit_text(console: Console, out: str | None, render: Callable[[Console], None]) -> None:
    if out is None:
        render(console)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        render(Console(file=fh, width=120, color_system=None, force_terminal=False))


def cmd_optimize(argv: list[str], console: Console) -> int:
    if argv and argv[0] in ("-h", "--help"):
        return _print_command_help(
            console,
            title="mqopt optimize",
            usage="mqopt optimize <workload> [--algo NAME] [--k N] [--prune|--no-prune] [--report FMT] [--trace] [--out PATH]",
            about="Choose common subexpressions to materialize for a batch of queries.",
            options=_RUN_OPTIONS,
            examples=[
                "mqopt optimize workloads/example1.json",
                "mqopt optimize w.json --algo roy --report json",
                "mqopt optimize w.json --algo lazy --k 3 --trace",
            ],
        )

    args = _run_parser("mqopt optimize").parse_args(argv)
    json_mode = args.report == "json"
    try:
        config = _resolve(args)
        json_mode = config.report == "json"
        spec = _load(config, "optimize")
        with run_context(run_id=new_run_id()):
            outcome = optimize_workload(spec, config, _event_log(config))
    except _INVALID as e:
        return _fail(
            console,
            f"Invalid input: {e}",
            recovery=["mqopt optimize --help", "mqopt gen example1 --out workloads/example1.json"],
            json_mode=json_mode,
        )

    if config.report == "json":
        _output(to_json(optimize_payload(outcome, trace=config.trace)), config.out)
    elif config.report == "csv":
        _output(optimize_csv(outcome), config.out)
    else:
        _emit_text(console, config.out, lambda c: render_optimize(c, outcome, trace=config.trace))
    return EXIT_OK


def cmd_compare(argv: list[str], console: Console) -> int:
    if argv and argv[0] in ("-h", "--help"):
        return _print_command_help(
            console,
            title="mqopt compare",
            usage="mqopt compare <workload> [--k N] [--prune|--no-prune] [--report FMT] [--out PATH]",
            about=(
                "Run none, roy, marginal and lazy (plus exhaustive on small shareable sets)\n"
                "on one workload and tabulate plan cost, materialized nodes, oracle calls and CPU time."
            ),
            options=[opt for opt in _RUN_OPTIONS if not opt[0].startswith(("--algo", "--trace"))],
            examples=[
                "mqopt compare workloads/example1.json",
                "mqopt compare w.json --report csv --out compare.csv",
            ],
        )

    args = _run_parser("mqopt compare").parse_args(argv)
    json_mode = args.report == "json"
    try:
        config = _resolve(args)
        json_mode = config.report == "json"
        spec = _load(config, "compare")
        with run_context(run_id=new_run_id()):
            result = compare_workload(spec, config, _event_log(config))
    except _INVALID as e:
        return _fail(console, f"Invalid input: {e}", recovery=["mqopt compare --help"], json_mode=json_mode)

    if config.report == "json":
        _output(to_json(compare_payload(result)), config.out)
    elif config.report == "csv":
        _output(compare_csv(result), config.out)
    else:
        _emit_text(console, config.out, lambda c: render_compare(c, result))
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

_GEN_PARAMS: dict[str, dict[str, tuple[type, Any]]] = {
    "join-workload": {
        "queries": (int, 3),
        "relations": (int, 4),
        "overlap": (float, 0.5),
        "shape": (str, "mixed"),
    },
    "planted-cover": {
        "n": (int, 12),
        "l": (int, 3),
        "extra": (int, 0),
        "gamma": (float, 1.0),
    },
    "random-submodular": {
        "n": (int, 10),
        "items": (int, 0),
        "max_weight": (int, 10),
        "cost_spread": (float, 1.5),
    },
    "example1": {
        "join": (float, 100.0),
    },
}


def _parse_params(kind: str, tokens: list[str]) -> dict[str, Any]:
    spec = _GEN_PARAMS[kind]
    params = {name: default for name, (_, default) in spec.items()}
    for token in tokens:
        name, sep, raw = token.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {token!r}")
        if name not in spec:
            raise ConfigError(f"unknown parameter {name!r} for {kind}; expected {', '.join(spec)}")
        kind_type = spec[name][0]
        try:
            params[name] = kind_type(raw)
        except ValueError as e:
            raise ConfigError(f"{name}: cannot parse {raw!r} as {kind_type.__name__}") from e
    return params


def _render_checks(console: Console, results: list[CheckResult], *, title: str) -> None:
    table = Table(title=title, expand=False)
    table.add_column("Check", style="bold")
    table.add_column("Status")
    table.add_column("Detail", style="dim")
    for r in results:
        style = {PASS: "green", FAIL: "red"}.get(r.status, "yellow")
        table.add_row(r.name, Text(r.status, style=style), r.detail)
    console.print(table)


def cmd_gen(argv: list[str], console: Console) -> int:
    if not argv or argv[0] in ("-h", "--help"):
        return _print_command_help(
            console,
            title="mqopt gen",
            usage="mqopt gen <kind> [key=value ...] [--seed N] [--out PATH]",
            about="Generate a workload or a coverage instance as JSON (deterministic per seed).",
            options=[
                ("join-workload", "queries=3 relations=4 overlap=0.5 shape=mixed|chain|star"),
                ("planted-cover", "n=12 l=3 extra=0 gamma=1.0 (also runs the construction checks)"),
                ("random-submodular", "n=10 items=2n max_weight=10 cost_spread=1.5"),
                ("example1", "join=100 (the two-query fixture)"),
                ("--seed N", "RNG seed (default: 0)"),
                ("--out PATH", "Write the document to PATH instead of stdout"),
            ],
            examples=[
                "mqopt gen join-workload queries=3 relations=4 overlap=0.5 --seed 7 --out w.json",
                "mqopt gen planted-cover n=12 l=3 --out cover.json",
            ],
        )

    p = argparse.ArgumentParser(prog="mqopt gen", add_help=False)
    p.add_argument("kind")
    p.add_argument("params", nargs="*")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    args = p.parse_args(argv)

    if args.kind not in _GEN_PARAMS:
        return _fail(
            console,
            f"Unknown kind {args.kind!r}; expected one of {', '.join(_GEN_PARAMS)}",
            recovery=["mqopt gen --help"],
        )
    try:
        params = _parse_params(args.kind, args.params)
        checks: list[CheckResult] = []
        if args.kind == "join-workload":
            document = dump_workload(
                gen_join_workload(
                    params["queries"], params["relations"], params["overlap"], args.seed,
                    shape=params["shape"],
                )
            )
        elif args.kind == "example1":
            document = dump_workload(example1_workload(params["join"]))
        elif args.kind == "planted-cover":
            inst = gen_planted_cover(
                params["n"], params["l"], params["extra"], args.seed, gamma=params["gamma"]
            )
            document = json.dumps(inst.to_dict(), indent=2, sort_keys=True) + "\n"
            checks = planted_cover_checks(inst)
        else:
            inst_r = random_coverage_instance(
                params["n"],
                args.seed,
                items=params["items"] or None,
                max_weight=params["max_weight"],
                cost_spread=params["cost_spread"],
            )
            document = json.dumps(inst_r.to_dict(), indent=2, sort_keys=True) + "\n"
    except (MqoError, ValueError) as e:
        return _fail(console, f"Invalid parameters: {e}", recovery=["mqopt gen --help"])

    _output(document, args.out)
    if args.out is not None:
        console.print(Text(f"Wrote {args.kind} to {args.out}", style="green"))
        if checks:
            _render_checks(console, checks, title="Construction checks")
    if any(c.status == FAIL for c in checks):
        return EXIT_FAILED
    return EXIT_OK


def cmd_selfcheck(argv: list[str], console: Console) -> int:
    if argv and argv[0] in ("-h", "--help"):
        return _print_command_help(
            console,
            title="mqopt selfcheck",
            usage="mqopt selfcheck [workload] [--report text|json]",
            about=(
                "Run the two-query fixture and the fast property checks; with a workload,\n"
                "also check bc = buc + c, plan re-costing and lazy = eager on it."
            ),
            options=[("--report FMT", "text | json (default: text)")],
            examples=["mqopt selfcheck", "mqopt selfcheck workloads/example1.json"],
        )

    p = argparse.ArgumentParser(prog="mqopt selfcheck", add_help=False)
    p.add_argument("workload", nargs="?")
    p.add_argument("--report", choices=("text", "json"), default="text")
    args = p.parse_args(argv)
    json_mode = args.report == "json"

    spec: WorkloadSpec | None = None
    if args.workload:
        try:
            spec = load_workload(Path(args.workload))
        except WorkloadError as e:
            return _fail(console, f"Invalid workload: {e}", json_mode=json_mode)

    try:
        with run_context(run_id=new_run_id()):
            results = run_selfcheck(spec)
    except _INVALID as e:
        return _fail(console, f"Invalid workload: {e}", json_mode=json_mode)

    if json_mode:
        payload = [{"name": r.name, "status": r.status, "detail": r.detail} for r in results]
        _output(json.dumps(payload, indent=2, sort_keys=True) + "\n", None)
    else:
        _render_checks(console, results, title="mqopt selfcheck")
    if any(r.status == FAIL for r in results):
        return EXIT_FAILED
    return EXIT_OK


def _print_help(console: Console) -> None:
    help_text = Text()
    help_text.append("mqopt", style="bold")
    help_text.append(f" {__version__}", style="dim")
    help_text.append(" - multi-query optimization by materialization-benefit maximization")
    console.print(help_text)
    console.print()

    cmds = Table(show_header=False, expand=False, show_edge=False, pad_edge=False, box=None)
    cmds.add_column("Command", style="bold cyan")
    cmds.add_column("Description")
    cmds.add_row("mqopt optimize <workload>", "Pick nodes to materialize and report bc(∅), bc(X), mb(X)")
    cmds.add_row("mqopt compare <workload>", "Tabulate none / roy / marginal / lazy / exhaustive")
    cmds.add_row("mqopt gen <kind> [k=v ...]", "Generate workloads and coverage instances")
    cmds.add_row("mqopt selfcheck [workload]", "Run the built-in consistency checks")
    console.print(cmds)
    console.print()

    quick = Table(title="Quick Start", show_header=False, expand=False, show_edge=False, pad_edge=False)
    quick.add_column("Step", style="bold")
    quick.add_column("Command")
    quick.add_row("1", "mqopt gen example1 --out example1.json")
    quick.add_row("2", "mqopt optimize example1.json --trace")
    quick.add_row("3", "mqopt compare example1.json")
    console.print(quick)
    console.print(Text("Run `mqopt <command> --help` for command-specific details.", style="dim"))


def main(argv: list[str] | None = None) -> None:
    raw = argv if argv is not None else sys.argv[1:]
    console = Console()

    if "--version" in raw:
        console.print(Text(f"mqopt {__version__}", style="bold"))
        sys.exit(EXIT_OK)

    if not raw or raw == ["--help"] or raw == ["-h"]:
        _print_help(console)
        sys.exit(EXIT_OK)

    command = raw[0]

    if command == "optimize":
        sys.exit(cmd_optimize(raw[1:], console))

    if command == "compare":
        sys.exit(cmd_compare(raw[1:], console))

    if command == "gen":
        sys.exit(cmd_gen(raw[1:], console))

    if command == "selfcheck":
        sys.exit(cmd_selfcheck(raw[1:], console))

    _fail(console, f"Unknown command {command!r}", recovery=["mqopt --help"])
    sys.exit(EXIT_INVALID)


if __name__ == "__main__":
    main()
