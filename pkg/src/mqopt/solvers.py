"""Selection algorithms over set-function oracles.

MarginalGreedy and its lazy variant maximize f = f_m - c by the ratio
f_m'(x, X) / c(x); Roy's greedy descends a cost oracle directly; the
exhaustive solver is the brute-force reference. Every solver returns a
``SolverResult`` and reports its progress to an ``EventLog``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import DomainError, PreconditionError, SizeGuardError
from .events import EventLog
from .setfn import Decomposition, GroundSet, SetFunctionOracle, members

EXHAUSTIVE_LIMIT = 22

PHASE_MAIN = "main"
PHASE_SWEEP = "sweep"
PHASE_DESCENT = "descent"


def _json_float(value: float) -> float | str:
    if math.isfinite(value):
        return value
    return "inf" if value > 0 else "-inf"


@dataclass(frozen=True)
class IterationRecord:
    element: int
    ratio: float
    f_value_after: float
    f_m_value_after: float
    phase: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "element": self.element,
            "ratio": _json_float(self.ratio),
            "f_value_after": self.f_value_after,
            "f_m_value_after": self.f_m_value_after,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class SolverResult:
    """Chosen subset X, its objective value, the pick trace and oracle usage.

    For ``roy`` the objective is bc(X) (a cost, lower is better); for every
    other algorithm it is f(X).
    """

    algorithm: str
    chosen: int
    objective: float
    trace: tuple[IterationRecord, ...] = ()
    oracle_calls: int = 0

    @property
    def chosen_ids(self) -> list[int]:
        return list(members(self.chosen))

    def accepted(self, phase: str = PHASE_MAIN) -> tuple[IterationRecord, ...]:
        return tuple(r for r in self.trace if r.phase == phase)

    def to_dict(self, ground: GroundSet | None = None) -> dict[str, Any]:
        data: dict[str, Any] = {
            "algorithm": self.algorithm,
            "chosen": self.chosen_ids,
            "objective": self.objective,
            "oracle_calls": self.oracle_calls,
            "trace": [r.to_dict() for r in self.trace],
        }
        if ground is not None:
            data["chosen_labels"] = ground.describe(self.chosen)
        return data


@dataclass(frozen=True)
class Bound:
    f_theta: float
    c_theta: float
    factor: float

    @property
    def gamma(self) -> float:
        if self.c_theta == 0:
            return math.inf
        return self.f_theta / self.c_theta


@dataclass
class _Run:
    """Shared bookkeeping for one solver invocation."""

    algorithm: str
    events: EventLog
    trace: list[IterationRecord] = field(default_factory=list)

    @property
    def source(self) -> str:
        return f"solver.{self.algorithm}"

    def start(self, ground: GroundSet, **payload: Any) -> None:
        self.events.emit(
            "solver.run.start",
            source=self.source,
            payload={"n": len(ground), **payload},
        )

    def pick(self, record: IterationRecord) -> None:
        self.trace.append(record)
        self.events.emit("solver.pick", source=self.source, payload=record.to_dict())

    def prune(self, dropped: list[int]) -> None:
        self.events.emit("solver.prune", source=self.source, payload={"elements": dropped})

    def stop(self, reason: str, **payload: Any) -> None:
        self.events.emit(
            "solver.stop", source=self.source, payload={"reason": reason, **payload}
        )

    def finish(self, chosen: int, objective: float, oracle_calls: int) -> SolverResult:
        result = SolverResult(
            algorithm=self.algorithm,
            chosen=chosen,
            objective=objective,
            trace=tuple(self.trace),
            oracle_calls=oracle_calls,
        )
        self.events.emit(
            "solver.run.end",
            source=self.source,
            payload={
                "chosen": result.chosen_ids,
                "objective": objective,
                "oracle_calls": oracle_calls,
            },
        )
        return result


def _ratio(gain: float, cost: float) -> float:
    """Main-loop ratio; zero-cost elements rank +inf with positive gain, -inf otherwise."""
    if cost == 0:
        return math.inf if gain > 0 else -math.inf
    return gain / cost


def _cap(k: int | None, ground: GroundSet) -> int:
    n = len(ground)
    if k is None:
        return n
    if not 0 <= k <= n:
        raise PreconditionError(f"k must be in [0, {n}], got {k}")
    return k


def _sweep(
    d: Decomposition,
    ground: GroundSet,
    chosen: int,
    fm_value: float,
    cap: int,
    run: _Run,
) -> tuple[int, float]:
    """Append negative-cost elements in ascending id order while under the cap.

    An element is skipped when adding it would lower f (possible only when
    f_m is not monotone).
    """
    for e in ground.elements:
        if d.cost[e] >= 0:
            continue
        if chosen.bit_count() >= cap:
            run.stop("cap", phase=PHASE_SWEEP)
            break
        candidate = chosen | 1 << e
        gain = d.f_m(candidate) - fm_value
        if gain - d.cost[e] < 0:
            run.stop("negative-gain", element=e, phase=PHASE_SWEEP)
            continue
        chosen = candidate
        fm_value = d.f_m(chosen)
        run.pick(
            IterationRecord(
                element=e,
                ratio=gain / d.cost[e],
                f_value_after=fm_value - d.cost_of(chosen),
                f_m_value_after=fm_value,
                phase=PHASE_SWEEP,
            )
        )
    return chosen, fm_value


def marginal_greedy(
    d: Decomposition,
    ground: GroundSet | None = None,
    *,
    k: int | None = None,
    prune: bool = False,
    events: EventLog | None = None,
) -> SolverResult:
    """MarginalGreedy on f = f_m - c.

    The main loop scans elements with cost >= 0 and takes the one with the
    largest f_m'(x, X) / c(x) while that ratio is strictly above 1 (ties go to
    the smallest id). Negative-cost elements are appended afterwards. With
    ``prune`` an element whose ratio drops to 1 or below leaves the candidate
    set for good. ``k`` caps the number of chosen elements; the capped variant
    is a heuristic with no proved guarantee.
    """
    ground = ground or d.ground
    cap = _cap(k, ground)
    run = _Run("marginal", events or EventLog())
    run.start(ground, k=k, prune=prune)
    calls_before = d.f_m.call_count

    chosen = 0
    fm_value = d.f_m(0)
    candidates = [e for e in ground.elements if d.cost[e] >= 0]
    while candidates:
        if chosen.bit_count() >= cap:
            run.stop("cap", phase=PHASE_MAIN)
            break
        best, best_ratio = -1, -math.inf
        dropped: list[int] = []
        for e in candidates:
            ratio = _ratio(d.f_m(chosen | 1 << e) - fm_value, d.cost[e])
            if ratio > best_ratio:
                best, best_ratio = e, ratio
            if prune and ratio <= 1:
                dropped.append(e)
        if dropped:
            run.prune(dropped)
            candidates = [e for e in candidates if e not in dropped]
        if best < 0 or best_ratio <= 1:
            run.stop("ratio", phase=PHASE_MAIN)
            break
        chosen |= 1 << best
        fm_value = d.f_m(chosen)
        candidates.remove(best)
        run.pick(
            IterationRecord(
                element=best,
                ratio=best_ratio,
                f_value_after=fm_value - d.cost_of(chosen),
                f_m_value_after=fm_value,
                phase=PHASE_MAIN,
            )
        )

    chosen, fm_value = _sweep(d, ground, chosen, fm_value, cap, run)
    return run.finish(chosen, fm_value - d.cost_of(chosen), d.f_m.call_count - calls_before)


def lazy_marginal_greedy(
    d: Decomposition,
    ground: GroundSet | None = None,
    *,
    k: int | None = None,
    prune: bool = False,
    events: EventLog | None = None,
) -> SolverResult:
    """MarginalGreedy with lazily refreshed upper bounds on f_m'(x, X).

    Heap entries are ``(-ratio_bound, element, stamp)``; an entry is fresh when
    its stamp equals the number of picks so far. Bounds start at +inf and stay
    valid because f_m is submodular, so the first fresh entry on top of the heap
    is the element the eager scan would pick, tie-break included.
    """
    ground = ground or d.ground
    cap = _cap(k, ground)
    run = _Run("lazy", events or EventLog())
    run.start(ground, k=k, prune=prune)
    calls_before = d.f_m.call_count

    chosen = 0
    fm_value = d.f_m(0)
    heap = [(-math.inf, e, -1) for e in ground.elements if d.cost[e] >= 0]
    heapq.heapify(heap)
    picks = 0
    while heap:
        if picks >= cap:
            run.stop("cap", phase=PHASE_MAIN)
            break
        while heap and heap[0][2] != picks:
            _, e, _ = heapq.heappop(heap)
            ratio = _ratio(d.f_m(chosen | 1 << e) - fm_value, d.cost[e])
            if prune and ratio <= 1:
                run.prune([e])
                continue
            heapq.heappush(heap, (-ratio, e, picks))
        if not heap:
            run.stop("ratio", phase=PHASE_MAIN)
            break
        neg_ratio, best, _ = heap[0]
        best_ratio = -neg_ratio
        if best_ratio <= 1:
            run.stop("ratio", phase=PHASE_MAIN)
            break
        heapq.heappop(heap)
        chosen |= 1 << best
        fm_value = d.f_m(chosen)
        picks += 1
        run.pick(
            IterationRecord(
                element=best,
                ratio=best_ratio,
                f_value_after=fm_value - d.cost_of(chosen),
                f_m_value_after=fm_value,
                phase=PHASE_MAIN,
            )
        )

    chosen, fm_value = _sweep(d, ground, chosen, fm_value, cap, run)
    return run.finish(chosen, fm_value - d.cost_of(chosen), d.f_m.call_count - calls_before)


def roy_greedy(
    bc: SetFunctionOracle,
    ground: GroundSet | None = None,
    *,
    events: EventLog | None = None,
) -> SolverResult:
    """Greedy descent on a cost oracle: add argmin bc(X + x) while it is strictly below bc(X).

    Trace rows carry the cost reduction in ``ratio`` and bc(X) in both value columns.
    """
    ground = ground or bc.ground
    run = _Run("roy", events or EventLog())
    run.start(ground)
    calls_before = bc.call_count

    chosen = 0
    current = bc(0)
    remaining = list(ground.elements)
    while remaining:
        best, best_cost = -1, current
        for e in remaining:
            value = bc(chosen | 1 << e)
            if value < best_cost:
                best, best_cost = e, value
        if best < 0:
            run.stop("no-improvement")
            break
        chosen |= 1 << best
        remaining.remove(best)
        run.pick(
            IterationRecord(
                element=best,
                ratio=current - best_cost,
                f_value_after=best_cost,
                f_m_value_after=best_cost,
                phase=PHASE_DESCENT,
            )
        )
        current = best_cost

    return run.finish(chosen, current, bc.call_count - calls_before)


def exhaustive_max(
    f: SetFunctionOracle,
    ground: GroundSet | None = None,
    *,
    limit: int = EXHAUSTIVE_LIMIT,
    events: EventLog | None = None,
) -> SolverResult:
    """Argmax of f over all subsets; the first maximum in ascending bitmask order wins."""
    ground = ground or f.ground
    if len(ground) > limit:
        raise SizeGuardError(
            f"exhaustive search over {len(ground)} elements exceeds the limit of {limit}"
        )
    run = _Run("exhaustive", events or EventLog())
    run.start(ground)
    calls_before = f.call_count

    best, best_value = 0, -math.inf
    for subset in ground.subsets():
        value = f(subset)
        if value > best_value:
            best, best_value = subset, value
    return run.finish(best, best_value, f.call_count - calls_before)


def universe_reduce(d: Decomposition, ground: GroundSet | None, k: int) -> GroundSet:
    """Shrink U so that capped MarginalGreedy picks the same elements.

    Main-loop candidates are ranked by the lower bound f_m'(e, U - e) / c(e);
    with r_k the k-th best, U' keeps every element with c(e) <= 0 and every
    positive-cost element whose singleton ratio f_m'(e, ∅) / c(e) reaches r_k.
    """
    ground = ground or d.ground
    n = len(ground)
    if not 1 <= k <= n:
        raise PreconditionError(f"k must be in [1, {n}], got {k}")
    if k == n:
        return ground

    candidates = [e for e in ground.elements if d.cost[e] >= 0]
    if len(candidates) <= k:
        return ground

    full = ground.full
    whole = d.f_m(full)
    lower = {e: _ratio(whole - d.f_m(full & ~(1 << e)), d.cost[e]) for e in candidates}
    ranked = sorted(candidates, key=lambda e: (-lower[e], e))
    threshold = lower[ranked[k - 1]]

    empty = d.f_m(0)
    keep = 0
    for e in ground.elements:
        if d.cost[e] <= 0 or (d.f_m(1 << e) - empty) / d.cost[e] >= threshold:
            keep |= 1 << e
    return ground.restrict(keep)


def approx_bound(f_theta: float, c_theta: float) -> Bound:
    """Guaranteed fraction of f(Θ) reached by MarginalGreedy.

    factor = 1 - (c/f)·ln(1 + f/c), which with γ = f/c is 1 - ln(1 + γ)/γ.
    """
    if f_theta <= 0:
        raise DomainError(f"f_theta must be positive, got {f_theta}")
    if c_theta < 0:
        raise DomainError(f"c_theta must be non-negative, got {c_theta}")
    if c_theta == 0:
        return Bound(f_theta, c_theta, 1.0)
    factor = 1.0 - (c_theta / f_theta) * math.log1p(f_theta / c_theta)
    return Bound(f_theta, c_theta, factor)


SOLVERS = ("marginal", "lazy", "roy", "exhaustive", "none")
