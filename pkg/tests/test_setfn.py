"""Tests for ground sets, oracles and decompositions."""

from __future__ import annotations

import math

import pytest

from mqopt.errors import NormalizationError, PreconditionError, SizeGuardError
from mqopt.instances import gen_random_submodular
from mqopt.setfn import (
    AdditiveOracle,
    CoverageOracle,
    Decomposition,
    FunctionOracle,
    GroundSet,
    canonical_decomposition,
    diminishing_returns_tally,
    improve_decomposition,
    is_monotone,
    is_submodular,
    marginal_gain,
    mask_of,
    members,
)
from mqopt.solvers import approx_bound, exhaustive_max


def _square(n: int) -> FunctionOracle:
    return FunctionOracle(GroundSet(n), lambda s: float(len(s) ** 2), normalized=True)


class TestGroundSet:
    def test_members_and_mask_round(self) -> None:
        assert list(members(0b1011)) == [0, 1, 3]
        assert mask_of([3, 1, 0]) == 0b1011
        assert list(members(0)) == []

    def test_full_and_len(self) -> None:
        ground = GroundSet(4)
        assert ground.full == 0b1111
        assert len(ground) == 4
        assert ground.elements == (0, 1, 2, 3)

    def test_restrict_keeps_ids(self) -> None:
        ground = GroundSet(5, ("a", "b", "c", "d", "e"))
        sub = ground.restrict(0b10110)
        assert sub.elements == (1, 2, 4)
        assert len(sub) == 3
        assert 4 in sub and 0 not in sub
        assert sub.describe(sub.full) == ["b", "c", "e"]
        assert list(sub.subsets()) == sorted(sub.subsets())
        assert len(list(sub.subsets())) == 8
        assert all(s & ~sub.full == 0 for s in sub.subsets())

    def test_label_count_mismatch_rejected(self) -> None:
        with pytest.raises(ValueError):
            GroundSet(2, ("a",))


class TestOracles:
    def test_memo_counts_distinct_evaluations(self) -> None:
        seen: list[frozenset[int]] = []

        def fn(s: frozenset[int]) -> float:
            seen.append(s)
            return float(len(s))

        f = FunctionOracle(GroundSet(3), fn)
        assert f(0b011) == 2.0
        assert f(0b011) == 2.0
        assert f(0) == 0.0
        assert f.call_count == 2
        assert len(seen) == 2
        assert f.evaluated_subsets() == [0, 0b011]

    def test_normalized_oracle_skips_empty_set(self) -> None:
        f = _square(3)
        assert f(0) == 0.0
        assert f.call_count == 0

    def test_additive(self) -> None:
        f = AdditiveOracle(GroundSet(3), [1.5, -2.0, 4.0])
        assert f(0b101) == 5.5
        assert f(0b111) == 3.5

    def test_coverage_values_are_exact(self) -> None:
        f = CoverageOracle([[0, 1], [1, 2], [2]], [1, 2, 3])
        assert f(0b001) == 3.0
        assert f(0b011) == 6.0
        assert f(0b110) == 5.0
        assert f.covered(0b010).tolist() == [False, True, True]

    def test_coverage_rejects_unknown_item(self) -> None:
        with pytest.raises(ValueError, match="unknown item"):
            CoverageOracle([[0, 5]], [1, 1])

    def test_marginal_gain(self, wp_oracle: FunctionOracle) -> None:
        assert marginal_gain(wp_oracle, 1, 0b01) == -2.0
        with pytest.raises(PreconditionError):
            marginal_gain(wp_oracle, 0, 0b01)


class TestCanonicalDecomposition:
    def test_two_element_function(self, wp_oracle: FunctionOracle) -> None:
        d = canonical_decomposition(wp_oracle)
        assert d.cost == (-2.0, 2.0)
        assert [d.f_m(s) for s in range(4)] == [0.0, 1.0, 1.0, 1.0]
        for s in range(4):
            assert d.value(s) == wp_oracle(s)

    def test_uses_n_plus_one_evaluations_beyond_empty(self, wp_oracle: FunctionOracle) -> None:
        canonical_decomposition(wp_oracle)
        # f(∅), f(U), f(U-a), f(U-b)
        assert wp_oracle.call_count == 4

    def test_rejects_unnormalized(self) -> None:
        f = FunctionOracle(GroundSet(2), lambda s: 1.0 + len(s))
        with pytest.raises(NormalizationError):
            canonical_decomposition(f)

    def test_empty_ground(self) -> None:
        f = FunctionOracle(GroundSet(0), lambda s: 0.0, normalized=True)
        d = canonical_decomposition(f)
        assert d.cost == ()
        assert d.value(0) == 0.0

    def test_restricted_ground_zeroes_outside_costs(self) -> None:
        d0 = gen_random_submodular(5, seed=3)
        f = d0.as_oracle()
        d = canonical_decomposition(f, f.ground.restrict(0b00111))
        assert len(d.cost) == 5
        assert d.cost[3] == 0.0 and d.cost[4] == 0.0

    def test_canonical_part_is_monotone_submodular(self) -> None:
        f = gen_random_submodular(6, seed=11).as_oracle()
        d = canonical_decomposition(f)
        assert is_monotone(d.f_m)
        assert is_submodular(d.f_m)


class TestImproveDecomposition:
    def test_canonical_is_a_fixed_point(self) -> None:
        f = gen_random_submodular(6, seed=2).as_oracle()
        d = canonical_decomposition(f)
        improved = improve_decomposition(d)
        assert improved.cost == pytest.approx(d.cost, abs=1e-9)
        for s in f.ground.subsets():
            assert improved.f_m(s) == pytest.approx(d.f_m(s), abs=1e-9)

    def test_lowers_cost_and_preserves_f(self) -> None:
        d = gen_random_submodular(6, seed=5)
        improved = improve_decomposition(d)
        assert all(new <= old + 1e-9 for new, old in zip(improved.cost, d.cost))
        assert is_monotone(improved.f_m)
        for s in d.ground.subsets():
            assert improved.value(s) == pytest.approx(d.value(s), abs=1e-9)

    def test_additive_part_is_shifted_out(self) -> None:
        weights = [2.0, 0.5, 3.0]
        d = Decomposition(AdditiveOracle(GroundSet(3), weights), (1.0, 1.0, 4.0))
        improved = improve_decomposition(d)
        assert improved.cost == pytest.approx((-1.0, 0.5, 1.0), abs=1e-12)
        for s in d.ground.subsets():
            assert improved.f_m(s) == pytest.approx(0.0, abs=1e-12)

    def test_improved_cost_never_weakens_the_bound(self) -> None:
        d = Decomposition(CoverageOracle([[0, 1], [1, 2]], [1, 1, 1]), (1.0, 1.0))
        improved = improve_decomposition(d)
        assert improved.cost == pytest.approx((0.0, 0.0), abs=1e-12)
        theta = exhaustive_max(d.as_oracle())
        before = approx_bound(theta.objective, d.cost_of(theta.chosen))
        after = approx_bound(theta.objective, improved.cost_of(theta.chosen))
        assert before.factor == pytest.approx(1.0 - math.log(2.0), abs=1e-12)
        assert after.factor == 1.0

    @pytest.mark.parametrize("seed", range(10))
    def test_improved_bound_on_random_instances(self, seed: int) -> None:
        d = gen_random_submodular(6, seed=seed)
        improved = improve_decomposition(d)
        theta = exhaustive_max(d.as_oracle())
        c_theta = d.cost_of(theta.chosen)
        c_improved = improved.cost_of(theta.chosen)
        assert c_improved <= c_theta + 1e-9
        if theta.objective <= 0 or c_improved < 0:
            return
        before = approx_bound(theta.objective, c_theta).factor
        after = approx_bound(theta.objective, c_improved).factor
        assert after >= before - 1e-12

    def test_cost_length_checked(self) -> None:
        with pytest.raises(ValueError):
            Decomposition(AdditiveOracle(GroundSet(2), [1.0, 1.0]), (1.0,))


class TestPropertyChecks:
    def test_coverage_is_monotone_and_submodular(self) -> None:
        f = CoverageOracle([[0], [0, 1], [2], [1, 2, 3]], [1, 1, 1, 1])
        assert is_monotone(f)
        assert is_submodular(f)

    def test_square_is_not_submodular(self) -> None:
        f = _square(4)
        assert is_monotone(f)
        assert not is_submodular(f)

    def test_non_monotone_detected(self, wp_oracle: FunctionOracle) -> None:
        assert not is_monotone(wp_oracle)
        assert is_submodular(wp_oracle)

    def test_size_guard(self) -> None:
        f = _square(15)
        with pytest.raises(SizeGuardError):
            is_submodular(f)
        assert f.call_count == 0


class TestDiminishingReturnsTally:
    def test_exhaustive_on_coverage(self) -> None:
        f = CoverageOracle([[0], [0, 1], [2], [1, 2, 3]], [1, 1, 1, 1])
        tally = diminishing_returns_tally(f)
        assert tally.mode == "exhaustive"
        assert tally.checked == 4 * 3**3
        assert tally.fraction == 1.0

    def test_additive_always_holds(self) -> None:
        tally = diminishing_returns_tally(AdditiveOracle(GroundSet(5), [1, -2, 3, 0, 4]))
        assert tally.fraction == 1.0

    def test_square_violates(self) -> None:
        tally = diminishing_returns_tally(_square(4))
        assert tally.fraction < 1.0

    def test_sampled_when_over_budget(self) -> None:
        f = gen_random_submodular(8, seed=0).f_m
        tally = diminishing_returns_tally(f, sample_budget=300, seed=4)
        assert tally.mode == "sampled"
        assert tally.checked == 300
        assert tally.satisfied == 300
        again = diminishing_returns_tally(f, sample_budget=300, seed=4)
        assert again == tally

    def test_empty_universe(self) -> None:
        f = FunctionOracle(GroundSet(0), lambda s: 0.0, normalized=True)
        assert diminishing_returns_tally(f).fraction == 1.0
