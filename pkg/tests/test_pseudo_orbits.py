"""Pseudo-orbits: gaps, seeded perturbation, fast orbit generation, gluing."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from shadowspec.errors import CalibrationError
from shadowspec.pseudo_orbits import (
    PseudoOrbit,
    concatenate,
    from_true_orbit,
    max_metric,
    perturb,
    perturbed_orbit,
)
from shadowspec.scalars import SqrtVal
from shadowspec.systems import (
    CircleRotation,
    PermutationSystem,
    SymbolicPoint,
    cat_map,
    full_shift,
    golden_mean_shift,
)


class TestPseudoOrbit:
    def test_true_orbit_has_zero_gap(self):
        sys_ = cat_map()
        po = from_true_orbit(sys_, sys_.point(Fraction(1, 7), Fraction(2, 7)), -3, 5)
        assert po.index_range == (-3, 5)
        assert len(po) == 9
        assert po.gap.is_zero()
        assert po.gap_rational() == 0

    def test_point_indexing(self):
        rot = CircleRotation(Fraction(1, 4))
        po = from_true_orbit(rot, Fraction(0), 2, 5)
        assert po.point(2) == Fraction(1, 2)
        assert po.point(5) == Fraction(1, 4)
        with pytest.raises(IndexError):
            po.point(6)

    def test_known_gap_matches_recompute(self):
        sh = full_shift(2)
        z = SymbolicPoint.periodic((0,))
        po = PseudoOrbit(sh, 0, (z, z.with_symbol(2, 1)), known_gap=Fraction(1, 4))
        assert po.gap == Fraction(1, 4)
        assert po.recompute_gap() == Fraction(1, 4)

    def test_gap_frozen_sft(self):
        # jump from all-zeros to a point with a 1 at index 2: after the shift
        # the mismatch sits at index 2, giving distance 2^-2
        sh = full_shift(2)
        z = SymbolicPoint.periodic((0,))
        po = PseudoOrbit(sh, 0, (z, z.with_symbol(2, 1)))
        assert po.gap == Fraction(1, 4)

    def test_is_valid(self):
        rot = CircleRotation(Fraction(1, 3))
        po = PseudoOrbit(rot, 0, (Fraction(0), Fraction(1, 3) + Fraction(1, 100)))
        assert po.is_valid(Fraction(1, 100))
        assert not po.is_valid(Fraction(1, 200))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            PseudoOrbit(cat_map(), 0, ())


class TestMaxMetric:
    def test_empty_default(self):
        assert max_metric([]) == Fraction(0)

    def test_mixed_exact(self):
        vals = [Fraction(1, 4), SqrtVal(Fraction(1, 8)), Fraction(1, 3)]
        assert max_metric(vals) == SqrtVal(Fraction(1, 8))  # 0.3535... > 1/3
        assert max_metric([SqrtVal(Fraction(1, 2)), Fraction(1, 2)]) == SqrtVal(Fraction(1, 2))


class TestPerturb:
    def test_toral_budget_respected(self):
        sys_ = cat_map()
        base = from_true_orbit(sys_, sys_.point(Fraction(1, 5), Fraction(3, 5)), 0, 40)
        for seed in (0, 1, 7):
            po = perturb(sys_, base, Fraction(1, 1000), seed)
            assert po.gap <= Fraction(1, 1000)
            assert not po.gap.is_zero()

    def test_sft_budget_respected(self):
        gm = golden_mean_shift()
        base = from_true_orbit(gm, gm.point_through((0, 1, 0, 0, 1), at=-2), 0, 30)
        po = perturb(gm, base, Fraction(1, 16), 3)
        assert po.gap <= Fraction(1, 16)
        for p in po.points:
            gm.validate_point(p)

    def test_rotation_and_permutation(self):
        rot = CircleRotation(Fraction(2, 7))
        po = perturb(rot, from_true_orbit(rot, Fraction(0), 0, 20), Fraction(1, 50), 5)
        assert po.gap <= Fraction(1, 50)
        perm = PermutationSystem([1, 2, 0])
        quiet = perturb(perm, from_true_orbit(perm, 0, 0, 10), Fraction(1, 2), 5)
        assert quiet.gap == 0  # below metric resolution nothing moves

    def test_same_seed_same_orbit(self):
        sys_ = cat_map()
        base = from_true_orbit(sys_, sys_.point(Fraction(1, 5), Fraction(3, 5)), 0, 10)
        a = perturb(sys_, base, Fraction(1, 100), 42)
        b = perturb(sys_, base, Fraction(1, 100), 42)
        assert a.points == b.points
        c = perturb(sys_, base, Fraction(1, 100), 43)
        assert a.points != c.points

    def test_gap_already_too_large(self):
        rot = CircleRotation(Fraction(1, 3))
        po = PseudoOrbit(rot, 0, (Fraction(0), Fraction(1, 2)))
        with pytest.raises(CalibrationError):
            perturb(rot, po, Fraction(1, 100), 0)


class TestPerturbedOrbit:
    @pytest.mark.parametrize("a,b,seed", [(0, 40, 5), (-3, 17, 99), (2, 30, 1234)])
    def test_matches_two_step_construction(self, a, b, seed):
        sys_ = cat_map()
        x = sys_.point(Fraction(3, 7), Fraction(1, 2))
        fast = perturbed_orbit(sys_, x, a, b, Fraction(1, 10**6), seed)
        slow = perturb(sys_, from_true_orbit(sys_, x, a, b), Fraction(1, 10**6), seed)
        assert fast.start == slow.start
        assert fast.points == slow.points

    def test_non_toral_falls_back(self):
        gm = golden_mean_shift()
        x = gm.point_through((0, 0, 1), at=0)
        fast = perturbed_orbit(gm, x, 0, 12, Fraction(1, 8), 7)
        slow = perturb(gm, from_true_orbit(gm, x, 0, 12), Fraction(1, 8), 7)
        assert fast.points == slow.points


@settings(max_examples=30, derandomize=True)
@given(st.integers(0, 2**32 - 1))
def test_perturbed_toral_gap_within_delta(seed):
    sys_ = cat_map()
    po = perturbed_orbit(sys_, sys_.point(Fraction(1, 3), Fraction(0)), 0, 25,
                         Fraction(1, 1000), seed)
    assert po.gap <= Fraction(1, 1000)


class TestConcatenate:
    def test_switch_times_are_running_sums(self):
        sh = full_shift(2)
        x = SymbolicPoint.periodic((0,))
        y = SymbolicPoint.periodic((1,))
        po, c = concatenate(sh, [(x, 2), (y, 4)], [(x, 3), (y, 5)])
        assert c == [0, 5, 14]
        assert len(po) == 14
        assert po.index_range == (0, 13)

    def test_segment_points_appear_in_place(self):
        sys_ = cat_map()
        x = sys_.point(Fraction(1, 5), Fraction(0))
        y = sys_.point(Fraction(2, 5), Fraction(0))
        po, c = concatenate(sys_, [(x, 3)], [(y, 2)])
        assert po.points[0] == x
        assert po.points[1] == sys_.apply(x)
        assert po.points[3] == y
        assert po.points[4] == sys_.apply(y)
        assert c == [0, 5]

    def test_rejects_bad_shapes(self):
        sys_ = cat_map()
        x = sys_.point(Fraction(0), Fraction(0))
        with pytest.raises(ValueError):
            concatenate(sys_, [], [])
        with pytest.raises(ValueError):
            concatenate(sys_, [(x, 1)], [])
        with pytest.raises(ValueError):
            concatenate(sys_, [(x, -1)], [(x, 1)])
        with pytest.raises(ValueError):
            concatenate(sys_, [(x, 1)], [(x, 0)])
