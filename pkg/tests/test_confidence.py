import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaussbai import (
    BanditInstance,
    ConfidenceRegion,
    DomainError,
    RadiusScheme,
    brute_force_eb_bandit,
    build_region,
    compute_gaps,
    exploration_biased_weights,
    radius,
    solve_allocation,
)
from gaussbai.confidence import _grid_axis


def random_region(rng, K, width=(0.02, 0.4)):
    centres = rng.uniform(0, 1, K)
    half = rng.uniform(*width, K) / 2
    return ConfidenceRegion(tuple(zip(np.round(centres - half, 3), np.round(centres + half, 3))))


def candidates(region):
    """Every candidate point of the selection rule, scored independently."""
    lo, hi = region.lo, region.hi
    max_lb, min_ub = lo.max(), hi.min()
    out = []
    for a in range(region.K):
        if hi[a] > max_lb:
            mu = np.maximum(lo, min_ub)
            mu[a] = hi[a]
            out.append((solve_allocation(BanditInstance(tuple(mu))).w_min, a, mu))
    return out


class TestRadius:
    def test_theoretical(self):
        assert radius(RadiusScheme("theoretical", 0.4), 4) == pytest.approx(2 * math.sqrt(math.log(40) / 4))
        assert radius(RadiusScheme("theoretical", 0.4), 4) == pytest.approx(1.9206, abs=1e-4)

    def test_empirical(self):
        assert radius(RadiusScheme("empirical", 0.1), 10) == pytest.approx(0.6786, abs=1e-4)

    def test_empirical_at_one(self):
        assert radius(RadiusScheme("empirical", 0.1), 1) == pytest.approx(math.sqrt(math.log(10)))

    @pytest.mark.parametrize("kind", ["theoretical", "empirical"])
    def test_decreasing(self, kind):
        sch = RadiusScheme(kind, 0.1)
        vals = [radius(sch, s) for s in range(2, 2000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert radius(sch, 100) < radius(sch, 10)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.5, 2.0])
    def test_bad_gamma(self, gamma):
        with pytest.raises(DomainError):
            RadiusScheme("empirical", gamma)

    def test_bad_count(self):
        with pytest.raises(DomainError):
            radius(RadiusScheme(), 0)

    def test_per_arm(self):
        assert RadiusScheme("theoretical", 0.8).per_arm(2) == RadiusScheme("theoretical", 0.4)


class TestRegion:
    def test_symmetric(self):
        r = build_region([0.5, 0.5], [7, 7], RadiusScheme())
        assert r.intervals[0] == r.intervals[1]
        lo, hi = r.intervals[0]
        assert 0.5 - lo == pytest.approx(hi - 0.5)

    def test_narrows(self):
        r = build_region([0.5, 0.5], [10, 40], RadiusScheme("theoretical"))
        w = r.hi - r.lo
        assert w[1] < w[0]

    def test_risk_split_and_no_clamp(self):
        r = build_region([1.0, 0.0], [4, 4], RadiusScheme("theoretical", 0.8))
        np.testing.assert_allclose(r.lo, [1 - 1.9206, -1.9206], atol=1e-4)
        np.testing.assert_allclose(r.hi, [1 + 1.9206, 1.9206], atol=1e-4)

    def test_clamp(self):
        r = build_region([1.0, 0.0], [4, 4], RadiusScheme("theoretical", 0.8), clamp=True)
        assert r.lo.min() >= 0.0 and r.hi.max() <= 1.0

    def test_unsampled(self):
        with pytest.raises(DomainError):
            build_region([0.5, 0.5], [3, 0], RadiusScheme())

    def test_shape(self):
        with pytest.raises(DomainError):
            build_region([0.5, 0.5], [3, 3, 3], RadiusScheme())

    def test_interval_order(self):
        with pytest.raises(DomainError):
            ConfidenceRegion(((0.0, 1.0), (0.6, 0.5)))


class TestExplorationBiased:
    def test_overlap_gives_uniform(self):
        reg = ConfidenceRegion(((0.2, 0.6), (0.4, 0.9), (0.5, 0.7)))
        out = exploration_biased_weights(reg)
        assert out.uniform
        assert out.weights == pytest.approx((1 / 3,) * 3)
        assert out.biased_bandit.means == (0.6, 0.6, 0.6)

    def test_single_candidate(self):
        reg = ConfidenceRegion(((0.8, 0.9), (0.3, 0.6), (0.1, 0.5), (0.55, 0.7)))
        out = exploration_biased_weights(reg)
        assert out.biased_bandit.means == (0.9, 0.5, 0.5, 0.55)
        assert out.weights == solve_allocation(BanditInstance((0.9, 0.5, 0.5, 0.55))).weights

    def test_four_arm_example(self):
        reg = ConfidenceRegion(((0.7, 0.9), (0.5, 0.8), (0.2, 0.75), (0.1, 0.3)))
        out = exploration_biased_weights(reg)
        cands = candidates(reg)
        assert [a for _, a, _ in cands] == [0, 1, 2]
        best = max(cands, key=lambda c: (c[0], -c[1]))
        np.testing.assert_allclose(out.biased_bandit.means, best[2])
        assert out.w_min == pytest.approx(best[0])
        # random points of the region never beat the returned point
        rng = np.random.default_rng(4)
        pts = rng.uniform(reg.lo, reg.hi, size=(3000, 4))
        for p in pts:
            assert solve_allocation(BanditInstance(tuple(p))).w_min <= out.w_min + 1e-12

    def test_tie_goes_to_lowest_index(self):
        # symmetric region: arms 0 and 1 give mirror-image candidates
        reg = ConfidenceRegion(((0.5, 0.9), (0.5, 0.9), (0.1, 0.3)))
        out = exploration_biased_weights(reg)
        assert out.biased_bandit.means[0] == 0.9

    def test_two_arm_separated(self):
        reg = ConfidenceRegion(((0.0, 0.2), (0.5, 0.9)))
        out = exploration_biased_weights(reg)
        assert out.weights == (0.5, 0.5)
        assert not out.uniform

    def test_touching_intervals_are_uniform(self):
        # min upper bound == max lower bound: the intervals share exactly one point
        out = exploration_biased_weights(ConfidenceRegion(((0.0, 0.5), (0.5, 1.0))))
        assert out.uniform

    @settings(max_examples=150, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_properties(self, K, seed):
        reg = random_region(np.random.default_rng(seed), K)
        out = exploration_biased_weights(reg)
        mu = np.array(out.biased_bandit.means)
        assert reg.contains(mu)
        assert out.uniform == (reg.hi.min() >= reg.lo.max())
        if not out.uniform:
            assert out.weights == solve_allocation(out.biased_bandit).weights
            assert not compute_gaps(out.biased_bandit).degenerate
            cands = candidates(reg)
            assert out.w_min == pytest.approx(max(c[0] for c in cands), abs=1e-12)
            assert compute_gaps(out.biased_bandit).delta_min >= np.min(reg.hi - reg.lo) - 1e-12


class TestGridOracle:
    def test_overlapping(self):
        reg = ConfidenceRegion(((0.2, 0.6), (0.4, 0.9), (0.5, 0.7)))
        nu = brute_force_eb_bandit(reg, 0.05)
        assert solve_allocation(nu).w_min == pytest.approx(1 / 3, abs=0.05)

    def test_two_arm(self):
        reg = ConfidenceRegion(((0.0, 0.2), (0.5, 0.9)))
        nu = brute_force_eb_bandit(reg, 0.05)
        assert solve_allocation(nu).w_min == 0.5 == exploration_biased_weights(reg).w_min

    @pytest.mark.parametrize("seed", range(10))
    def test_never_beats_selection_rule(self, seed):
        reg = random_region(np.random.default_rng(seed), 3)
        step = 0.01
        nu = brute_force_eb_bandit(reg, step)
        assert solve_allocation(nu).w_min <= exploration_biased_weights(reg).w_min + step

    def test_partial_ties_score_zero(self):
        # every point of this region ties arms 0 and 1 above arm 2
        reg = ConfidenceRegion(((0.5, 0.5), (0.5, 0.5), (0.0, 0.1)))
        nu = brute_force_eb_bandit(reg, 0.05)
        assert solve_allocation(nu).w_min == 0.0

    def test_refuses(self):
        reg = ConfidenceRegion(tuple((0.0, 1.0) for _ in range(4)))
        with pytest.raises(DomainError):
            brute_force_eb_bandit(reg, 0.05)
        with pytest.raises(DomainError):
            brute_force_eb_bandit(ConfidenceRegion(((0, 1), (0, 1))), 0.1)

    def test_grid_includes_endpoints(self):
        ax = _grid_axis(0.123, 0.377, 0.05)
        assert ax[0] == 0.123 and ax[-1] == 0.377
        assert all(b > a for a, b in itertools.pairwise(ax))
