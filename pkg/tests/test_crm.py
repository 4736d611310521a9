import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pocrm import (DoseData, HeterogeneityError, ModelParamDomain, Skeleton,
                   check_crm_consistency, crm_boundaries, log_likelihood, mle,
                   recommend, tox_prob)

A0 = (0.10, 0.20, 0.30, 0.40, 0.45, 0.50, 0.54, 0.59, 0.64)


def skeletons(min_k=2, max_k=9):
    def build(vals):
        vals = sorted(set(round(v, 6) for v in vals))
        if len(vals) < min_k:
            vals = [0.1 + 0.8 * i / max(min_k, 2) for i in range(min_k)]
        return Skeleton(tuple(vals))
    return st.lists(st.floats(0.01, 0.95), min_size=min_k,
                    max_size=max_k).map(build)


class TestSkeleton:
    def test_valid(self):
        s = Skeleton(A0)
        assert len(s) == 9
        assert s.as_array()[2] == 0.30

    @pytest.mark.parametrize("vals", [(0.2, 0.2, 0.3), (0.3, 0.2),
                                      (0.0, 0.5), (0.5, 1.0), ()])
    def test_invalid(self, vals):
        with pytest.raises(ValueError):
            Skeleton(vals)


class TestDoseData:
    def test_heterogeneous(self):
        assert DoseData(n=[2, 1], y=[1, 0]).heterogeneous
        assert not DoseData(n=[2, 0], y=[0, 0]).heterogeneous
        assert not DoseData(n=[2, 1], y=[2, 1]).heterogeneous

    def test_counts_validated(self):
        with pytest.raises(ValueError):
            DoseData(n=[1], y=[2])


class TestToxProb:
    def test_power_model(self):
        assert tox_prob(0.3, 1.0) == pytest.approx(0.3)
        assert tox_prob(0.3, 2.0) == pytest.approx(0.09)

    def test_domain_checked(self):
        with pytest.raises(ValueError):
            tox_prob(1.2, 1.0)
        with pytest.raises(ValueError):
            tox_prob(0.3, 0.0)


class TestMle:
    def test_single_dose_closed_form(self):
        # with all data at one position, alpha^a = y/n exactly
        data = DoseData(n=[2.0], y=[1.0])
        a = mle(data, np.array([0.3]))
        assert a == pytest.approx(np.log(0.5) / np.log(0.3), abs=1e-6)

    def test_homogeneous_rejected(self):
        with pytest.raises(HeterogeneityError):
            mle(DoseData(n=[3.0], y=[0.0]), np.array([0.3]))

    @settings(max_examples=50, deadline=None)
    @given(st.data())
    def test_matches_grid_search_oracle(self, data):
        k = data.draw(st.integers(2, 5))
        alpha = np.sort(data.draw(st.lists(
            st.floats(0.05, 0.9), min_size=k, max_size=k,
            unique=True).map(np.array)))
        n = np.array(data.draw(st.lists(st.integers(0, 6),
                                        min_size=k, max_size=k)), dtype=float)
        y = np.array([data.draw(st.integers(0, int(v))) for v in n],
                     dtype=float)
        if not (0 < y.sum() < n.sum()):
            y[0], n[0] = 1.0, 2.0
        d = DoseData(n=n, y=y)
        a_hat = mle(d, alpha)
        grid = np.exp(np.linspace(np.log(1e-3), np.log(1e3), 100_001))
        lls = [log_likelihood(d, alpha, a) for a in grid]
        a_star = grid[int(np.argmax(lls))]
        # agreement within the local grid resolution
        step = a_star * (np.log(1e6) / 100_000)
        assert abs(a_hat - a_star) <= 2 * step
        assert log_likelihood(d, alpha, a_hat) >= max(lls) - 1e-6


class TestRecommend:
    def test_exact_match(self):
        assert recommend(np.array(A0), 1.0, 0.3) == 3

    def test_ties_to_lower(self):
        # 0.2^1 and 0.4^1 are equidistant from 0.3
        assert recommend(np.array([0.2, 0.4]), 1.0, 0.3) == 1

    def test_bad_a_hat(self):
        with pytest.raises(ValueError):
            recommend(np.array(A0), -1.0, 0.3)


class TestBoundaries:
    def test_interior_roots_solve_equation(self):
        s = Skeleton(A0)
        b = crm_boundaries(s, 0.3)
        assert b.shape == (10,)
        assert b[0] == 1e-3 and b[-1] == 1e3
        a = s.as_array()
        for i in range(1, 9):
            assert a[i - 1] ** b[i] + a[i] ** b[i] == pytest.approx(0.6,
                                                                    abs=1e-9)

    def test_monotone_increasing_interior(self):
        b = crm_boundaries(Skeleton(A0), 0.3)
        assert np.all(np.diff(b[1:-1]) > 0)

    def test_unsolvable_theta_rejected(self):
        with pytest.raises(ValueError):
            crm_boundaries(Skeleton((0.1, 0.2)), 0.8)


class TestCrmConsistency:
    def test_consistent_case(self):
        # true probabilities equal to the skeleton: a_i = 1 for all i
        r = np.array(A0)
        rep = check_crm_consistency(Skeleton(A0), r, 3, 0.3)
        assert rep.consistent
        assert rep.a_values == pytest.approx(tuple([1.0] * 9))

    def test_violation_reported_with_side(self):
        r = np.array([0.15, 0.25, 0.3, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65])
        skel = Skeleton((0.01, 0.02, 0.3, 0.4, 0.45, 0.5, 0.54, 0.59, 0.64))
        rep = check_crm_consistency(skel, r, 3, 0.3)
        assert not rep.consistent
        assert all(v.side in ("lower", "upper") for v in rep.violations)

    def test_mtc_value_checked(self):
        r = np.array(A0)
        with pytest.raises(ValueError):
            check_crm_consistency(Skeleton(A0), r, 4, 0.3)


class TestModelParamDomain:
    def test_invalid(self):
        with pytest.raises(ValueError):
            ModelParamDomain(1.0, 0.5)
