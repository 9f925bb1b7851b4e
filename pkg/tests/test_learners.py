import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skilltext.learners import (custom_profile, d_skill_profile, induce_poisson_from_psi, load_tabulated_profile,
                                matching_profile, near_far_profile, one_skill_profile, psi_d_skill, psi_eval,
                                psi_identity, psi_near_far, psi_one_skill, psi_tabulated, psuc_d_skill,
                                psuc_near_far, psuc_one_skill, save_tabulated_profile, tabulated_profile)

E = math.e
RHO_AXIS = np.round(np.arange(0, 10.01, 0.1), 10)


class TestClosedForms:
    def test_one_skill(self):
        assert psuc_one_skill(0) == 1.0
        assert psuc_one_skill(1) == pytest.approx(1 / E)
        assert psuc_one_skill(math.log(2)) == pytest.approx(0.5)

    def test_d_skill(self):
        for rho in (0.0, 0.3, 2.0, 7.5):
            assert psuc_d_skill(1, rho) == pytest.approx(math.exp(-rho))
        assert psuc_d_skill(2, 1.0) == pytest.approx(2 / E)
        assert psuc_d_skill(2, 0.0) == 1.0

    def test_d_skill_matches_poisson_sum(self):
        for D in (1, 2, 3, 7):
            for rho in (0.5, 3.0, 9.0):
                direct = sum(math.exp(-rho) * rho ** t / math.factorial(t) for t in range(D))
                assert psuc_d_skill(D, rho) == pytest.approx(direct, rel=1e-12)

    def test_d_skill_large_D(self):
        rho = np.linspace(0, 20, 201)
        assert np.all(np.abs(psuc_d_skill(200, rho) - 1.0) < 1e-9)

    def test_d_zero_rejected(self):
        with pytest.raises(ValueError):
            psuc_d_skill(0, 1.0)

    def test_near_far(self):
        assert psuc_near_far(0, 0) == (1.0, 1.0)
        a, b = psuc_near_far(0, 1)
        assert a == pytest.approx(2 / E) and b == pytest.approx(1 / E)
        a, b = psuc_near_far(1.7, 1.7)
        assert a == b

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), -1.0])
    def test_rejects_bad_load(self, bad):
        with pytest.raises(ValueError):
            psuc_one_skill(bad)
        with pytest.raises(ValueError):
            psuc_near_far(0.0, bad)


BUILTIN = [one_skill_profile(), d_skill_profile(2), d_skill_profile(5), one_skill_profile(2), d_skill_profile(3, 2),
           near_far_profile()]


@pytest.mark.parametrize("profile", BUILTIN, ids=lambda p: f"{p.kind}-{p.D}-K{p.num_classes}")
def test_profile_grid_bounded_and_monotone(profile):
    K = profile.num_classes
    if K == 1:
        vals = np.asarray(profile(RHO_AXIS))
        assert np.all((vals >= 0) & (vals <= 1))
        assert np.all(np.diff(vals) <= 0)
        return
    r1, r2 = np.meshgrid(RHO_AXIS, RHO_AXIS, indexing="ij")
    vals = profile(np.stack([r1, r2], axis=-1))
    assert np.all((vals >= 0) & (vals <= 1))
    assert np.all(np.diff(vals, axis=0) <= 1e-15)
    assert np.all(np.diff(vals, axis=1) <= 1e-15)


@given(st.floats(0, 50), st.floats(0, 50))
def test_near_far_profile_matches_function(r1, r2):
    a, b = psuc_near_far(r1, r2)
    out = near_far_profile()(np.array([r1, r2]))
    assert out[0] == pytest.approx(a, abs=1e-15) and out[1] == pytest.approx(b, abs=1e-15)


@given(st.floats(0, 30), st.floats(0, 30))
def test_multi_class_builtins_use_total_load(r1, r2):
    out = d_skill_profile(2, 2)(np.array([r1, r2]))
    assert out[0] == out[1] == pytest.approx(psuc_d_skill(2, r1 + r2))


class TestPsi:
    def test_d_skill(self):
        assert psi_eval(psi_d_skill(2), 3) == 0
        assert psi_eval(psi_d_skill(2), 2) == 2
        assert psi_eval(psi_one_skill(), 1) == 1

    def test_near_far(self):
        assert psi_eval(psi_near_far(), (1, 1)).tolist() == [1, 1]
        assert psi_eval(psi_near_far(), (2, 0)).tolist() == [0, 0]
        assert psi_eval(psi_near_far(), (0, 1)).tolist() == [0, 1]

    @pytest.mark.parametrize("psi", [psi_d_skill(3), psi_near_far(), psi_identity(2), psi_d_skill(2, 3)])
    def test_zero_maps_to_zero(self, psi):
        assert np.all(psi.apply(np.zeros(psi.num_classes, dtype=int)) == 0)

    @given(st.lists(st.integers(0, 6), min_size=2, max_size=2), st.integers(1, 5))
    def test_bounded_by_counts(self, n, D):
        for psi in (psi_d_skill(D, 2), psi_near_far(), psi_identity(2)):
            assert np.all(psi.apply(np.array(n)) <= np.array(n))

    def test_tabulated(self):
        psi = psi_tabulated({(2, 0): (1, 0), (1, 1): (1, 1)}, 2)
        assert psi.apply(np.array([[2, 0], [1, 1], [3, 3]])).tolist() == [[1, 0], [1, 1], [0, 0]]
        assert not psi.all_or_nothing
        with pytest.raises(ValueError):
            psi_tabulated({(1, 0): (2, 0)}, 2)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            psi_d_skill(2).apply(np.array([-1]))


class TestInduced:
    def test_d_skill_at_one(self):
        est = induce_poisson_from_psi(psi_d_skill(2), 1.0, 10 ** 6, seed=11)
        assert abs(est.psuc[0] - 2 / E) < 3 * est.stderr[0]

    def test_near_far_at_one_one(self):
        est = induce_poisson_from_psi(psi_near_far(), [1.0, 1.0], 10 ** 6, seed=12)
        ref = psuc_near_far(1.0, 1.0)
        assert np.all(np.abs(est.psuc - ref) < 3 * est.stderr)

    def test_identity_is_one(self):
        est = induce_poisson_from_psi(psi_identity(2), [0.7, 2.0], 10_000)
        assert np.allclose(est.psuc, 1.0)

    def test_zero_load_uses_tagged_skill(self):
        est = induce_poisson_from_psi(psi_d_skill(1), 0.0, 1000)
        assert est.psuc[0] == 1.0
        # class 1 has no load: the tagged class-1 skill plus Poisson(1) class-2 skills
        est = induce_poisson_from_psi(psi_near_far(), [0.0, 1.0], 200_000, seed=2)
        assert est.psuc[0] == pytest.approx(psuc_near_far(0.0, 1.0)[0], abs=4 * est.stderr[0])

    def test_rejects_no_samples(self):
        with pytest.raises(ValueError):
            induce_poisson_from_psi(psi_one_skill(), 1.0, 0)

    def test_near_far_grid_matches_closed_form(self):
        # 50 comparisons, so the per-point band is widened to a family-wise 1% level
        axis = [0.25, 0.75, 1.5, 2.5, 4.0]
        for i, r1 in enumerate(axis):
            for j, r2 in enumerate(axis):
                est = induce_poisson_from_psi(psi_near_far(), [r1, r2], 200_000, seed=100 + 5 * i + j)
                ref = np.array(psuc_near_far(r1, r2))
                assert np.all(np.abs(est.psuc - ref) < 3.5 * est.stderr), (r1, r2)

    def test_d_skill_grid_matches_closed_form(self):
        for i, rho in enumerate([0.2, 1.0, 2.0, 3.5, 6.0]):
            for D in (1, 2, 3, 4, 6):
                est = induce_poisson_from_psi(psi_d_skill(D), rho, 200_000, seed=7 * i + D)
                ref = psuc_d_skill(D, rho)
                # each tagged sample is Bernoulli(ref); use its exact standard error
                se = math.sqrt(ref * (1 - ref) / est.num_samples)
                assert abs(est.psuc[0] - ref) < 3.5 * se + 1e-6 / math.sqrt(est.num_samples)

    def test_matching_profile(self):
        assert matching_profile(psi_d_skill(3)).D == 3
        assert matching_profile(psi_near_far()).kind == "near-far"

    def test_deterministic_given_seed(self):
        a = induce_poisson_from_psi(psi_d_skill(2), 1.3, 100_000, seed=5, block_size=4096)
        b = induce_poisson_from_psi(psi_d_skill(2), 1.3, 100_000, seed=5, block_size=4096)
        assert np.array_equal(a.psuc, b.psuc)


class TestTabulated:
    def test_interpolation_and_clamp(self):
        prof = tabulated_profile(([0.0, 1.0, 2.0],), np.array([[1.0], [0.5], [0.2]]))
        assert prof(0.5) == pytest.approx(0.75)
        assert prof(10.0) == pytest.approx(0.2)

    def test_csv_round_trip_one_class(self, tmp_path):
        grid = np.linspace(0, 10, 41)
        prof = tabulated_profile((grid,), np.exp(-grid)[:, None])
        save_tabulated_profile(prof, tmp_path / "p.csv")
        back = load_tabulated_profile(tmp_path / "p.csv")
        assert back.num_classes == 1
        xs = np.linspace(0, 10, 97)
        assert np.allclose(back(xs), prof(xs), atol=0, rtol=0)
        assert (tmp_path / "p.csv").read_text().splitlines()[0] == "rho_1,psuc_1"

    def test_csv_round_trip_two_classes(self, tmp_path):
        axis = np.linspace(0, 4, 9)
        r1, r2 = np.meshgrid(axis, axis, indexing="ij")
        table = near_far_profile()(np.stack([r1, r2], axis=-1))
        prof = tabulated_profile((axis, axis), table)
        save_tabulated_profile(prof, tmp_path / "nf.csv")
        back = load_tabulated_profile(tmp_path / "nf.csv")
        pts = np.array([[0.3, 1.1], [3.9, 0.0], [2.0, 2.0]])
        assert np.allclose(back(pts), prof(pts))
        assert np.allclose(back(np.array([2.0, 2.0])), near_far_profile()(np.array([2.0, 2.0])))

    def test_custom_profile(self):
        prof = custom_profile(lambda r: 1.0 / (1.0 + r))
        assert prof(1.0) == pytest.approx(0.5)
