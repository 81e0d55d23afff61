import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import seeds
from dlds.errors import DimensionError, DomainError
from dlds.metrics import align_dictionaries, evaluate, pearson_r, r2_score, rmse_relative

# direct formula, exact rational arithmetic: 11 / sqrt(5 * 25.0) ... evaluated at 20 digits
PEARSON_1234_1235 = 0.98270762982399079076


class TestPearson:
    def test_identical(self):
        assert pearson_r([1.0, 3.0, 2.0], [1.0, 3.0, 2.0]) == pytest.approx(1.0, abs=1e-15)

    def test_negated(self):
        assert pearson_r([1.0, 3.0, 2.0], [-1.0, -3.0, -2.0]) == pytest.approx(-1.0, abs=1e-15)

    def test_direct_formula_oracle(self):
        assert pearson_r([1, 2, 3, 4], [1, 2, 3, 5]) == pytest.approx(PEARSON_1234_1235, abs=1e-15)

    def test_constant_input(self):
        with pytest.raises(DomainError):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            pearson_r([1.0, 2.0], [1.0, 2.0, 3.0])

    @given(seeds, st.floats(0.01, 100), st.floats(-100, 100), st.floats(0.01, 100), st.floats(-100, 100))
    def test_positive_affine_invariance(self, seed, s1, o1, s2, o2):
        r = np.random.default_rng(seed)
        a, b = r.standard_normal(30), r.standard_normal(30)
        assert abs(pearson_r(s1 * a + o1, s2 * b + o2) - pearson_r(a, b)) < 1e-12

    @given(seeds)
    def test_in_range(self, seed):
        r = np.random.default_rng(seed)
        assert -1.0 <= pearson_r(r.standard_normal(5), r.standard_normal(5)) <= 1.0


class TestR2:
    def test_perfect(self):
        assert r2_score([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]) == 1.0

    def test_mean_prediction(self):
        t = np.array([1.0, 2.0, 6.0])
        assert r2_score(t, np.full(3, t.mean())) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_direct_formula(self, seed):
        r = np.random.default_rng(seed)
        t, p = r.standard_normal(40), r.standard_normal(40)
        ref = 1.0 - sum((ti - pi) ** 2 for ti, pi in zip(t, p)) / sum((ti - t.mean()) ** 2 for ti in t)
        assert abs(r2_score(t, p) - ref) < 1e-12

    def test_constant_truth(self):
        with pytest.raises(DomainError):
            r2_score([2.0, 2.0], [1.0, 3.0])

    def test_approaches_one(self, rng):
        t, noise = rng.standard_normal(50), rng.standard_normal(50)
        gaps = [1.0 - r2_score(t, t + eps * noise) for eps in (1e-1, 1e-3, 1e-5)]
        assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-8


class TestRmse:
    def test_cases(self):
        t = np.array([[1.0, -2.0], [0.5, 3.0]])
        assert rmse_relative(t, t) == 0.0
        assert rmse_relative(t, np.zeros_like(t)) == 1.0
        assert rmse_relative(t, 2 * t) == 1.0

    def test_zero_truth(self):
        with pytest.raises(DomainError):
            rmse_relative(np.zeros(3), np.ones(3))


class TestAlignment:
    def ops(self, seed, n=4, k=5):
        return np.random.default_rng(seed).standard_normal((n, k, k))

    def test_identity(self):
        ops = self.ops(0)
        assign, scores, signs = align_dictionaries(ops, ops)
        np.testing.assert_array_equal(assign, np.arange(4))
        np.testing.assert_allclose(scores, 1.0)
        np.testing.assert_array_equal(signs, 1.0)

    @given(seeds)
    def test_shuffle_and_sign_invariance(self, seed):
        ops = self.ops(1)
        r = np.random.default_rng(seed)
        perm = r.permutation(4)
        flips = r.choice([-1.0, 1.0], 4)
        learned = ops[perm] * flips[:, None, None] * r.uniform(0.5, 2.0, 4)[:, None, None]
        assign, scores, signs = align_dictionaries(learned, ops)
        np.testing.assert_array_equal(perm[assign], np.arange(4))
        np.testing.assert_allclose(scores, 1.0)
        np.testing.assert_array_equal(signs, flips[assign])

    def test_random_null_is_low(self):
        # 100 draws of 12 unrelated 12 x 12 operators (144 entries each)
        r = np.random.default_rng(0)
        means = [align_dictionaries(r.standard_normal((12, 12, 12)),
                                    r.standard_normal((12, 12, 12)))[1].mean() for _ in range(100)]
        assert np.mean(means) < 0.3

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            align_dictionaries(self.ops(0, 3), self.ops(0, 4))


class TestEvaluate:
    def test_report(self, rng):
        t = rng.standard_normal((20, 3))
        rep = evaluate(t, t + 0.01 * rng.standard_normal((20, 3)))
        assert rep.pearson_r > 0.99 and rep.rmse >= 0
        assert len(rep.per_channel["r2"]) == 3
        assert set(rep.to_dict()) >= {"pearson_r", "r2", "rmse", "per_channel"}

    def test_constant_channel_gives_nan_entry(self, rng):
        t = np.column_stack([rng.standard_normal(10), np.ones(10)])
        rep = evaluate(t, t)
        assert np.isnan(rep.per_channel["pearson_r"][1]) and rep.pearson_r == pytest.approx(1.0)
