import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifbm.errors import ParameterError
from bifbm.kernels import (
    BifBm,
    CGamma,
    FBm,
    LeiNualartRemainder,
    MinKernel,
    QGamma,
    Region,
    Scale,
    Sum,
    TimeChange,
    c_gamma_const,
    classify_params,
    eval_kernel,
    increment_variance,
)

mp.mp.dps = 40


def mp_bifbm(H, K, s, t):
    """Arbitrary-precision reference, straight from the defining formula."""
    H, K, s, t = (mp.mpf(x) for x in (H, K, s, t))
    return 2**-K * ((t ** (2 * H) + s ** (2 * H)) ** K - abs(t - s) ** (2 * H * K))


GEOM24 = np.geomspace(2.0**-6, 2.0**6, 24)
THEOREM_PAIRS = [(2, 0.25), (1.2, 0.4), (4, 0.1), (3, 1 / 6), (0.3, 1.0), (0.6, 0.8), (1.5, 0.2), (8, 0.05), (0.5, 0.5), (10, 0.01)]


class TestEval:
    def test_bifbm_diagonal_is_one_at_one(self):
        assert eval_kernel(BifBm(2, 0.25), 1, 1) == 1.0

    def test_bifbm_at_origin(self):
        for H, K in [(2, 0.25), (0.7, 1.3), (5, 0.05)]:
            assert eval_kernel(BifBm(H, K), 3.0, 0.0) == 0.0
            assert eval_kernel(BifBm(H, K), 0.0, 0.0) == 0.0

    def test_bifbm_off_diagonal_against_mpmath(self):
        value = eval_kernel(BifBm(2, 0.25), 1, 2)
        assert value == pytest.approx(float(mp_bifbm(2, 0.25, 1, 2)), rel=1e-15)
        assert value == pytest.approx(0.86658, abs=1e-5)

    @pytest.mark.parametrize("cls", [QGamma, CGamma])
    def test_gamma_one_is_min(self, cls):
        k = cls(1.0)
        for s, t in [(0.3, 2.0), (5.0, 1.5), (2.0, 2.0), (0.0, 1.0)]:
            assert eval_kernel(k, s, t) == min(s, t)

    def test_fbm_lei_nualart_min(self):
        assert eval_kernel(FBm(0.5), 2, 3) == pytest.approx(2.0)
        assert eval_kernel(MinKernel(), 4, 1.5) == 1.5
        H, K, s, t = 2.0, 0.25, 1.0, 3.0
        expected = 0.5 * (s ** (2 * H * K) + t ** (2 * H * K) - (t ** (2 * H) + s ** (2 * H)) ** K)
        assert eval_kernel(LeiNualartRemainder(H, K), s, t) == pytest.approx(expected, rel=1e-14)

    def test_cgamma_qgamma_closed_forms(self):
        assert eval_kernel(CGamma(0.25), 2, 3) == pytest.approx(5**0.25 - 3**0.25, rel=1e-14)
        assert eval_kernel(QGamma(1.5), 1, 2) == pytest.approx(2**1.5 - 1, rel=1e-15)
        assert eval_kernel(QGamma(3), 1, 2) == pytest.approx(7.0)

    def test_combinators(self):
        H, K = 2.0, 0.25
        k = Scale(TimeChange(CGamma(K), 2 * H), 2**-K) + Scale(QGamma(2 * H * K), 2**-K)
        assert isinstance(k, Sum)
        assert eval_kernel(k, 1, 2) == pytest.approx(eval_kernel(BifBm(H, K), 1, 2), rel=1e-14)
        assert eval_kernel(3.0 * MinKernel(), 2, 5) == 6.0

    def test_vectorized_matches_scalar(self):
        k = BifBm(1.3, 0.3)
        s = np.array([0.0, 0.5, 2.0])
        t = np.array([1.0, 0.5, 0.1])
        np.testing.assert_array_equal(k(s, t), [eval_kernel(k, a, b) for a, b in zip(s, t)])

    @pytest.mark.parametrize(
        "make",
        [
            lambda: BifBm(0, 1),
            lambda: BifBm(1, -0.5),
            lambda: FBm(1.2),
            lambda: CGamma(0),
            lambda: QGamma(float("nan")),
            lambda: LeiNualartRemainder(1, 1.5),
            lambda: Scale(MinKernel(), -1),
            lambda: TimeChange(MinKernel(), 0),
        ],
    )
    def test_invalid_construction(self, make):
        with pytest.raises(ParameterError):
            make()

    def test_gamma_above_one_constructs(self):
        assert QGamma(3).gamma == 3.0
        assert CGamma(1.7).gamma == 1.7

    def test_negative_time_rejected(self):
        with pytest.raises(ParameterError):
            eval_kernel(MinKernel(), -1, 1)


class TestIncrementVariance:
    def test_equal_times(self):
        assert increment_variance(BifBm(2, 0.25), 1.7, 1.7) == 0.0

    def test_fbm(self):
        assert increment_variance(FBm(0.3), 1.0, 2.5) == pytest.approx(1.5**0.6, rel=1e-14)

    def test_bifbm_against_mpmath(self):
        ref = 1 + 2 - 2 * mp_bifbm(2, 0.25, 1, 2)
        assert increment_variance(BifBm(2, 0.25), 1, 2) == pytest.approx(float(ref), rel=1e-14)
        assert float(ref) == pytest.approx(1.26684, abs=1e-5)


class TestClassify:
    @pytest.mark.parametrize(
        "H,K,label",
        [
            (2, 0.25, Region.THEOREM),
            (0.5, 1.5, Region.OTHER_KNOWN),
            (2, 0.6, Region.NECESSARY_VIOLATED),
            (1.5, 0.5, Region.UNKNOWN),
            (3, 1 / 6, Region.THEOREM),
            (0.3, 2.5, Region.UNKNOWN),
            (0.3, 3.5, Region.NECESSARY_VIOLATED),
            (1.0, 1.0, Region.OTHER_KNOWN),
        ],
    )
    def test_labels(self, H, K, label):
        assert classify_params(H, K).label is label

    def test_nonpositive(self):
        with pytest.raises(ParameterError):
            classify_params(0, 1)
        with pytest.raises(ParameterError):
            classify_params(1, -1)

    @given(st.floats(0.01, 20), st.floats(0.001, 5))
    def test_labels_consistent_with_definitions(self, H, K):
        label = classify_params(H, K).label
        theorem = K <= 1 and 2 * H * K <= 1
        if label is Region.THEOREM:
            assert K <= 1 + 1e-11 and 2 * H * K <= 1 + 1e-11
        elif theorem:
            pytest.fail("missed TheoremRegion")
        if label is Region.NECESSARY_VIOLATED:
            assert K > 1 / H


class TestCGammaConst:
    def test_half(self):
        assert c_gamma_const(0.5) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-15)
        assert c_gamma_const(0.5) == pytest.approx(0.2820948, abs=1e-7)

    def test_against_mpmath_gamma(self):
        for g in (0.1, 0.37, 0.9, 0.999):
            ref = mp.mpf(g) / mp.gamma(1 - mp.mpf(g))
            assert c_gamma_const(g) == pytest.approx(float(ref), rel=1e-13)
        assert c_gamma_const(0.9) == pytest.approx(0.0946023, abs=1e-7)

    def test_normalizes_the_laplace_integral(self):
        g = 0.4
        integral = mp.quad(lambda y: (1 - mp.e**-y) / y ** (g + 1), [0, 1, mp.inf])
        assert c_gamma_const(g) == pytest.approx(float(1 / integral), rel=1e-12)

    @pytest.mark.parametrize("g", [1.0, 0.0, -0.2, 1.5])
    def test_out_of_range(self, g):
        with pytest.raises(ParameterError):
            c_gamma_const(g)


kernel_strategy = st.one_of(
    st.builds(BifBm, st.floats(0.05, 10), st.floats(0.01, 3)),
    st.builds(FBm, st.floats(0.01, 1)),
    st.builds(CGamma, st.floats(0.05, 3)),
    st.builds(QGamma, st.floats(0.05, 3)),
    st.builds(LeiNualartRemainder, st.floats(0.05, 10), st.floats(0.01, 1)),
    st.just(MinKernel()),
)
times = st.floats(0, 1e3, allow_nan=False)


class TestInvariants:
    @settings(max_examples=2000)
    @given(kernel_strategy, times, times)
    def test_symmetry_bit_exact(self, k, s, t):
        a, b = eval_kernel(k, s, t), eval_kernel(k, t, s)
        assert a == b or (math.isnan(a) and math.isnan(b))

    def test_symmetry_bulk_random(self):
        rng = np.random.default_rng(0)
        for H, K in [(2, 0.25), (0.4, 1.7), (7, 0.05)]:
            s, t = rng.uniform(0, 1e3, (2, 10_000))
            k = BifBm(H, K)
            np.testing.assert_array_equal(k(s, t), k(t, s))

    def test_diagonal_law(self):
        t = np.concatenate([[0.0], np.geomspace(1e-6, 1e3, 400)])
        for H, K in THEOREM_PAIRS + [(0.5, 1.9), (2, 0.6)]:
            got = BifBm(H, K)(t, t)
            ref = np.power(t, 2 * H * K)
            np.testing.assert_allclose(got, ref, rtol=1e-14, atol=0)

    @pytest.mark.parametrize("H,K", THEOREM_PAIRS)
    def test_decomposition_identity(self, H, K):
        s, t = np.meshgrid(GEOM24, GEOM24)
        R = BifBm(H, K)(s, t)
        C = CGamma(K)(s ** (2 * H), t ** (2 * H))
        Q = QGamma(2 * H * K)(s, t)
        assert np.max(np.abs(R - 2**-K * C - 2**-K * Q) / (1 + np.abs(R))) <= 1e-12

    @pytest.mark.parametrize("H,K", THEOREM_PAIRS)
    def test_lei_nualart_identity(self, H, K):
        s, t = np.meshgrid(GEOM24, GEOM24)
        S = FBm(H * K)(s, t)
        resid = S - 2 ** (K - 1) * BifBm(H, K)(s, t) - LeiNualartRemainder(H, K)(s, t)
        assert np.max(np.abs(resid) / (1 + np.abs(S))) <= 1e-12

    @pytest.mark.parametrize("H", [0.05, 0.1, 0.25, 0.3, 0.45, 0.5])
    def test_fbm_corollary_identity(self, H):
        s, t = np.meshgrid(GEOM24, GEOM24)
        half = 0.5 * (QGamma(2 * H)(s, t) + np.minimum(s, t) ** (2 * H))
        assert np.max(np.abs(FBm(H)(s, t) - half)) <= 1e-12

    @pytest.mark.parametrize("a", [0.5, 2, 10])
    @pytest.mark.parametrize("H,K", THEOREM_PAIRS[:5])
    def test_self_similarity(self, H, K, a):
        s, t = np.meshgrid(GEOM24, GEOM24)
        R = BifBm(H, K)
        w = a ** (2 * H * K)
        assert np.all(np.abs(R(a * s, a * t) - w * R(s, t)) <= 1e-12 * w * (1 + np.abs(R(s, t))))
