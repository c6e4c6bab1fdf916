import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifbm.errors import GridError, NotPSDError, NumericError, ParameterError
from bifbm.gram import TimeGrid, Verdict, build_gram, cholesky_psd, min_eigenvalue, psd_check
from bifbm.kernels import BifBm, MinKernel, QGamma, in_theorem_region

GEOM24 = TimeGrid.geometric(2.0**-6, 2.0**6, 24)


def qgamma_2x2_min_eig(gamma):
    """Smallest eigenvalue of [[1, b], [b, c]] from trace and determinant."""
    b, c = 2**gamma - 1, 2**gamma
    tr, det = 1 + c, c - b * b
    return (tr - np.sqrt(tr * tr - 4 * det)) / 2


class TestTimeGrid:
    @pytest.mark.parametrize("bad", [[], [1, 1], [2, 1], [-1, 0], [0, np.inf]])
    def test_rejects(self, bad):
        with pytest.raises(GridError):
            TimeGrid(bad)

    def test_parse(self):
        assert TimeGrid.parse("list:1,2,3").to_list() == [1.0, 2.0, 3.0]
        g = TimeGrid.parse("geom:0.015625:64:24")
        assert len(g) == 24 and g[0] == 0.015625 and g[-1] == pytest.approx(64)
        u = TimeGrid.parse("uniform:0:1:5")
        assert u.to_list() == [0, 0.25, 0.5, 0.75, 1.0]

    @pytest.mark.parametrize("text", ["geom:0:1:4", "foo:1:2:3", "uniform:1:2", "list:a,b", "list:3,2"])
    def test_parse_errors(self, text):
        with pytest.raises(GridError):
            TimeGrid.parse(text)

    def test_immutable(self):
        g = TimeGrid([1, 2])
        with pytest.raises(ValueError):
            g.times[0] = 5


class TestBuildGram:
    def test_bifbm_diagonal(self):
        G = build_gram(BifBm(2, 0.25), GEOM24)
        np.testing.assert_allclose(np.diag(G.values), GEOM24.times, rtol=1e-15)

    def test_qgamma_two_points(self):
        G = build_gram(QGamma(1.5), [1, 2]).values
        np.testing.assert_allclose(G, [[1, 2**1.5 - 1], [2**1.5 - 1, 2**1.5]], rtol=1e-15)
        assert G[0, 1] == pytest.approx(1.82843, abs=1e-5)

    def test_min_kernel(self):
        G = build_gram(MinKernel(), [1, 2, 3]).values
        np.testing.assert_array_equal(G, [[1, 1, 1], [1, 2, 2], [1, 2, 3]])

    def test_symmetric_and_matches_eval(self):
        spec = BifBm(1.7, 0.2)
        G = build_gram(spec, GEOM24)
        np.testing.assert_array_equal(G.values, G.values.T)
        for i, j in [(0, 5), (3, 23), (10, 10)]:
            assert G.values[i, j] == spec(GEOM24[i], GEOM24[j])
        assert G.spec is spec and G.grid == GEOM24


class TestMinEigenvalue:
    def test_identity_and_diagonal(self):
        assert min_eigenvalue(np.eye(3)) == 1.0
        assert min_eigenvalue(np.diag([0.0, 4.0])) == 0.0

    def test_qgamma_two_points(self):
        lam = min_eigenvalue(build_gram(QGamma(1.5), [1, 2]))
        assert lam == pytest.approx(qgamma_2x2_min_eig(1.5), rel=1e-12)
        assert lam == pytest.approx(-0.13003, abs=1e-5)

    def test_non_finite(self):
        with pytest.raises(NumericError):
            min_eigenvalue(np.array([[1.0, np.nan], [np.nan, 1.0]]))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        for H, K in [(2, 0.25), (2, 0.45), (1.2, 0.4)]:
            G = build_gram(BifBm(H, K), GEOM24).values
            perm = rng.permutation(len(GEOM24))
            scale = np.max(np.diag(G))
            assert abs(min_eigenvalue(G) - min_eigenvalue(G[np.ix_(perm, perm)])) <= 1e-10 * scale


class TestPSDCheck:
    def test_bifbm_theorem_region(self):
        grid = TimeGrid(np.arange(1, 17) * 0.5)
        assert psd_check(build_gram(BifBm(2, 0.25), grid)).verdict is Verdict.PSD

    def test_qgamma_above_one(self):
        rep = psd_check(build_gram(QGamma(1.5), [1, 2]))
        assert rep.verdict is Verdict.NOT_PSD
        assert rep.scale == pytest.approx(2**1.5)

    def test_qgamma_below_one(self):
        grid = TimeGrid(np.linspace(4 / 32, 4, 32))
        assert psd_check(build_gram(QGamma(0.8), grid)).is_psd

    def test_zero_time_tolerated(self):
        grid = TimeGrid(np.concatenate([[0.0], GEOM24.times]))
        assert psd_check(build_gram(BifBm(2, 0.25), grid)).is_psd

    def test_verdict_invariant(self):
        rep = psd_check(np.diag([-1e-11, 1.0]))
        assert rep.is_psd
        rep = psd_check(np.diag([-1e-9, 1.0]))
        assert not rep.is_psd
        assert psd_check(np.diag([-1e-9, 1.0]), rel_tol=1e-8).is_psd

    def test_negative_tol(self):
        with pytest.raises(ParameterError):
            psd_check(np.eye(2), -1)

    def test_theorem_lattice(self):
        """20 x 20 lattice of (H, K) with 0 < K <= 1 and 2HK <= 1."""
        for H in np.linspace(0.2, 4.0, 20):
            for c in np.linspace(0.05, 1.0, 20):
                K = c * min(1.0, 1.0 / (2 * H))
                assert in_theorem_region(H, K)
                rep = psd_check(build_gram(BifBm(H, K), GEOM24))
                assert rep.is_psd, (H, K, rep)

    @pytest.mark.parametrize("gamma", [1.5, 1.9])
    def test_qgamma_necessity_at_one_percent(self, gamma):
        assert min_eigenvalue(build_gram(QGamma(gamma), [1, 1.01])) < -1e-6

    @pytest.mark.parametrize("gamma,a", [(1.1, 2.0**-9), (1.1, 1e-3), (1.5, 0.01), (1.9, 0.01)])
    def test_qgamma_necessity_below_threshold(self, gamma, a):
        # f(a) < 0 needs a below roughly (gamma/2)^(1/(gamma-1)); 0.0025 for gamma = 1.1
        assert min_eigenvalue(build_gram(QGamma(gamma), [1, 1 + a])) < -1e-6

    def test_qgamma_just_above_one_at_one_percent_is_psd(self):
        # 2x2 Gram on {1, 1.01} for gamma = 1.1: det = c - b^2 > 0 (checked to 50 digits)
        assert min_eigenvalue(build_gram(QGamma(1.1), [1, 1.01])) == pytest.approx(7.917624e-4, rel=1e-6)


class TestCholesky:
    def test_identity(self):
        L, eps = cholesky_psd(np.eye(3))
        np.testing.assert_array_equal(L, np.eye(3))
        assert eps == 0

    def test_min_kernel(self):
        L, eps = cholesky_psd(build_gram(MinKernel(), [1, 2, 3]))
        np.testing.assert_allclose(L, [[1, 0, 0], [1, 1, 0], [1, 1, 1]], atol=1e-15)
        assert eps == 0

    def test_not_psd(self):
        with pytest.raises(NotPSDError) as info:
            cholesky_psd(build_gram(QGamma(1.5), [1, 2]))
        assert info.value.min_eigenvalue == pytest.approx(-0.13003, abs=1e-5)

    def test_zero_row_needs_jitter(self):
        G = build_gram(MinKernel(), [0, 1, 2])
        L, eps = cholesky_psd(G)
        assert eps > 0

    def test_bad_schedule(self):
        with pytest.raises(ParameterError):
            cholesky_psd(np.eye(2), [1e-10, 0])

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.1, 6), st.floats(0.05, 1.0))
    def test_reconstruction(self, H, c):
        K = c * min(1.0, 1 / (2 * H))
        G = build_gram(BifBm(H, K), GEOM24).values
        L, eps = cholesky_psd(G)
        scale = np.max(np.diag(G))
        assert np.max(np.abs(L @ L.T - (G + eps * np.eye(len(G))))) <= 1e-10 * scale
        assert np.all(np.triu(L, 1) == 0)


def test_grid_equality_hash():
    a, b = TimeGrid([1, 2]), TimeGrid([1.0, 2.0])
    assert a == b and hash(a) == hash(b)
    assert len({a, b}) == 1
    assert list(itertools.islice(iter(a), 1)) == [1.0]
