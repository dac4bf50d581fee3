import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pbit_grng import stats
from pbit_grng.coupling import GrngSpec
from pbit_grng.errors import ConfigurationError, DegenerateDataError, ShapeError
from pbit_grng.sampler import SampleStream, StreamMeta


def _normals(seed, n):
    return np.random.default_rng(seed).standard_normal(n)


def test_g_x_conversions_round_trip():
    spec = GrngSpec(16, 0.3, 0.05)
    g = np.array([0, 1, 12345, spec.g0], dtype=np.uint64)
    x = stats.g_to_x(g, spec)
    assert x[0] == pytest.approx(-6.0)
    np.testing.assert_allclose(stats.x_to_g(x, spec), g.astype(float), rtol=1e-12, atol=1e-9)


def test_to_x_checks_metadata():
    spec = GrngSpec(8, 0.5, 0.1)
    meta = StreamMeta(spec, 1, spec.mode, 8, 100, 3)
    stream = SampleStream(np.array([0, 128, 255], dtype=np.uint64), meta)
    np.testing.assert_allclose(stats.to_x(stream), stats.g_to_x(stream.values, spec))
    with pytest.raises(ConfigurationError, match="does not match"):
        stats.to_x(stream, GrngSpec(8, 0.5, 0.2))


def test_moment_fit_known_values():
    xs = np.array([-1.0, 0.0, 1.0, 2.0])
    fit = stats.fit_gaussian(xs, mu=0.5, sigma=0.1)
    assert fit.x_loc == 0.5
    assert fit.x_scale == pytest.approx(math.sqrt(5 / 3))
    assert fit.mu == pytest.approx(0.55) and fit.sigma == pytest.approx(0.1 * math.sqrt(5 / 3))
    with pytest.raises(DegenerateDataError):
        stats.fit_gaussian(np.ones(10))
    with pytest.raises(DegenerateDataError):
        stats.fit_gaussian(np.ones(1))
    with pytest.raises(ConfigurationError):
        stats.fit_gaussian(xs, "median")


def test_weighted_fit_of_discretized_gaussian():
    x = np.linspace(-6, 6, 4001)
    w = np.exp(-0.5 * ((x - 0.3) / 1.2) ** 2)
    for method in ("moments", "histogram-least-squares"):
        fit = stats.fit_gaussian(x, method, weights=w)
        assert fit.x_loc == pytest.approx(0.3, abs=2e-3)
        assert fit.x_scale == pytest.approx(1.2, rel=2e-3)


def test_curve_fit_ignores_clipped_support():
    # A Gaussian clipped at +-2.5: moments see a narrower law, the curve fit
    # restricted to the support recovers the underlying scale.
    xs = _normals(1, 400_000)
    xs = xs[np.abs(xs) < 2.5]
    mom = stats.fit_gaussian(xs)
    cur = stats.fit_gaussian(xs, "histogram-least-squares", support=(-2.5, 2.5))
    assert mom.x_scale < 0.96
    assert cur.x_scale == pytest.approx(1.0, abs=0.01)


def test_moment_fit_converges_at_root_m_rate():
    def rms_error(m, reps, seed):
        r = np.random.default_rng(seed)
        errs = [stats.fit_gaussian(r.standard_normal(m)).x_scale - 1.0 for _ in range(reps)]
        return math.sqrt(np.mean(np.square(errs)))

    ratio = rms_error(10**4, 200, 3) / rms_error(10**6, 20, 4)
    assert 5 <= ratio <= 20


def test_normalized_rmse():
    xs = _normals(2, 10**6)
    fit = stats.fit_gaussian(xs)
    assert stats.normalized_rmse(xs, fit) < 0.01
    uniform = np.random.default_rng(3).uniform(-math.sqrt(3), math.sqrt(3), 10**5)
    assert stats.normalized_rmse(uniform, stats.fit_gaussian(uniform)) > 0.1
    with pytest.raises(DegenerateDataError):
        stats.normalized_rmse(np.array([]), fit)


def test_autocorrelation_known_series():
    x = np.array([1.0, -1.0] * 50)
    acf = stats.autocorrelation(x, 3)
    assert acf[0] == 1.0
    np.testing.assert_allclose(acf[1:], [-0.99, 0.98, -0.97])
    with pytest.raises(DegenerateDataError):
        stats.autocorrelation(np.ones(5), 2)
    with pytest.raises(ConfigurationError):
        stats.autocorrelation(x, 100)


@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=60).filter(lambda v: np.ptp(v) > 1e-3))
def test_autocorrelation_lag0_is_one(values):
    acf = stats.autocorrelation(values, 2)
    assert acf[0] == 1.0
    assert np.all(np.abs(acf) <= 1 + 1e-12)


def test_ar1_correlation_time():
    r = np.random.default_rng(5)
    phi, n = math.exp(-1 / 20), 200_000
    x = np.empty(n)
    x[0] = 0.0
    noise = r.standard_normal(n) * math.sqrt(1 - phi * phi)
    for k in range(1, n):
        x[k] = phi * x[k - 1] + noise[k]
    tau = stats.fit_correlation_time(stats.autocorrelation(x, 100), dt=2.0)
    assert tau == pytest.approx(40.0, rel=0.1)
    with pytest.raises(DegenerateDataError):
        stats.fit_correlation_time(np.array([1.0, 0.1, 0.0]))


def test_tail_error_of_exact_pdf_is_zero():
    edges = np.linspace(-stats.SPAN, stats.SPAN, stats.RMSE_BINS + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    rows = stats.tail_error_from_histogram(centers, stats.gaussian_pdf(centers))
    assert max(abs(r.e_sigma) for r in rows) < 1e-12
    assert all(r.reliable for r in rows)


def test_sigma_ideal():
    assert stats.sigma_ideal(1.0) == 0.0
    assert stats.sigma_ideal(math.exp(-8)) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        stats.sigma_ideal(0.0)


def test_tail_error_on_samples_and_reliability():
    xs = _normals(6, 10**5)
    rows = stats.tail_error(xs)
    assert len(rows) == stats.RMSE_BINS
    reliable = [r for r in rows if r.reliable]
    assert max(r.sigma_obtained for r in reliable) < 3.5
    assert stats.max_abs_tail_error(rows, 3.0, reliable_only=True) < 0.3
    empty_far = [r for r in rows if r.count == 0]
    assert empty_far and all(math.isnan(r.e_sigma) and not r.reliable for r in empty_far)
    assert stats.max_abs_tail_error(rows, 5.0) == math.inf
    fine = stats.tail_error(xs, stats.fine_tail_levels())
    assert len(fine) == 80
    with pytest.raises(DegenerateDataError):
        stats.tail_error(np.array([]))


def test_combine_streams_preserves_moments():
    k, m = 4, 250_000
    streams = [_normals(10 + j, m) for j in range(k)]
    comb = stats.combine_streams(streams)
    assert abs(comb.mean()) < 4 / math.sqrt(k * m)
    assert abs(comb.var() - 1) < 5 / math.sqrt(m)
    with pytest.raises(ShapeError):
        stats.combine_streams([np.zeros(3), np.zeros(4)])
    with pytest.raises(ShapeError):
        stats.combine_streams([])


def test_independence_scatter():
    xs = _normals(7, 10**5)
    corr, pairs = stats.independence_scatter(xs)
    assert abs(corr) < 3 / math.sqrt(xs.size)
    assert pairs.shape == (xs.size - 1, 2)
    with pytest.raises(DegenerateDataError):
        stats.independence_scatter([1.0, 2.0])


def test_linear_regression_and_rhat():
    reg = stats.linear_regression([1, 2, 3], [2, 4, 6])
    assert reg == {"slope": pytest.approx(2), "intercept": pytest.approx(0, abs=1e-12), "r2": 1.0}
    with pytest.raises(DegenerateDataError):
        stats.linear_regression([1], [1])
    chains = _normals(8, 40_000).reshape(4, -1)
    assert stats.split_rhat(chains) == pytest.approx(1.0, abs=0.01)
    stuck = np.vstack([_normals(9, 1000) + 5, _normals(10, 1000) - 5])
    assert stats.split_rhat(stuck) > 2
    with pytest.raises(ShapeError):
        stats.split_rhat(np.zeros(5))


def test_analyze_is_pure():
    spec = GrngSpec(64, 0.5, 0.1)
    xs = _normals(11, 50_000)
    a = stats.analyze(xs, spec).to_dict()
    b = stats.analyze(xs.copy(), spec).to_dict()
    assert repr(a) == repr(b)
    assert a["m_samples"] == 50_000 and len(a["lag_autocorr"]) == 101
    assert a["mu_fit"] == pytest.approx(0.5, abs=1e-3)
