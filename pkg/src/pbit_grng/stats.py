"""Figures of merit for generated streams: fits, RMSE, autocorrelation, tails."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, special

from .coupling import GrngSpec
from .errors import ConfigurationError, DegenerateDataError, ShapeError

RMSE_BINS = 101
SPAN = 5.0
MIN_TAIL_COUNT = 10.0

_SQRT2PI = math.sqrt(2.0 * math.pi)


def gaussian_pdf(x, loc=0.0, scale=1.0):
    z = (np.asarray(x, dtype=np.float64) - loc) / scale
    return np.exp(-0.5 * z * z) / (scale * _SQRT2PI)


def to_x(stream, spec: GrngSpec | None = None) -> np.ndarray:
    """Standardized deviates ``X = (G/G0 - mu)/sigma`` for a stream."""
    meta_spec = stream.meta.spec
    if spec is None:
        spec = meta_spec
    elif (spec.n_bits, spec.mu, spec.sigma) != (meta_spec.n_bits, meta_spec.mu, meta_spec.sigma):
        raise ConfigurationError(
            f"spec (n_bits={spec.n_bits}, mu={spec.mu}, sigma={spec.sigma}) does not match "
            f"stream metadata (n_bits={meta_spec.n_bits}, mu={meta_spec.mu}, sigma={meta_spec.sigma})"
        )
    return g_to_x(stream.values, spec)


def g_to_x(values, spec: GrngSpec) -> np.ndarray:
    g = np.asarray(values, dtype=np.uint64).astype(np.float64)
    return (g / float(spec.g0) - spec.mu) / spec.sigma


def x_to_g(xs, spec: GrngSpec) -> np.ndarray:
    """Real-valued readouts for (possibly combined) deviates; not re-quantized."""
    return (spec.mu + spec.sigma * np.asarray(xs, dtype=np.float64)) * float(spec.g0)


@dataclass(frozen=True)
class GaussianFit:
    """Fitted parameters in readout units (``G/G0``) plus the same in X units."""

    mu: float
    sigma: float
    x_loc: float
    x_scale: float
    method: str = "moments"

    def pdf_x(self, x):
        return gaussian_pdf(x, self.x_loc, self.x_scale)


def _histogram(xs, bins=RMSE_BINS, span=SPAN):
    edges = np.linspace(-span, span, bins + 1)
    counts, _ = np.histogram(xs, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return counts, centers, edges[1] - edges[0]


def fit_gaussian(xs, method: str = "moments", *, weights=None,
                 mu: float = 0.0, sigma: float = 1.0, support=None) -> GaussianFit:
    """Best-fit Gaussian to standardized data.

    ``mu``/``sigma`` map the result back to readout units (leave at 0/1 to
    stay in X units). ``weights`` turns ``xs`` into weighted points, e.g. an
    exact pmf over its support.

    ``histogram-least-squares`` fits amplitude, location and scale of a
    Gaussian curve to the binned density, initialized at the moment estimates.
    Only bins inside ``support`` (X interval reachable by the generator) are
    used, so a distribution clipped by the finite readout range is not
    penalized for the missing tails.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size < 2:
        raise DegenerateDataError("need at least 2 samples to fit a Gaussian")
    if weights is None:
        loc = float(np.mean(xs))
        scale = float(np.std(xs, ddof=1))
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != xs.shape:
            raise ShapeError("weights must match xs")
        w = w / w.sum()
        loc = float(np.dot(w, xs))
        scale = math.sqrt(float(np.dot(w, (xs - loc) ** 2)))
    if not scale > 0:
        raise DegenerateDataError("data have zero variance")

    if method == "histogram-least-squares":
        loc, scale = _curve_fit(xs, weights, loc, scale, support)
    elif method != "moments":
        raise ConfigurationError(f"unknown fit method {method!r}")
    return GaussianFit(mu + sigma * loc, sigma * scale, loc, scale, method)


def _curve_fit(xs, weights, loc, scale, support):
    lo, hi = loc - SPAN * scale, loc + SPAN * scale
    edges = np.linspace(lo, hi, RMSE_BINS + 1)
    counts, _ = np.histogram(xs, bins=edges, weights=weights)
    total = xs.size if weights is None else float(np.sum(weights))
    width = edges[1] - edges[0]
    density = counts / (total * width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    use = np.ones_like(centers, dtype=bool)
    if support is not None:
        use = (edges[:-1] >= support[0]) & (edges[1:] <= support[1])
    c, d = centers[use], density[use]

    def resid(params):
        amp, m, log_s = params
        return amp * gaussian_pdf(c, m, math.exp(log_s)) - d

    sol = optimize.least_squares(resid, x0=[1.0, loc, math.log(scale)], method="lm")
    return float(sol.x[1]), float(math.exp(sol.x[2]))


def normalized_rmse(xs, fit: GaussianFit, bins: int = RMSE_BINS, span: float = SPAN) -> float:
    """RMSE between the binned density of ``xs`` and the fitted pdf, over peak pdf.

    Bins cover ``[-span, span]`` in X units; the density divides by the total
    sample count, including any samples outside the binned range.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        raise DegenerateDataError("no samples")
    counts, centers, width = _histogram(xs, bins, span)
    density = counts / (xs.size * width)
    model = fit.pdf_x(centers)
    peak = 1.0 / (fit.x_scale * _SQRT2PI)
    return float(np.sqrt(np.mean((density - model) ** 2)) / peak)


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Normalized autocorrelation ``A(k)`` for ``k = 0..max_lag``.

    Numerator sums over the ``T - k`` available pairs; denominator is the
    full sum of squared deviations (no per-lag renormalization).
    """
    x = np.asarray(series, dtype=np.float64)
    if max_lag < 0 or max_lag >= x.size:
        raise ConfigurationError(f"max_lag={max_lag} must satisfy 0 <= max_lag < len(series)={x.size}")
    xc = x - x.mean()
    den = float(np.dot(xc, xc))
    if den == 0.0:
        raise DegenerateDataError("series is constant")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(np.dot(xc[:-k], xc[k:])) / den
    return out


def fit_correlation_time(acf, dt: float = 1.0, floor: float = math.exp(-1.0)) -> float:
    """Decay time of ``exp(-lag dt / tau)`` fitted to the leading part of ``acf``.

    Uses lags up to the first point below ``floor``; least squares on the
    log of the correlation with the intercept pinned at ``A(0) = 1``.
    """
    acf = np.asarray(acf, dtype=np.float64)
    below = np.nonzero(acf < floor)[0]
    stop = int(below[0]) if below.size else acf.size
    if stop < 2:
        raise DegenerateDataError("autocorrelation drops below the fit floor at lag 1")
    lags = np.arange(1, stop) * dt
    logs = np.log(acf[1:stop])
    slope = float(np.dot(lags, logs) / np.dot(lags, lags))
    if slope >= 0:
        raise DegenerateDataError("autocorrelation does not decay")
    return -1.0 / slope


@dataclass(frozen=True)
class TailRow:
    x_level: float
    p_level: float
    sigma_obtained: float
    sigma_ideal: float
    e_sigma: float
    count: int
    expected_count: float
    reliable: bool


def sigma_ideal(p_level: float) -> float:
    """Deviate at which a peak-normalized Gaussian has height ``p_level``."""
    if not 0.0 < p_level <= 1.0:
        raise ValueError(f"p_level={p_level} must be in (0, 1]")
    return math.sqrt(2.0 * math.log(1.0 / p_level))


def _expected_in(lo, hi, m):
    return m * 0.5 * (special.erfc(lo / math.sqrt(2.0)) - special.erfc(hi / math.sqrt(2.0)))


def tail_error(xs, levels=None, bins: int = RMSE_BINS, span: float = SPAN) -> list[TailRow]:
    """Tail error ``e_sigma = sigma_obtained - sqrt(2 ln(1/P))`` per level.

    The histogram (``bins`` over ``[-span, span]``) is scaled so its tallest
    bin is 1. Without ``levels`` every bin center is reported; with levels,
    each ``+-level`` is measured in a window of one bin width centred on it.
    Rows whose expected standard-normal count is below 10 are flagged
    unreliable.
    """
    xs = np.asarray(xs, dtype=np.float64)
    m = xs.size
    if m == 0:
        raise DegenerateDataError("no samples")
    counts, centers, width = _histogram(xs, bins, span)
    peak = counts.max()
    if peak == 0:
        raise DegenerateDataError("no samples inside the histogram range")
    if levels is None:
        windows = [(c, int(n)) for c, n in zip(centers, counts)]
    else:
        sorted_xs = np.sort(xs)
        windows = []
        for level in levels:
            for c in (-abs(level), abs(level)) if level != 0 else (0.0,):
                lo, hi = c - width / 2, c + width / 2
                n = int(np.searchsorted(sorted_xs, hi, "left") - np.searchsorted(sorted_xs, lo, "left"))
                windows.append((float(c), n))
    return tail_error_from_histogram([c for c, _ in windows], [n for _, n in windows],
                                     n_samples=m, width=width, peak=peak)


def tail_error_from_histogram(centers, heights, n_samples: int | None = None,
                              width: float | None = None, peak: float | None = None) -> list[TailRow]:
    """Tail rows for an already binned histogram (counts or pdf heights).

    Heights are divided by ``peak`` (default: their maximum). With
    ``n_samples`` and ``width`` the expected standard-normal count per bin
    decides reliability; without them every non-empty row is reliable.
    """
    heights = [float(v) for v in heights]
    top = max(heights) if peak is None else float(peak)
    if not top > 0:
        raise DegenerateDataError("histogram is empty")
    rows = []
    for c, n in zip(centers, heights):
        c = float(c)
        if n_samples is not None and width is not None:
            expected = float(_expected_in(c - width / 2, c + width / 2, n_samples))
        else:
            expected = math.inf
        p = n / top
        obtained = abs(c)
        if n > 0:
            ideal = sigma_ideal(min(p, 1.0))
            e = obtained - ideal
        else:
            ideal, e = math.inf, math.nan
        count = int(n) if float(n).is_integer() else n
        rows.append(TailRow(c, float(p), obtained, ideal, e, count, expected,
                            n > 0 and expected >= MIN_TAIL_COUNT))
    return rows


def fine_tail_levels(lo: float = 0.25, hi: float = SPAN, count: int = 40) -> np.ndarray:
    """Log-spaced deviates for the fine tail grid."""
    return np.geomspace(lo, hi, count)


def max_abs_tail_error(rows, up_to: float, reliable_only: bool = False) -> float:
    vals = [abs(r.e_sigma) for r in rows
            if r.sigma_obtained <= up_to + 1e-12 and (r.reliable or not reliable_only)]
    if any(math.isnan(v) for v in vals):
        return math.inf
    return max(vals) if vals else math.nan


def combine_streams(streams) -> np.ndarray:
    """Element-wise ``sum_j X_j / sqrt(k)`` of ``k`` standardized sequences."""
    arrays = [np.asarray(s, dtype=np.float64) for s in streams]
    if not arrays:
        raise ShapeError("need at least one stream")
    n = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != n:
            raise ShapeError(f"stream lengths differ: {n} vs {a.shape}")
    total = arrays[0].copy()
    for a in arrays[1:]:
        total += a
    return total / math.sqrt(len(arrays))


def independence_scatter(xs) -> tuple[float, np.ndarray]:
    """Pearson correlation of adjacent pairs ``(X_S, X_S+1)`` and the pairs."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size < 3:
        raise DegenerateDataError("need at least 3 samples for adjacent-pair correlation")
    a, b = xs[:-1], xs[1:]
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise DegenerateDataError("series is constant")
    corr = float(np.corrcoef(a, b)[0, 1])
    return corr, np.column_stack((a, b))


def linear_regression(desired, obtained) -> dict:
    """Slope, intercept and R^2 of obtained vs desired."""
    x = np.asarray(desired, dtype=np.float64)
    y = np.asarray(obtained, dtype=np.float64)
    if x.size < 2:
        raise DegenerateDataError("regression needs at least 2 points")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def split_rhat(chains) -> float:
    """Gelman-Rubin potential scale reduction over equal-length chains."""
    arr = np.asarray(chains, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ShapeError("need a (chains, samples) array with at least 2x2 entries")
    n = arr.shape[1]
    means = arr.mean(axis=1)
    w = float(np.mean(arr.var(axis=1, ddof=1)))
    b = n * float(np.var(means, ddof=1))
    if w == 0:
        raise DegenerateDataError("chains have zero variance")
    var_hat = (n - 1) / n * w + b / n
    return math.sqrt(var_hat / w)


@dataclass
class AnalysisReport:
    m_samples: int
    mu_desired: float
    sigma_desired: float
    mu_fit: float
    sigma_fit: float
    mu_fit_curve: float
    sigma_fit_curve: float
    rmse_normalized: float
    lag_autocorr: list
    lag1_scatter_corr: float
    tail_table: list
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tail_table"] = [asdict(r) if isinstance(r, TailRow) else r for r in self.tail_table]
        d["lag_autocorr"] = [float(v) for v in self.lag_autocorr]
        return d


def support_x(spec: GrngSpec) -> tuple[float, float]:
    return ((0.0 - spec.mu) / spec.sigma, (1.0 - spec.mu) / spec.sigma)


def analyze(xs, spec: GrngSpec, max_lag: int = 100, levels=None, meta: dict | None = None) -> AnalysisReport:
    """Full report for a standardized stream of a given spec."""
    xs = np.asarray(xs, dtype=np.float64)
    fit = fit_gaussian(xs, mu=spec.mu, sigma=spec.sigma)
    curve = fit_gaussian(xs, "histogram-least-squares", mu=spec.mu, sigma=spec.sigma,
                         support=support_x(spec))
    lag = min(max_lag, xs.size - 1)
    corr, _ = independence_scatter(xs)
    return AnalysisReport(
        m_samples=int(xs.size),
        mu_desired=spec.mu,
        sigma_desired=spec.sigma,
        mu_fit=fit.mu,
        sigma_fit=fit.sigma,
        mu_fit_curve=curve.mu,
        sigma_fit_curve=curve.sigma,
        rmse_normalized=normalized_rmse(xs, fit),
        lag_autocorr=autocorrelation(xs, lag).tolist(),
        lag1_scatter_corr=corr,
        tail_table=tail_error(xs, levels),
        meta=dict(meta or {}),
    )
