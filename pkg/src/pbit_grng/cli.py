"""pbit-grng: Gaussian samples from a p-bit Ising network, with exact checks and statistics.

Every subcommand resolves one :class:`ExperimentConfig` (defaults, then the
``--config`` file, then flags), runs, and writes its outputs under the output
directory (``--output-dir``, else ``$PBIT_GRNG_OUTPUT_DIR``, else the working
directory). Each output embeds the resolved config: a trailer in binary
sample files, ``#`` lines in CSV and text, a ``config`` member in JSON and an
XML comment in SVG.

Exit codes: 0 success, 1 I/O or other failure, 2 usage/configuration,
3 malformed file, 4 capacity, 5 tolerance violated, 6 degenerate data,
7 shape mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import oracle, stats
from .config import ExperimentConfig, parse_config_text, parse_value
from .coupling import GrngSpec, Mode, couplings_for, dump_couplings
from .errors import CapacityError, ConfigurationError, GrngError, ToleranceError
from .formats import MAGIC, SampleFile, parse_csv, read_binary, write_binary, write_csv, write_table_csv
from .rng import derive_seeds
from .sampler import SampleStream, StreamMeta, generate, generate_chains

log = logging.getLogger("pbit_grng")

EXIT_OK = 0
EXIT_FAILURE = 1
COMMANDS = ("generate", "analyze", "oracle", "sweep", "truncation-study", "tail", "inspect", "autocorr")


# ---------------------------------------------------------------- output helpers

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Mode):
        return obj.value
    return obj


class Outputs:
    """Writes files for one command run, all stamped with the config echo."""

    def __init__(self, config: ExperimentConfig, echo: str | None = None):
        self.config = config
        self.echo = config.echo_text() if echo is None else echo
        self.dir = config.resolved_output_dir()
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        self.written.append(str(p))
        return p

    def json(self, name: str, payload: dict) -> Path:
        body = {"config": parse_config_text(self.echo), "config_text": self.echo, **payload}
        p = self.path(name)
        p.write_text(json.dumps(_clean(body), indent=2, sort_keys=True) + "\n")
        return p

    def table(self, name: str, header, rows) -> Path:
        p = self.path(name)
        write_table_csv(p, header, rows, self.echo)
        return p

    def text(self, name: str, body: str) -> Path:
        p = self.path(name)
        comment = "".join(f"# {line}\n" for line in self.echo.splitlines())
        p.write_text(comment + body)
        return p

    def svg(self, name: str, body: str) -> Path:
        safe = self.echo.replace("--", "- -")
        head, sep, rest = body.partition("\n")
        p = self.path(name)
        p.write_text(f"{head}{sep}<!--\n{safe}-->\n{rest}")
        return p


def _want_plots(config: ExperimentConfig):
    from . import plots

    svg = "svg" in config.plots and plots.HAVE_MPL
    if "svg" in config.plots and not plots.HAVE_MPL:
        log.warning("matplotlib not installed; writing ASCII plots instead of SVG")
    ascii_ = "ascii" in config.plots or ("svg" in config.plots and not plots.HAVE_MPL)
    return plots, svg, ascii_


# ---------------------------------------------------------------- sample I/O

def _looks_like_csv(data: bytes) -> bool:
    if data[:4] == MAGIC:
        return False
    head = data.lstrip()[:5]
    return head.startswith(b"#") or head == b"index"


def load_samples(path, config: ExperimentConfig | None = None) -> tuple[SampleStream, ExperimentConfig]:
    """Read a binary or CSV sample file and the config that produced it.

    The embedded config wins when present; otherwise the binary header (or,
    for a bare CSV, ``config``) supplies the generator parameters.
    """
    path = Path(path)
    data = path.read_bytes()
    base = config or ExperimentConfig()
    if not _looks_like_csv(data):
        sf: SampleFile = read_binary(path)
        if sf.config_text is not None:
            cfg = ExperimentConfig.from_text(sf.config_text)
            header = (sf.n_bits, sf.mu, sf.sigma, sf.mode.value, sf.seed)
            echoed = (cfg.n_bits, cfg.mu, cfg.sigma, cfg.mode, cfg.seed)
            if header != echoed:
                raise ConfigurationError(f"sample header {header} disagrees with embedded config {echoed}")
        else:
            cfg = base.replace(n_bits=sf.n_bits, mu=sf.mu, sigma=sf.sigma, mode=sf.mode.value,
                               seed=sf.seed, precision=None)
        cfg = cfg.replace(samples=int(sf.values.shape[0]))
        values = sf.values
    else:
        g, _, text = parse_csv(data.decode("utf-8"))
        cfg = ExperimentConfig.from_text(text) if text else base
        if g.size == 0:
            raise ConfigurationError(f"{path} holds no samples")
        cfg = cfg.replace(samples=int(g.size))
        values = g
    spec = cfg.spec()
    meta = StreamMeta(spec=spec, seed=cfg.seed, mode=spec.mode, spacing=spec.spacing,
                      burn_in=cfg.burn_in if cfg.burn_in is not None else math.nan,
                      count=int(values.shape[0]))
    return SampleStream(values, meta), cfg


def _analysis_overrides(config: ExperimentConfig, explicit: set) -> dict:
    keys = ("max_lag", "fit_method", "plots")
    return {k: getattr(config, k) for k in keys if k in explicit}


# ---------------------------------------------------------------- generation

def _generate(config: ExperimentConfig, spec: GrngSpec | None = None, seed: int | None = None,
              samples: int | None = None) -> SampleStream:
    spec = config.spec() if spec is None else spec
    seed = config.seed if seed is None else seed
    samples = config.samples if samples is None else samples
    if config.chains == 1:
        return generate(spec, samples, seed, config.burn_in)
    if samples % config.chains:
        raise ConfigurationError(f"samples={samples} is not divisible by chains={config.chains}")
    return generate_chains(spec, samples // config.chains, seed, config.chains, config.burn_in)


def cmd_generate(config: ExperimentConfig) -> dict:
    out = Outputs(config)
    t0 = time.perf_counter()
    stream = _generate(config)
    elapsed = time.perf_counter() - t0
    files = {}
    if "binary" in config.formats:
        p = out.path(f"{config.output_name}.pgrn")
        write_binary(p, stream, out.echo)
        files["binary"] = str(p)
    if "csv" in config.formats:
        p = out.path(f"{config.output_name}.csv")
        write_csv(p, stream, out.echo)
        files["csv"] = str(p)
    return {"count": len(stream), "seconds": elapsed, "files": files}


# ---------------------------------------------------------------- analysis

def _histogram_rows(xs, fit):
    counts, centers, width = stats._histogram(xs)
    density = counts / (xs.size * width)
    return centers, density, fit.pdf_x(centers), counts


def _tail_rows(rows):
    return [(r.x_level, r.p_level, r.sigma_obtained, r.sigma_ideal, r.e_sigma, r.count,
             r.expected_count, r.reliable) for r in rows]


def _tail_summary(rows) -> dict:
    """Worst |e_sigma| up to deviates 3, 4, 5; an empty bin in range counts as inf."""
    summary = {}
    for d in (3, 4, 5):
        summary[f"max_abs_e_sigma_to_{d}"] = stats.max_abs_tail_error(rows, float(d))
        summary[f"max_abs_e_sigma_to_{d}_reliable"] = stats.max_abs_tail_error(rows, float(d), True)
    reliable = [r.sigma_obtained for r in rows if r.reliable]
    summary["reliable_up_to"] = max(reliable) if reliable else None
    return summary


_TAIL_HEADER = ("x_level", "p_level", "sigma_obtained", "sigma_ideal", "e_sigma", "count",
                "expected_count", "reliable")


def analysis_payload(stream: SampleStream, config: ExperimentConfig) -> tuple[dict, dict]:
    """Report dict plus the per-figure arrays used for CSVs and plots."""
    spec = stream.meta.spec
    xs = stats.g_to_x(stream.values, spec)
    max_lag = min(config.max_lag, xs.size - 1)
    report = stats.analyze(xs, spec, max_lag=max_lag, meta=stream.meta.to_dict())
    fit = stats.fit_gaussian(xs, mu=spec.mu, sigma=spec.sigma)
    fine = stats.tail_error(xs, stats.fine_tail_levels())
    bound = 3.0 / math.sqrt(xs.size)
    lags = np.asarray(report.lag_autocorr[1:])
    payload = {
        "analysis": report.to_dict(),
        "fit_method": config.fit_method,
        "mu_obtained": report.mu_fit if config.fit_method == "moments" else report.mu_fit_curve,
        "sigma_obtained": report.sigma_fit if config.fit_method == "moments" else report.sigma_fit_curve,
        "independence": {
            "bound": bound,
            "lag1_scatter_within": abs(report.lag1_scatter_corr) < bound,
            "max_abs_autocorr": float(np.max(np.abs(lags))) if lags.size else 0.0,
            "autocorr_within": bool(np.all(np.abs(lags) < bound)),
        },
        "tail_summary": _tail_summary(report.tail_table),
        "tail_fine": [asdict(r) for r in fine],
    }
    if spec.n_bits <= oracle.MAX_ENUM_BITS:
        counts = oracle.empirical_counts(stream.values, spec.n_bits)
        payload["oracle_comparison"] = oracle.compare(counts, oracle.exact_for(spec)).to_dict()
    arrays = {"hist": _histogram_rows(xs, fit), "acf": report.lag_autocorr,
              "tail": report.tail_table, "fine": fine, "bound": bound}
    return payload, arrays


def cmd_analyze(path, config: ExperimentConfig, explicit: set | None = None) -> dict:
    stream, cfg = load_samples(path, config)
    cfg = cfg.replace(**_analysis_overrides(config, explicit or set()),
                      output_dir=config.output_dir)
    out = Outputs(cfg)
    stem = Path(path).stem
    payload, arrays = analysis_payload(stream, cfg)
    out.json(f"{stem}_report.json", payload)
    centers, density, model, counts = arrays["hist"]
    out.table(f"{stem}_histogram.csv", ("x_center", "count", "density", "fit_pdf"),
              zip(centers, counts, density, model))
    acf = arrays["acf"]
    out.table(f"{stem}_autocorr.csv", ("lag", "autocorr"), enumerate(acf))
    out.table(f"{stem}_tail.csv", _TAIL_HEADER, _tail_rows(arrays["tail"]))
    out.table(f"{stem}_tail_fine.csv", _TAIL_HEADER, _tail_rows(arrays["fine"]))
    plots, svg, ascii_ = _want_plots(cfg)
    if svg:
        out.svg(f"{stem}_histogram.svg", plots.svg_histogram(centers, density, model, "histogram of X"))
        out.svg(f"{stem}_autocorr.svg", plots.svg_stem(np.arange(1, len(acf)), acf[1:], arrays["bound"]))
        good = [r for r in arrays["tail"] if r.count > 0 and r.x_level > 0]
        out.svg(f"{stem}_tail.svg", plots.svg_curves(
            {"e_sigma": ([r.x_level for r in good], [r.e_sigma for r in good])},
            "deviate", "e_sigma", "tail error"))
    if ascii_:
        out.text(f"{stem}_histogram.txt", plots.ascii_histogram(centers, density))
    summary = {k: payload[k] for k in ("mu_obtained", "sigma_obtained", "independence", "tail_summary")}
    summary["rmse_normalized"] = payload["analysis"]["rmse_normalized"]
    return {"summary": summary, "files": out.written}


def cmd_oracle(config: ExperimentConfig, stream_path=None) -> dict:
    spec = config.spec()
    if spec.n_bits > oracle.MAX_ENUM_BITS:
        raise CapacityError(f"n_bits={spec.n_bits} exceeds the exact-enumeration limit "
                            f"of {oracle.MAX_ENUM_BITS}")
    c = couplings_for(spec)
    if config.flip_couplings:
        log.warning("debug: coupling and bias signs flipped")
        c = c.flipped()
    exact = oracle.enumerate_states(c, spec)
    target = oracle.target_pmf(spec)
    cmp = oracle.compare(exact.pmf, target)
    residual = oracle.identity_residual(c, spec)
    payload = {
        "identity": cmp.to_dict(),
        "identity_tolerance": config.identity_tolerance,
        "identity_ok": cmp.max_rel_diff < config.identity_tolerance,
        "residual_spread": float(np.ptp(residual)),
        "self_energy_constant": oracle.self_energy_constant(c),
        "z": exact.z,
        "z_prime": exact.z_prime,
    }
    rows = [exact.pmf, target.pmf]
    header = ["G", "exact_pmf", "target_pmf"]
    if stream_path is not None:
        stream, _ = load_samples(stream_path, config)
        if stream.meta.spec.n_bits != spec.n_bits:
            raise ConfigurationError("stream n_bits does not match the oracle config")
        counts = oracle.empirical_counts(stream.values, spec.n_bits)
        payload["empirical"] = oracle.compare(counts, exact).to_dict()
        rows.append(counts / counts.sum())
        header.append("empirical_pmf")
    out = Outputs(config)
    out.json(f"{config.output_name}_oracle.json", payload)
    out.table(f"{config.output_name}_oracle_pmf.csv", header,
              zip(range(exact.pmf.shape[0]), *rows))
    result = {"summary": {k: payload[k] for k in ("identity", "identity_ok", "residual_spread")},
              "files": out.written}
    if "empirical" in payload:
        result["summary"]["empirical"] = payload["empirical"]
    if not payload["identity_ok"]:
        raise ToleranceError(
            f"Boltzmann law differs from the target Gaussian: max relative diff "
            f"{cmp.max_rel_diff:.3e} >= {config.identity_tolerance:.1e}", result)
    return result


def _sweep_points(config: ExperimentConfig):
    points = []
    for s in config.sigma_list:
        points.append(("sigma", config.mu, s))
    for m in config.mu_list:
        points.append(("mu", m, config.sigma))
    if not points:
        raise ConfigurationError("sweep needs mu_list and/or sigma_list")
    return points


def cmd_sweep(config: ExperimentConfig) -> dict:
    points = _sweep_points(config)
    seeds = derive_seeds(config.seed, len(points))
    rows, by_axis = [], {"sigma": ([], []), "mu": ([], [])}
    for (axis, mu, sigma), seed in zip(points, seeds):
        spec = config.spec(mu=mu, sigma=sigma)
        stream = _generate(config, spec, seed)
        xs = stats.g_to_x(stream.values, spec)
        mom = stats.fit_gaussian(xs, mu=mu, sigma=sigma)
        cur = stats.fit_gaussian(xs, "histogram-least-squares", mu=mu, sigma=sigma,
                                 support=stats.support_x(spec))
        rhat = math.nan
        if config.chains > 1:
            rhat = stats.split_rhat(xs.reshape(config.chains, -1))
        use = mom if config.fit_method == "moments" else cur
        desired, obtained = (sigma, use.sigma) if axis == "sigma" else (mu, use.mu)
        by_axis[axis][0].append(desired)
        by_axis[axis][1].append(obtained)
        rows.append((axis, mu, sigma, mom.mu, mom.sigma, cur.mu, cur.sigma, obtained, rhat,
                     len(stream), seed))
        log.info("sweep %s mu=%g sigma=%g -> %g", axis, mu, sigma, obtained)
    regression = {}
    for axis, (d, o) in by_axis.items():
        if len(d) >= 2:
            regression[axis] = stats.linear_regression(d, o)
        elif d:
            regression[axis] = None
    out = Outputs(config)
    header = ("axis", "mu_desired", "sigma_desired", "mu_moments", "sigma_moments", "mu_curve",
              "sigma_curve", "obtained", "rhat", "count", "seed")
    out.table(f"{config.output_name}_sweep.csv", header, rows)
    out.json(f"{config.output_name}_sweep.json", {
        "fit_method": config.fit_method,
        "rows": [dict(zip(header, r)) for r in rows],
        "regression": regression,
    })
    plots, svg, _ = _want_plots(config)
    if svg:
        series = {a: v for a, v in by_axis.items() if v[0]}
        out.svg(f"{config.output_name}_sweep.svg",
                plots.svg_curves(series, "desired", "obtained", "desired vs obtained"))
    return {"summary": {"regression": regression, "points": len(rows)}, "files": out.written}


def cmd_truncation_study(config: ExperimentConfig) -> dict:
    if not config.p_list:
        raise ConfigurationError("truncation-study needs p_list")
    sizes = sorted(set(config.sample_sizes or [config.samples]))
    if sizes[-1] > config.samples:
        raise ConfigurationError("sample_sizes may not exceed samples")
    rows, tail_rows, curves = [], [], {}
    edges = np.linspace(-stats.SPAN, stats.SPAN, stats.RMSE_BINS + 1)
    for p in config.p_list:
        spec = config.spec(precision=p)
        # Same seed for every p: differences between rows come from truncation.
        stream = _generate(config, spec)
        xs = stats.g_to_x(stream.values, spec)
        exact_rmse = math.nan
        if p <= spec.n_bits and p <= oracle.MAX_ENUM_BITS:
            law = oracle.truncated_block_distribution(spec)
            loc, scale = law.moments_x()
            width = edges[1] - edges[0]
            centers = 0.5 * (edges[:-1] + edges[1:])
            dens = law.bin_probabilities(edges) / width
            model = stats.gaussian_pdf(centers, loc, scale)
            peak = 1.0 / (scale * math.sqrt(2.0 * math.pi))
            exact_rmse = float(np.sqrt(np.mean((dens - model) ** 2)) / peak)
        for m in sizes:
            part = xs[:m]
            fit = stats.fit_gaussian(part)
            rmse = stats.normalized_rmse(part, fit)
            curves.setdefault(m, ([], []))
            curves[m][0].append(p)
            curves[m][1].append(rmse)
            tails = stats.tail_error(part)
            rows.append((p, m, rmse, exact_rmse, fit.x_loc, fit.x_scale,
                         stats.max_abs_tail_error(tails, 3.0, reliable_only=True)))
        for r in stats.tail_error(xs):
            tail_rows.append((p, *_tail_rows([r])[0]))
        log.info("truncation p=%d rmse=%g", p, rows[-1][2])
    out = Outputs(config)
    header = ("precision", "samples", "rmse_normalized", "rmse_exact_limit", "x_mean", "x_std",
              "max_abs_e_sigma_to_3")
    out.table(f"{config.output_name}_truncation.csv", header, rows)
    out.table(f"{config.output_name}_truncation_tail.csv", ("precision", *_TAIL_HEADER), tail_rows)
    # Saturation check: p=10 against the most precise setting studied.
    ratio = None
    by_p = {r[0]: r[2] for r in rows if r[1] == sizes[-1]}
    top = max(by_p)
    if 10 in by_p and top > 10:
        ratio = by_p[10] / by_p[top]
    out.json(f"{config.output_name}_truncation.json", {
        "rows": [dict(zip(header, r)) for r in rows],
        "rmse_ratio_p10_to_max_p": ratio,
    })
    plots, svg, _ = _want_plots(config)
    if svg:
        out.svg(f"{config.output_name}_truncation.svg", plots.svg_curves(
            {f"M={m}": v for m, v in curves.items()}, "precision p", "normalized RMSE",
            "RMSE vs precision", logy=True))
    return {"summary": {"rmse": by_p, "rmse_ratio_p10_to_max_p": ratio}, "files": out.written}


def tail_seeds(config: ExperimentConfig) -> list[int]:
    k = config.combine
    if config.seeds:
        if len(config.seeds) != k:
            raise ConfigurationError(f"combine={k} needs {k} seeds, got {len(config.seeds)}")
        if len(set(config.seeds)) != k:
            raise ConfigurationError("tail generators must use distinct seeds")
        return list(config.seeds)
    return derive_seeds(config.seed, k)


def cmd_tail(config: ExperimentConfig) -> dict:
    """``samples`` counts all generated readouts; each generator makes samples/k."""
    seeds = tail_seeds(config)
    k = len(seeds)
    if config.samples % k:
        raise ConfigurationError(f"samples={config.samples} is not divisible by combine={k}")
    per = config.samples // k
    spec = config.spec()
    xs = [stats.g_to_x(_generate(config, spec, s, per).values, spec) for s in seeds]
    combined = stats.combine_streams(xs)
    rows = stats.tail_error(combined)
    fine = stats.tail_error(combined, stats.fine_tail_levels())
    summary = _tail_summary(rows)
    out = Outputs(config)
    out.table(f"{config.output_name}_tail.csv", _TAIL_HEADER, _tail_rows(rows))
    out.table(f"{config.output_name}_tail_fine.csv", _TAIL_HEADER, _tail_rows(fine))
    out.json(f"{config.output_name}_tail.json", {
        "seeds": seeds, "per_generator": per, "combined_samples": int(combined.size),
        "summary": summary, "tail": [asdict(r) for r in rows],
    })
    plots, svg, ascii_ = _want_plots(config)
    good = [r for r in rows if r.count > 0 and r.x_level > 0]
    if svg:
        out.svg(f"{config.output_name}_tail.svg", plots.svg_curves(
            {"e_sigma": ([r.x_level for r in good], [r.e_sigma for r in good])},
            "deviate", "e_sigma", f"tail error, {k} combined"))
    if ascii_:
        out.text(f"{config.output_name}_tail.txt",
                 plots.ascii_bars([r.x_level for r in good], [r.e_sigma for r in good]))
    return {"summary": summary, "files": out.written}


def cmd_inspect(config: ExperimentConfig) -> dict:
    c = couplings_for(config.spec())
    out = Outputs(config)
    text = dump_couplings(c)
    out.text(f"{config.output_name}_couplings.txt", text)
    return {"summary": {"n_bits": c.n_bits, "stored_couplings": c.n_stored(),
                        "j_keep_threshold": c.j_keep_threshold,
                        "h_keep_threshold": c.h_keep_threshold},
            "dump": text, "files": out.written}


def cmd_autocorr(config: ExperimentConfig, stream_path=None, explicit: set | None = None) -> dict:
    if stream_path is not None:
        stream, cfg = load_samples(stream_path, config)
        cfg = cfg.replace(**_analysis_overrides(config, explicit or set()),
                          output_dir=config.output_dir, output_name=config.output_name)
    else:
        cfg = config
        stream = _generate(cfg)
    spec = stream.meta.spec
    xs = stats.g_to_x(stream.values, spec)
    max_lag = min(cfg.max_lag, xs.size - 1)
    acf = stats.autocorrelation(xs, max_lag)
    corr, _ = stats.independence_scatter(xs)
    bound = 3.0 / math.sqrt(xs.size)
    dt = spec.spacing
    unit = "sweeps" if spec.mode.is_gibbs else "seconds"
    try:
        tau = stats.fit_correlation_time(acf, dt)
    except GrngError:
        tau = None
    payload = {
        "lag1_scatter_corr": corr,
        "bound": bound,
        "lag1_within": abs(corr) < bound,
        "autocorr_within": bool(np.all(np.abs(acf[1:]) < bound)),
        "max_abs_autocorr": float(np.max(np.abs(acf[1:]))),
        "correlation_time": tau,
        "lag_unit": f"{dt} {unit}",
        "autocorr": acf,
    }
    out = Outputs(cfg)
    out.table(f"{cfg.output_name}_autocorr.csv", ("lag", "autocorr"), enumerate(acf))
    out.json(f"{cfg.output_name}_autocorr.json", payload)
    plots, svg, ascii_ = _want_plots(cfg)
    if svg:
        out.svg(f"{cfg.output_name}_autocorr.svg", plots.svg_stem(np.arange(1, acf.size), acf[1:], bound))
    if ascii_:
        out.text(f"{cfg.output_name}_autocorr.txt", plots.ascii_bars(range(1, acf.size), acf[1:], fmt="{:d}"))
    summary = {k: v for k, v in payload.items() if k != "autocorr"}
    return {"summary": summary, "files": out.written}


# ---------------------------------------------------------------- argument parsing

def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _config_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("experiment config (flags override --config)")
    g.add_argument("--config", dest="config_file", metavar="FILE", default=argparse.SUPPRESS,
                   help="key = value config file")
    for f in fields(ExperimentConfig):
        if f.name == "flip_couplings":
            g.add_argument(_flag(f.name), "--debug-flip-couplings", dest=f.name, action="store_const",
                           const="true", default=argparse.SUPPRESS,
                           help="debug: negate all couplings and biases (oracle)")
            continue
        g.add_argument(_flag(f.name), dest=f.name, metavar="VALUE", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _config_flags(common)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="pbit-grng", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="generate a sample stream")
    p = sub.add_parser("analyze", parents=[common], help="fit, RMSE, autocorrelation and tails of a sample file")
    p.add_argument("input", help="binary (.pgrn) or CSV sample file")
    p = sub.add_parser("oracle", parents=[common], help="exact enumeration vs target Gaussian (n_bits <= 20)")
    p.add_argument("--stream", help="also compare this sample file against the exact law")
    sub.add_parser("sweep", parents=[common], help="desired vs obtained over mu_list / sigma_list")
    sub.add_parser("truncation-study", parents=[common], help="RMSE and tails over p_list")
    sub.add_parser("tail", parents=[common], help="tail error of k combined generators")
    sub.add_parser("inspect", parents=[common], help="dump the coupling set")
    p = sub.add_parser("autocorr", parents=[common], help="autocorrelation of a stream")
    p.add_argument("--stream", help="sample file (default: generate from the config)")
    return parser


def resolve_config(ns: argparse.Namespace) -> tuple[ExperimentConfig, set]:
    names = {f.name for f in fields(ExperimentConfig)}
    explicit = {k for k in vars(ns) if k in names}
    base = ExperimentConfig()
    cfg_file = getattr(ns, "config_file", None)
    if cfg_file is not None:
        try:
            text = Path(cfg_file).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}") from None
        base = ExperimentConfig.from_text(text)
    overrides = {k: parse_value(k, getattr(ns, k)) for k in explicit}
    return base.replace(**overrides), explicit


def run(argv=None) -> tuple[int, dict | None]:
    parser = build_parser()
    ns = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(getattr(ns, "verbose", 0), logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    config, explicit = resolve_config(ns)
    cmd = ns.command
    if cmd == "generate":
        return EXIT_OK, cmd_generate(config)
    if cmd == "analyze":
        return EXIT_OK, cmd_analyze(ns.input, config, explicit)
    if cmd == "oracle":
        return EXIT_OK, cmd_oracle(config, ns.stream)
    if cmd == "sweep":
        return EXIT_OK, cmd_sweep(config)
    if cmd == "truncation-study":
        return EXIT_OK, cmd_truncation_study(config)
    if cmd == "tail":
        return EXIT_OK, cmd_tail(config)
    if cmd == "inspect":
        return EXIT_OK, cmd_inspect(config)
    return EXIT_OK, cmd_autocorr(config, ns.stream, explicit)


def _print(result: dict | None) -> None:
    if result is None:
        return
    if "dump" in result:
        sys.stdout.write(result["dump"])
        return
    print(json.dumps(_clean({k: v for k, v in result.items()}), indent=2, sort_keys=True))


def main(argv=None) -> int:
    try:
        code, result = run(argv)
    except ToleranceError as exc:
        if len(exc.args) > 1:
            _print(exc.args[1])
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return exc.exit_code
    except GrngError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _print(result)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
