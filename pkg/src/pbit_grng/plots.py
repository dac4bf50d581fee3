"""Static figures: standalone SVG via matplotlib, ASCII when it is missing."""

from __future__ import annotations

import io

import numpy as np

try:
    import matplotlib

    matplotlib.use("Agg")
    from matplotlib.figure import Figure

    HAVE_MPL = True
except ImportError:  # pragma: no cover - optional dependency
    HAVE_MPL = False

# Fixed ids and no timestamp keep the SVG byte-stable across runs.
_SVG_RC = {"svg.hashsalt": "pbit-grng", "svg.fonttype": "none"}


def _svg(fig) -> str:
    buf = io.StringIO()
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def _require_mpl():
    if not HAVE_MPL:
        raise RuntimeError("matplotlib is not installed; use the ASCII plots instead")


def svg_histogram(centers, density, model=None, title="histogram") -> str:
    _require_mpl()
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    width = float(centers[1] - centers[0]) if len(centers) > 1 else 1.0
    ax.bar(centers, density, width=width, color="#9ab", edgecolor="none", label="samples")
    if model is not None:
        ax.plot(centers, model, color="#c33", lw=1.5, label="fit")
    ax.set_xlabel("X")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend()
    return _svg(fig)


def svg_stem(lags, values, bound=None, title="autocorrelation") -> str:
    _require_mpl()
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.vlines(lags, 0, values, color="#246")
    ax.plot(lags, values, "o", ms=3, color="#246")
    if bound is not None:
        ax.axhline(bound, ls="--", color="#888", lw=1)
        ax.axhline(-bound, ls="--", color="#888", lw=1)
    ax.axhline(0, color="black", lw=0.5)
    ax.set_xlabel("lag")
    ax.set_ylabel("A(lag)")
    ax.set_title(title)
    return _svg(fig)


def svg_curves(series: dict, xlabel="", ylabel="", title="", logy=False) -> str:
    """One line per ``label -> (x, y)`` entry."""
    _require_mpl()
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for label, (x, y) in series.items():
        ax.plot(x, y, ".-", label=str(label))
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    return _svg(fig)


def ascii_bars(labels, values, width: int = 60, fmt="{:+.2f}") -> str:
    values = np.asarray(values, dtype=np.float64)
    top = float(np.max(np.abs(values))) if values.size else 0.0
    lines = []
    for lab, v in zip(labels, values):
        n = int(round(width * abs(v) / top)) if top > 0 else 0
        lines.append(f"{fmt.format(lab):>8} |{'#' * n}")
    return "\n".join(lines) + "\n"


def ascii_histogram(centers, density, width: int = 60, every: int = 2) -> str:
    idx = np.arange(0, len(centers), every)
    return ascii_bars(np.asarray(centers)[idx], np.asarray(density)[idx], width)
