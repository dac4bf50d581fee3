"""Experiment configuration: one flat ``key = value`` file, overridable by flags.

Lists are comma separated, ``none`` (or an empty value) means unset, ``#``
starts a comment. Unknown keys are rejected so that a config file always
describes exactly one reproducible experiment.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .coupling import DEFAULT_TAU_CORR, GrngSpec, Mode
from .errors import ConfigurationError

OUTPUT_DIR_ENV = "PBIT_GRNG_OUTPUT_DIR"
FORMATS = ("binary", "csv")
FIT_METHODS = ("moments", "histogram-least-squares")
PLOT_KINDS = ("svg", "ascii")
_U64_MAX = (1 << 64) - 1


@dataclass
class ExperimentConfig:
    # generator
    n_bits: int = 64
    mu: float = 0.5
    sigma: float = 0.1
    precision: int | None = None
    beta: float = 1.0
    mode: str = Mode.RANDOM_SCAN.value
    tau_corr: float = DEFAULT_TAU_CORR
    sample_spacing: float | None = None
    # run
    samples: int = 100_000
    seed: int = 0
    burn_in: float | None = None
    chains: int = 1
    # output
    output_dir: str | None = None
    output_name: str = "samples"
    formats: list = field(default_factory=lambda: ["binary"])
    plots: list = field(default_factory=list)
    # studies
    mu_list: list = field(default_factory=list)
    sigma_list: list = field(default_factory=list)
    p_list: list = field(default_factory=list)
    sample_sizes: list = field(default_factory=list)
    combine: int = 4
    seeds: list = field(default_factory=list)
    max_lag: int = 100
    fit_method: str = "moments"
    identity_tolerance: float = 1e-12
    flip_couplings: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.samples < 1:
            raise ConfigurationError(f"samples={self.samples} must be >= 1")
        for s in [self.seed, *self.seeds]:
            if not 0 <= s <= _U64_MAX:
                raise ConfigurationError(f"seed={s} must be an unsigned 64-bit integer")
        if self.chains < 1:
            raise ConfigurationError(f"chains={self.chains} must be >= 1")
        if self.combine < 1:
            raise ConfigurationError(f"combine={self.combine} must be >= 1")
        if self.max_lag < 1:
            raise ConfigurationError(f"max_lag={self.max_lag} must be >= 1")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad or not self.formats:
            raise ConfigurationError(f"formats must be a non-empty subset of {FORMATS}, got {self.formats}")
        bad = [p for p in self.plots if p not in PLOT_KINDS]
        if bad:
            raise ConfigurationError(f"plots must be a subset of {PLOT_KINDS}, got {self.plots}")
        if self.fit_method not in FIT_METHODS:
            raise ConfigurationError(f"fit_method must be one of {FIT_METHODS}")
        if any(m < 1 for m in self.sample_sizes):
            raise ConfigurationError("sample_sizes must be positive")
        try:
            Mode(self.mode)
        except ValueError:
            raise ConfigurationError(
                f"mode={self.mode!r} must be one of {[m.value for m in Mode]}"
            ) from None
        self.spec()

    def spec(self, **changes) -> GrngSpec:
        kw = dict(n_bits=self.n_bits, mu=self.mu, sigma=self.sigma, precision=self.precision,
                  beta=self.beta, mode=Mode(self.mode), tau_corr=self.tau_corr,
                  sample_spacing=self.sample_spacing)
        kw.update(changes)
        if kw["precision"] is not None and "n_bits" in changes and "precision" not in changes:
            kw["precision"] = min(kw["precision"], 2 * kw["n_bits"])
        return GrngSpec(**kw)

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_render(getattr(self, f.name))}\n" for f in fields(self))

    def echo_text(self) -> str:
        """``to_text`` without output locations, which never affect results."""
        return "".join(line for line in self.to_text().splitlines(keepends=True)
                       if line.split(" ", 1)[0] not in _LOCATION_KEYS)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_text(cls, text: str, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        values = parse_config_text(text)
        start = dataclasses.asdict(base) if base is not None else {}
        start.update(values)
        return cls(**start)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())


_LOCATION_KEYS = ("output_dir", "output_name")
_LIST_TYPES = {"formats": str, "plots": str, "mu_list": float, "sigma_list": float,
               "p_list": int, "sample_sizes": int, "seeds": int}


def _field_types() -> dict:
    return {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_int(text: str) -> int:
    v = float(text) if any(ch in text for ch in ".eE") and not text.lower().startswith("0x") else None
    if v is not None:
        if v != int(v):
            raise ValueError(f"{text!r} is not an integer")
        return int(v)
    return int(text, 0)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def parse_value(key: str, text: str):
    types = _field_types()
    if key not in types:
        raise ConfigurationError(f"unknown config key {key!r}")
    text = text.strip()
    if key in _LIST_TYPES:
        if text == "" or text.lower() == "none":
            return []
        item = _LIST_TYPES[key]
        conv = _parse_int if item is int else item
        try:
            return [conv(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {exc}") from None
    ftype = types[key]
    optional = "None" in ftype
    if optional and (text == "" or text.lower() == "none"):
        return None
    try:
        if ftype.startswith("int"):
            return _parse_int(text)
        if ftype.startswith("float"):
            return float(text)
        if ftype.startswith("bool"):
            return _parse_bool(text)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {exc}") from None
    return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigurationError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(key, value)
    return out


def _render(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        if not value:
            return "none"
        return ", ".join(_render(v) for v in value)
    return str(value)
