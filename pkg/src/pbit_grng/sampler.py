"""Network state, Gibbs and continuous-time dynamics, and stream generation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .coupling import CouplingSet, GrngSpec, Mode, couplings_for
from .errors import ConfigurationError
from .rng import derive_seeds, next_u64, seed_state

DEFAULT_BURN_IN_SWEEPS = 100
DEFAULT_BURN_IN_TAUS = 50.0

_ORDERS = {"fixed": kernels.ORDER_SEQUENTIAL, "random-scan": kernels.ORDER_RANDOM_SCAN}


class FieldTable(NamedTuple):
    """Per-bit arrays consumed by the kernels (see :mod:`pbit_grng.kernels`)."""

    coef: np.ndarray
    h: np.ndarray
    keep_mask: np.ndarray
    offset: np.ndarray
    self_d: np.ndarray
    bit: np.ndarray
    clear: np.ndarray

    @property
    def field_args(self):
        return self[:6]


def field_table(c: CouplingSet) -> FieldTable:
    n = c.n_bits
    full = (1 << n) - 1
    coef = np.empty(n)
    keep_mask = np.empty(n, dtype=np.uint64)
    offset = np.empty(n)
    self_d = np.zeros(n)
    for i in range(n):
        k = c.row_start(i)
        coef[i] = c.jA[i] * c.jb_scale
        keep_mask[i] = full ^ ((1 << k) - 1)
        offset[i] = float((1 << n) - (1 << k))
        if i >= k:
            self_d[i] = math.ldexp(1.0, i)
    bit = np.array([1 << i for i in range(n)], dtype=np.uint64)
    clear = np.array([full ^ (1 << i) for i in range(n)], dtype=np.uint64)
    return FieldTable(coef, np.array(c.h), keep_mask, offset, self_d, bit, clear)


def _call(kernel, *args):
    # The interpreted fallback does uint64 arithmetic on numpy scalars, which
    # warns on the (intended) wraparound.
    with np.errstate(over="ignore"):
        return kernel(*args)


def readout(spins) -> int:
    """Exact ``G = sum_i 2^i (s_i + 1)/2`` for a bipolar spin vector."""
    g = 0
    for i, s in enumerate(spins):
        if s == 1:
            g |= 1 << i
        elif s != -1:
            raise ValueError(f"spin {i} is {s}, expected +1 or -1")
    return g


def spins_of(g: int, n_bits: int) -> np.ndarray:
    g = int(g)
    return np.array([1 if (g >> i) & 1 else -1 for i in range(n_bits)], dtype=np.int8)


@dataclass
class NetworkState:
    """Mutable chain state. ``g`` is canonical; ``s`` is derived from it."""

    n_bits: int
    g: int
    rng_state: int
    seed: int | None = None
    t_sim: float = 0.0

    def __post_init__(self):
        self.g = int(self.g)
        if not 0 <= self.g <= (1 << self.n_bits) - 1:
            raise ConfigurationError(f"readout {self.g} does not fit in {self.n_bits} bits")
        self.rng_state = int(self.rng_state)

    @property
    def s(self) -> np.ndarray:
        return spins_of(self.g, self.n_bits)

    @classmethod
    def random(cls, n_bits: int, seed: int) -> "NetworkState":
        """Uniformly random spins; consumes one draw from the seeded generator."""
        with np.errstate(over="ignore"):
            rng, word = next_u64(seed_state(seed))
        g = int(word) & ((1 << n_bits) - 1)
        return cls(n_bits=n_bits, g=g, rng_state=int(rng), seed=seed)

    @classmethod
    def from_spins(cls, spins, seed: int = 0) -> "NetworkState":
        return cls(n_bits=len(spins), g=readout(spins), rng_state=int(seed_state(seed)), seed=seed)

    def copy(self) -> "NetworkState":
        return NetworkState(**asdict(self))


def local_field(state: NetworkState, c: CouplingSet, i: int) -> float:
    """Input ``I_i = sum_{j != i, kept} J_ij s_j + h_i`` in O(1)."""
    if not 0 <= i < c.n_bits:
        raise IndexError(f"p-bit index {i} out of range for n_bits={c.n_bits}")
    t = field_table(c)
    return float(_call(kernels.local_field, np.uint64(state.g), i, *t.field_args))


def all_local_fields(state: NetworkState, c: CouplingSet, table: FieldTable | None = None) -> np.ndarray:
    t = table if table is not None else field_table(c)
    return _call(kernels.all_fields, np.uint64(state.g), *t.field_args, np.empty(c.n_bits))


def flip_probability(field_value: float) -> float:
    """``P(s_i = +1) = (1 + tanh I)/2`` with the argument clamped to +-30."""
    return float(kernels.prob_up.py_func(float(field_value)))


def gibbs_update(state: NetworkState, c: CouplingSet, i: int,
                 table: FieldTable | None = None) -> NetworkState:
    """Resample p-bit ``i`` from its conditional; uses exactly one uniform."""
    if not 0 <= i < c.n_bits:
        raise IndexError(f"p-bit index {i} out of range for n_bits={c.n_bits}")
    t = table if table is not None else field_table(c)
    g, rng = _call(kernels.gibbs_update, np.uint64(state.g), np.uint64(state.rng_state), i, *t)
    state.g, state.rng_state = int(g), int(rng)
    return state


def gibbs_sweep(state: NetworkState, c: CouplingSet, order: str = "fixed",
                n_sweeps: int = 1, table: FieldTable | None = None) -> NetworkState:
    """``n_sweeps`` full sweeps, in index order or a fresh random permutation each."""
    try:
        code = _ORDERS[order]
    except KeyError:
        raise ConfigurationError(f"order must be one of {sorted(_ORDERS)}, got {order!r}") from None
    t = table if table is not None else field_table(c)
    g, rng = _call(kernels.gibbs_sweeps, np.uint64(state.g), np.uint64(state.rng_state),
                   code, int(n_sweeps), *t)
    state.g, state.rng_state = int(g), int(rng)
    return state


def autonomous_run(state: NetworkState, c: CouplingSet, duration: float, clock_rate: float,
                   table: FieldTable | None = None) -> NetworkState:
    """Continuous-time dynamics: each p-bit resamples at rate ``clock_rate``.

    ``duration`` and ``1/clock_rate`` share a time unit (seconds throughout
    this package).
    """
    if duration < 0:
        raise ConfigurationError(f"duration={duration} must be >= 0")
    if not clock_rate > 0:
        raise ConfigurationError(f"clock_rate={clock_rate} must be > 0")
    if duration == 0:
        return state
    t = table if table is not None else field_table(c)
    scaled = duration * clock_rate * c.n_bits
    g, rng = _call(kernels.ct_run, np.uint64(state.g), np.uint64(state.rng_state), scaled, *t)
    state.g, state.rng_state = int(g), int(rng)
    state.t_sim += duration
    return state


@dataclass
class StreamMeta:
    spec: GrngSpec
    seed: int
    mode: Mode
    spacing: float
    burn_in: float
    count: int
    chains: list = field(default_factory=list)

    def to_dict(self) -> dict:
        spec = asdict(self.spec)
        spec["mode"] = self.spec.mode.value
        return {
            "spec": spec,
            "seed": self.seed,
            "mode": self.mode.value,
            "spacing": self.spacing,
            "burn_in": self.burn_in,
            "count": self.count,
            "chains": list(self.chains),
        }


@dataclass
class SampleStream:
    values: np.ndarray
    meta: StreamMeta

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint64)
        if self.meta.count != self.values.shape[0]:
            raise ConfigurationError(
                f"stream metadata count {self.meta.count} != {self.values.shape[0]} values"
            )

    def __len__(self):
        return self.values.shape[0]

    @property
    def spec(self) -> GrngSpec:
        return self.meta.spec


def default_burn_in(spec: GrngSpec) -> float:
    if spec.mode.is_gibbs:
        return DEFAULT_BURN_IN_SWEEPS
    return DEFAULT_BURN_IN_TAUS * spec.tau_corr


def generate(spec: GrngSpec, count: int, seed: int, burn_in: float | None = None) -> SampleStream:
    """Build couplings, start from random spins, burn in, emit ``count`` readouts.

    Burn-in and spacing are sweeps for the Gibbs modes and seconds for
    ``ct-autonomous``. The result is a pure function of ``(spec, count, seed,
    burn_in)``.
    """
    count = int(count)
    if count < 1:
        raise ConfigurationError(f"sample count must be >= 1, got {count}")
    burn = default_burn_in(spec) if burn_in is None else burn_in
    if burn < 0:
        raise ConfigurationError(f"burn_in={burn} must be >= 0")
    c = couplings_for(spec)
    t = field_table(c)
    state = NetworkState.random(spec.n_bits, seed)
    out = np.empty(count, dtype=np.uint64)
    g0, rng0 = np.uint64(state.g), np.uint64(state.rng_state)
    if spec.mode.is_gibbs:
        if int(burn) != burn:
            raise ConfigurationError(f"burn_in={burn} must be a whole number of sweeps")
        order = kernels.ORDER_SEQUENTIAL if spec.mode is Mode.SEQUENTIAL else kernels.ORDER_RANDOM_SCAN
        _call(kernels.gibbs_generate, g0, rng0, order, int(burn), int(spec.spacing), out, *t)
    else:
        rate_total = spec.n_bits / spec.tau_corr
        _call(kernels.ct_generate, g0, rng0, burn * rate_total, spec.spacing * rate_total, out, *t)
    meta = StreamMeta(spec=spec, seed=int(seed), mode=spec.mode, spacing=spec.spacing,
                      burn_in=burn, count=count)
    return SampleStream(out, meta)


def generate_chains(spec: GrngSpec, count_per_chain: int, seed: int, n_chains: int,
                    burn_in: float | None = None) -> SampleStream:
    """Concatenate ``n_chains`` independent chains with seeds derived from ``seed``."""
    if n_chains < 1:
        raise ConfigurationError("n_chains must be >= 1")
    child_seeds = derive_seeds(seed, n_chains)
    streams = [generate(spec, count_per_chain, s, burn_in) for s in child_seeds]
    merged = concatenate_streams(streams)
    merged.meta.seed = int(seed)
    return merged


def concatenate_streams(streams: list[SampleStream]) -> SampleStream:
    if not streams:
        raise ConfigurationError("nothing to concatenate")
    first = streams[0].meta
    for s in streams[1:]:
        if s.meta.spec != first.spec:
            raise ConfigurationError("cannot concatenate streams from different specs")
    values = np.concatenate([s.values for s in streams])
    chains = [{"seed": s.meta.seed, "count": s.meta.count} for s in streams]
    meta = StreamMeta(spec=first.spec, seed=first.seed, mode=first.mode, spacing=first.spacing,
                      burn_in=first.burn_in, count=values.shape[0], chains=chains)
    return SampleStream(values, meta)


def free_pbit_trace(bias: float, tau: float, steps: int, dt: float, seed: int = 0) -> np.ndarray:
    """Behavioral telegraph model of one isolated p-bit, as a +-1 int8 series.

    Each step of length ``dt`` resamples the output with probability
    ``dt/tau``, drawing +1 with probability ``(1 + tanh(bias))/2``.
    """
    if not (tau > 0 and dt > 0):
        raise ConfigurationError("tau and dt must be positive")
    if dt > tau / 10:
        raise ConfigurationError(f"dt={dt} is too coarse for tau={tau}; need dt <= tau/10")
    steps = int(steps)
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    out = np.empty(steps, dtype=np.int8)
    p_up = flip_probability(bias) if math.isfinite(bias) else (1.0 if bias > 0 else 0.0)
    _call(kernels.telegraph_trace, np.uint64(seed_state(seed)), dt / tau, p_up, out)
    return out
