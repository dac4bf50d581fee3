"""Generator configuration and the rank-1 couplings that make it Gaussian.

The network energy is ``E(s) = -(1/2 s^T J s + h^T s)`` over bipolar spins, and
the readout is ``G = sum_i 2^i b_i`` with ``b_i = (s_i + 1) / 2``. Choosing

    J_ij = -A^2 2^(i+j)   (i != j),   J_ii = 0,
    h_i  = -A B 2^i,

with ``A = 1/(2 G0 sigma)`` and ``B = (1 - 2 mu)/(2 sigma)`` gives
``E = X^2/2 - (B^2 + C)/2`` where ``X = (G/G0 - mu)/sigma`` and
``C = A^2 sum_i 4^i``. The Boltzmann law then makes ``X`` a discretized
standard normal.

J is never stored densely: it is the outer product ``jA jB^T`` with
``jA_i = 2^i`` and ``jB_j = -beta A^2 2^j``, so a generator of any width is
described by ``2N`` coupling elements plus ``N`` biases.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

MAX_BITS = 64
DENSE_SOFT_LIMIT = 16

DEFAULT_TAU_CORR = 380e-12
DEFAULT_GIBBS_SPACING = 8
DEFAULT_CT_SPACING = 2e-9


class Mode(str, enum.Enum):
    SEQUENTIAL = "sequential-gibbs"
    RANDOM_SCAN = "random-scan-gibbs"
    AUTONOMOUS = "ct-autonomous"

    @property
    def code(self) -> int:
        return _MODE_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "Mode":
        for mode, c in _MODE_CODES.items():
            if c == code:
                return mode
        raise ConfigurationError(f"unknown mode code {code}")

    @property
    def is_gibbs(self) -> bool:
        return self is not Mode.AUTONOMOUS


_MODE_CODES = {Mode.SEQUENTIAL: 0, Mode.RANDOM_SCAN: 1, Mode.AUTONOMOUS: 2}


@dataclass(frozen=True)
class GrngSpec:
    """Full configuration of one generator.

    ``precision`` defaults to ``2 * n_bits`` (nothing truncated).
    ``sample_spacing`` is a sweep count for the Gibbs modes and a duration in
    seconds for ``ct-autonomous``; ``None`` selects 8 sweeps or 2 ns.
    """

    n_bits: int
    mu: float
    sigma: float
    precision: int | None = None
    beta: float = 1.0
    mode: Mode = Mode.RANDOM_SCAN
    tau_corr: float = DEFAULT_TAU_CORR
    sample_spacing: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.precision is None:
            object.__setattr__(self, "precision", 2 * int(self.n_bits))
        validate_spec(self)

    @property
    def g0(self) -> int:
        return (1 << self.n_bits) - 1

    @property
    def truncated(self) -> bool:
        return self.precision < 2 * self.n_bits

    @property
    def spacing(self) -> float:
        """Resolved sample spacing (sweeps or seconds depending on mode)."""
        if self.sample_spacing is not None:
            return self.sample_spacing
        return DEFAULT_GIBBS_SPACING if self.mode.is_gibbs else DEFAULT_CT_SPACING

    def with_(self, **changes) -> "GrngSpec":
        if "n_bits" in changes and "precision" not in changes and not self.truncated:
            changes["precision"] = None
        return replace(self, **changes)


def validate_spec(spec: GrngSpec) -> None:
    n = spec.n_bits
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ConfigurationError(f"n_bits must be an integer, got {n!r}")
    if not 1 <= n <= MAX_BITS:
        raise ConfigurationError(f"n_bits={n} violates 1 <= n_bits <= {MAX_BITS}")
    if not (math.isfinite(spec.sigma) and spec.sigma > 0):
        raise ConfigurationError(f"sigma={spec.sigma} violates sigma > 0")
    # mu in {0, 1} is accepted: the construction is well defined there and the
    # reference example at mu=0 depends on it.
    if not (math.isfinite(spec.mu) and 0.0 <= spec.mu <= 1.0):
        raise ConfigurationError(f"mu={spec.mu} violates 0 <= mu <= 1")
    p = spec.precision
    if not isinstance(p, (int, np.integer)) or isinstance(p, bool):
        raise ConfigurationError(f"precision must be an integer, got {p!r}")
    if not 1 <= p <= 2 * n:
        raise ConfigurationError(f"precision={p} violates 1 <= precision <= 2*n_bits={2 * n}")
    if not (math.isfinite(spec.beta) and spec.beta > 0):
        raise ConfigurationError(f"beta={spec.beta} violates beta > 0")
    if not (math.isfinite(spec.tau_corr) and spec.tau_corr > 0):
        raise ConfigurationError(f"tau_corr={spec.tau_corr} violates tau_corr > 0")
    sp = spec.sample_spacing
    if sp is not None:
        if spec.mode.is_gibbs:
            if int(sp) != sp or sp < 1:
                raise ConfigurationError(f"sample_spacing={sp} must be a positive sweep count")
        elif not (math.isfinite(sp) and sp > 0):
            raise ConfigurationError(f"sample_spacing={sp} must be a positive duration")


def _pow2(i: int) -> float:
    return math.ldexp(1.0, i)


@dataclass(frozen=True, eq=False)
class CouplingSet:
    """Factorized couplings ``J = jA jB^T`` (diagonal excluded) and biases ``h``.

    ``j_keep_threshold`` is the smallest ``i + j`` whose coupling survives
    truncation and ``h_keep_threshold`` the smallest bias index kept; both are
    0 for an untruncated set. Dropped biases are stored as exact zeros.
    """

    n_bits: int
    jA: np.ndarray
    jB: np.ndarray
    h: np.ndarray
    a_const: float
    b_const: float
    c_const: float
    g0: int
    beta: float = 1.0
    j_keep_threshold: int = 0
    h_keep_threshold: int = 0
    precision: int = field(default=0)

    def __post_init__(self):
        for name in ("jA", "jB", "h"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.precision == 0:
            object.__setattr__(self, "precision", 2 * self.n_bits)

    @property
    def truncated(self) -> bool:
        return self.j_keep_threshold > 0 or self.h_keep_threshold > 0

    @property
    def jb_scale(self) -> float:
        """Common factor of ``jB``: ``jB_j = jb_scale * 2^j``."""
        return float(self.jB[0])

    def kept_pair(self, i: int, j: int) -> bool:
        return i != j and i + j >= self.j_keep_threshold

    def pair_mask(self) -> np.ndarray:
        idx = np.arange(self.n_bits)
        mask = (idx[:, None] + idx[None, :]) >= self.j_keep_threshold
        np.fill_diagonal(mask, False)
        return mask

    def row_start(self, i: int) -> int:
        """Smallest ``j`` coupled to row ``i`` (``n_bits`` if none)."""
        return min(self.n_bits, max(0, self.j_keep_threshold - i))

    def n_stored(self) -> int:
        return self.jA.size + self.jB.size + self.h.size

    def __eq__(self, other):
        if not isinstance(other, CouplingSet):
            return NotImplemented
        return (
            self.n_bits == other.n_bits
            and np.array_equal(self.jA, other.jA)
            and np.array_equal(self.jB, other.jB)
            and np.array_equal(self.h, other.h)
            and self.a_const == other.a_const
            and self.b_const == other.b_const
            and self.c_const == other.c_const
            and self.g0 == other.g0
            and self.beta == other.beta
            and self.j_keep_threshold == other.j_keep_threshold
            and self.h_keep_threshold == other.h_keep_threshold
        )

    def flipped(self) -> "CouplingSet":
        """Same magnitudes with the opposite sign on J and h.

        Debug aid only: it inverts the energy landscape and so must fail the
        Boltzmann/Gaussian identity.
        """
        return replace(self, jB=-self.jB, h=-self.h)


def build_couplings(spec: GrngSpec) -> CouplingSet:
    """Untruncated couplings for ``spec`` (truncation is a separate step)."""
    validate_spec(spec)
    n = spec.n_bits
    g0 = (1 << n) - 1
    a = 1.0 / (2.0 * float(g0) * spec.sigma)
    b = (1.0 - 2.0 * spec.mu) / (2.0 * spec.sigma)
    beta = float(spec.beta)

    d = np.array([_pow2(i) for i in range(n)])
    jb_scale = -(a * a)
    h_scale = -(a * b)
    if beta != 1.0:
        jb_scale *= beta
        h_scale *= beta
    # Powers of two scale exactly, so jB_j == jB_0 * 2^j bit for bit.
    jB = jb_scale * d
    h = h_scale * d
    sum_d2 = math.fsum(_pow2(2 * i) for i in range(n))
    c = beta * a * a * sum_d2
    return CouplingSet(
        n_bits=n, jA=d, jB=jB, h=h, a_const=a, b_const=b, c_const=c,
        g0=g0, beta=beta, precision=2 * n,
    )


def truncate_couplings(c: CouplingSet, spec: GrngSpec | int) -> CouplingSet:
    """Zero couplings with ``2^(i+j) < 2^(2N-p)`` and biases with ``2^i < 2^(N-p)``.

    Thresholds act on the integer magnitudes, not on the scaled values.
    Thresholds only ever grow, so repeated application is idempotent.
    """
    p = spec.precision if isinstance(spec, GrngSpec) else int(spec)
    n = c.n_bits
    if not 1 <= p <= 2 * n:
        raise ConfigurationError(f"precision={p} violates 1 <= precision <= 2*n_bits={2 * n}")
    j_thr = max(c.j_keep_threshold, 2 * n - p)
    h_thr = max(c.h_keep_threshold, n - p, 0)
    h = np.array(c.h)
    h[:h_thr] = 0.0
    return replace(
        c, h=h, j_keep_threshold=j_thr, h_keep_threshold=h_thr,
        precision=min(p, c.precision),
    )


def couplings_for(spec: GrngSpec) -> CouplingSet:
    c = build_couplings(spec)
    if spec.truncated:
        c = truncate_couplings(c, spec)
    return c


def materialize_full_matrix(c: CouplingSet) -> np.ndarray:
    """Dense symmetric ``N x N`` J with zero diagonal, for oracles and tests."""
    if c.n_bits > DENSE_SOFT_LIMIT:
        warnings.warn(
            f"materializing a dense {c.n_bits}x{c.n_bits} coupling matrix; "
            f"the sampler never needs this above n_bits={DENSE_SOFT_LIMIT}",
            stacklevel=2,
        )
    # jA_i jB_j and jA_j jB_i are the same power-of-two multiple of jB_0, so
    # the outer product is exactly symmetric.
    return np.where(c.pair_mask(), np.outer(c.jA, c.jB), 0.0)


def dump_couplings(c: CouplingSet) -> str:
    """Plain-text dump, one element per line, values as hex floats."""
    lines = [
        f"# n_bits={c.n_bits} beta={c.beta!r} precision={c.precision}",
        f"const A {c.a_const.hex()}",
        f"const B {c.b_const.hex()}",
        f"const C {c.c_const.hex()}",
        f"const G0 {c.g0}",
        f"threshold J {c.j_keep_threshold}",
        f"threshold h {c.h_keep_threshold}",
    ]
    lines += [f"jA {i} {float(v).hex()}" for i, v in enumerate(c.jA)]
    lines += [f"jB {j} {float(v).hex()}" for j, v in enumerate(c.jB)]
    lines += [f"h {i} {float(v).hex()}" for i, v in enumerate(c.h)]
    return "\n".join(lines) + "\n"


def parse_coupling_dump(text: str) -> CouplingSet:
    """Inverse of :func:`dump_couplings`."""
    consts, thr = {}, {}
    arrays = {"jA": {}, "jB": {}, "h": {}}
    header = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                header[k] = v
            continue
        kind, key, value = line.split()
        if kind == "const":
            consts[key] = int(value) if key == "G0" else float.fromhex(value)
        elif kind == "threshold":
            thr[key] = int(value)
        else:
            arrays[kind][int(key)] = float.fromhex(value)
    n = int(header["n_bits"])
    vec = {k: np.array([v[i] for i in range(n)]) for k, v in arrays.items()}
    return CouplingSet(
        n_bits=n, jA=vec["jA"], jB=vec["jB"], h=vec["h"],
        a_const=consts["A"], b_const=consts["B"], c_const=consts["C"], g0=consts["G0"],
        beta=float(header.get("beta", 1.0)), j_keep_threshold=thr["J"],
        h_keep_threshold=thr["h"], precision=int(header.get("precision", 2 * n)),
    )
