"""Exact ground truth for small networks by enumerating all ``2^N`` states.

Energies come from the dense materialized J, never from the sampler's O(1)
field formula, so the two routes stay independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

from .coupling import CouplingSet, GrngSpec, build_couplings, couplings_for, materialize_full_matrix
from .errors import CapacityError, ShapeError

MAX_ENUM_BITS = 20
_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    n_bits: int
    pmf: np.ndarray
    z: float
    z_prime: float
    energies: np.ndarray

    @property
    def support_size(self) -> int:
        return self.pmf.shape[0]

    def mean_g(self) -> float:
        return float(np.dot(np.arange(self.pmf.shape[0], dtype=np.float64), self.pmf))


@dataclass(frozen=True)
class Comparison:
    tv_distance: float
    kl_divergence: float
    chi2_stat: float
    max_abs_diff: float
    max_rel_diff: float
    chi2_pvalue: float | None = None
    n_samples: int | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _check_capacity(n_bits: int) -> None:
    if n_bits > MAX_ENUM_BITS:
        raise CapacityError(
            f"exact enumeration of n_bits={n_bits} needs 2^{n_bits} states; "
            f"the limit is n_bits <= {MAX_ENUM_BITS}"
        )


def state_spins(n_bits: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Bipolar spins for readouts ``G = start..stop-1`` as rows (float64)."""
    stop = (1 << n_bits) if stop is None else stop
    g = np.arange(start, stop, dtype=np.int64)
    bits = (g[:, None] >> np.arange(n_bits, dtype=np.int64)[None, :]) & 1
    return (2 * bits - 1).astype(np.float64)


def interaction(c: CouplingSet, s, dense: np.ndarray | None = None) -> np.ndarray | float:
    """``1/2 s^T J s + h^T s`` for one spin vector or a batch of rows."""
    j = materialize_full_matrix(c) if dense is None else dense
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1:
        return float(0.5 * s @ j @ s + c.h @ s)
    return 0.5 * np.einsum("ki,ij,kj->k", s, j, s) + s @ c.h


def energy(c: CouplingSet, s) -> float:
    """Ising energy ``E = -(1/2 s^T J s + h^T s)``.

    ``jB`` and ``h`` already carry the ``beta`` factor, so it is not applied
    a second time here.
    """
    s = np.asarray(s)
    if s.shape != (c.n_bits,):
        raise ShapeError(f"spin vector has shape {s.shape}, expected ({c.n_bits},)")
    return -interaction(c, s)


def all_energies(c: CouplingSet) -> np.ndarray:
    _check_capacity(c.n_bits)
    n = c.n_bits
    dense = materialize_full_matrix(c)
    total = 1 << n
    out = np.empty(total)
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        out[start:stop] = -interaction(c, state_spins(n, start, stop), dense)
    return out


def _boltzmann(energies: np.ndarray) -> tuple[np.ndarray, float]:
    e_min = float(energies.min())
    w = np.exp(-(energies - e_min))
    total = float(np.sum(w))
    return w / total, math.exp(-e_min) * total


def enumerate_states(c: CouplingSet, spec: GrngSpec | None = None) -> ExactDistribution:
    """Boltzmann pmf over readouts: ``pmf[G] = exp(-E(s_G)) / Z``."""
    _check_capacity(c.n_bits)
    if spec is not None and spec.n_bits != c.n_bits:
        raise ShapeError(f"spec has n_bits={spec.n_bits} but couplings have {c.n_bits}")
    energies = all_energies(c)
    pmf, z = _boltzmann(energies)
    z_prime = z * math.exp(-self_energy_constant(c))
    return ExactDistribution(c.n_bits, pmf, z, z_prime, energies)


def target_x(spec: GrngSpec) -> np.ndarray:
    _check_capacity(spec.n_bits)
    g = np.arange(1 << spec.n_bits, dtype=np.float64)
    return (g / float(spec.g0) - spec.mu) / spec.sigma


def target_pmf(spec: GrngSpec) -> ExactDistribution:
    """Discretized Gaussian ``pmf[G] ~ exp(-beta (G/G0 - mu)^2 / (2 sigma^2))``."""
    x = target_x(spec)
    energies = spec.beta * 0.5 * x * x
    pmf, z = _boltzmann(energies)
    return ExactDistribution(spec.n_bits, pmf, z, z, energies)


def exact_for(spec: GrngSpec) -> ExactDistribution:
    return enumerate_states(couplings_for(spec), spec)


def empirical_counts(values, n_bits: int) -> np.ndarray:
    _check_capacity(n_bits)
    v = np.asarray(values, dtype=np.uint64)
    if v.size and int(v.max()) >= (1 << n_bits):
        raise ShapeError(f"readout {int(v.max())} does not fit in {n_bits} bits")
    return np.bincount(v.astype(np.int64), minlength=1 << n_bits)


def _as_pmf(x) -> tuple[np.ndarray, int | None]:
    if isinstance(x, ExactDistribution):
        return x.pmf, None
    arr = np.asarray(x)
    if np.issubdtype(arr.dtype, np.integer):
        total = int(arr.sum())
        if total <= 0:
            raise ShapeError("empirical histogram is empty")
        return arr.astype(np.float64) / total, total
    return arr.astype(np.float64), None


def compare(observed, reference) -> Comparison:
    """Distances from ``observed`` (pmf or integer histogram) to ``reference``.

    An integer array is treated as counts: chi-squared then uses expected
    counts ``M * reference`` and a p-value is reported. Outcomes with zero
    reference probability are left out of chi-squared.
    """
    p, m = _as_pmf(observed)
    q, _ = _as_pmf(reference)
    if p.shape != q.shape:
        raise ShapeError(f"support sizes differ: {p.shape} vs {q.shape}")
    diff = np.abs(p - q)
    tv = 0.5 * float(np.sum(diff))
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = p > 0
        if np.any(pos & (q == 0)):
            kl = math.inf
        else:
            kl = float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
        rel = np.where(q > 0, diff / q, np.where(diff > 0, np.inf, 0.0))
    support = q > 0
    scale = m if m is not None else 1
    expected = scale * q[support]
    chi2 = float(np.sum((scale * p[support] - expected) ** 2 / expected))
    pvalue = None
    if m is not None:
        dof = int(np.count_nonzero(support)) - 1
        pvalue = float(_sps.chi2.sf(chi2, dof)) if dof > 0 else 1.0
    return Comparison(
        tv_distance=tv,
        kl_divergence=max(kl, 0.0),
        chi2_stat=chi2,
        max_abs_diff=float(diff.max()),
        max_rel_diff=float(rel.max()),
        chi2_pvalue=pvalue,
        n_samples=m,
    )


def self_energy_constant(c: CouplingSet) -> float:
    """``(beta B^2 + C) / 2``, the state-independent part of ``-E``."""
    return (c.beta * c.b_const ** 2 + c.c_const) / 2.0


def identity_residual(c: CouplingSet, spec: GrngSpec) -> np.ndarray:
    """Per-state ``1/2 s^T J s + h^T s + beta X^2 / 2`` over all readouts.

    For untruncated couplings this is :func:`self_energy_constant`;
    its spread measures how well the construction realizes the Gaussian.
    """
    x = target_x(spec)
    return -all_energies(c) + c.beta * 0.5 * x * x


@dataclass(frozen=True, eq=False)
class TruncatedLaw:
    """Exact stationary law of a truncated network with ``precision <= n_bits``.

    Bits below ``free_bits = n_bits - precision`` keep no coupling or bias, so
    they are independent fair coins; only the top ``precision`` bits interact.
    ``block_pmf[t]`` is the probability that those top bits read ``t``.
    """

    spec: GrngSpec
    free_bits: int
    block_pmf: np.ndarray

    def cell_x(self) -> tuple[np.ndarray, np.ndarray]:
        """X interval ``[lo, hi)`` covered by each block value (readout width 2^free_bits)."""
        t = np.arange(self.block_pmf.shape[0], dtype=np.float64)
        step = math.ldexp(1.0, self.free_bits)
        g0 = float(self.spec.g0)
        lo = (t * step / g0 - self.spec.mu) / self.spec.sigma
        hi = ((t + 1) * step / g0 - self.spec.mu) / self.spec.sigma
        return lo, hi

    def bin_probabilities(self, edges) -> np.ndarray:
        """Probability mass in each X bin, free bits treated as a continuum.

        Exact up to one readout unit per cell, i.e. to ``2^-n_bits / sigma``.
        """
        edges = np.asarray(edges, dtype=np.float64)
        lo, hi = self.cell_x()
        mass = np.zeros(edges.shape[0] - 1)
        for a, b, w in zip(lo, hi, self.block_pmf):
            overlap = np.minimum(edges[1:], b) - np.maximum(edges[:-1], a)
            mass += w * np.clip(overlap, 0.0, None) / (b - a)
        return mass

    def moments_x(self) -> tuple[float, float]:
        lo, hi = self.cell_x()
        w = self.block_pmf
        m1 = float(np.sum(w * (lo + hi) / 2))
        m2 = float(np.sum(w * (lo * lo + lo * hi + hi * hi) / 3))
        return m1, math.sqrt(max(m2 - m1 * m1, 0.0))


def truncated_block_distribution(spec: GrngSpec) -> TruncatedLaw:
    """Exact law of a truncated generator of any size, via its interacting block."""
    c = couplings_for(spec)
    p = spec.precision
    if p > spec.n_bits:
        raise CapacityError(f"precision={p} > n_bits={spec.n_bits}: low bits still interact")
    _check_capacity(p)
    lo = spec.n_bits - p
    idx = np.arange(lo, spec.n_bits)
    block = np.ix_(idx, idx)
    dense = np.where(c.pair_mask()[block], np.outer(c.jA[idx], c.jB[idx]), 0.0)
    s = state_spins(p)
    e = -(0.5 * np.einsum("ki,ij,kj->k", s, dense, s) + s @ c.h[idx])
    pmf, _ = _boltzmann(e)
    return TruncatedLaw(spec, lo, pmf)


def identity_spread(c: CouplingSet, spec: GrngSpec, extended: bool = True) -> float:
    """Max minus min of :func:`identity_residual` over all readouts.

    With ``extended`` the sums run in ``np.longdouble`` on the float64
    couplings, so what remains is the rounding already present in the stored
    couplings rather than cancellation during evaluation.
    """
    if not extended:
        return float(np.ptp(identity_residual(c, spec)))
    _check_capacity(c.n_bits)
    ld = np.longdouble
    n = c.n_bits
    j = materialize_full_matrix(c).astype(ld)
    h = np.asarray(c.h, dtype=ld)
    s = state_spins(n).astype(ld)
    g = np.arange(1 << n).astype(ld)
    x = (g / ld(c.g0) - ld(spec.mu)) / ld(spec.sigma)
    inter = ld(0.5) * np.einsum("ki,ij,kj->k", s, j, s) + s @ h
    resid = inter + ld(c.beta) * ld(0.5) * x * x
    return float(resid.max() - resid.min())
