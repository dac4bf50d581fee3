"""Hot inner loops of the sampler.

All kernels work on the packed readout ``g`` (a ``uint64`` whose bit ``i`` is
p-bit ``i``) and a precomputed field table, so one update costs O(1)
regardless of ``n_bits``:

    S_i = 2 * (g with bits < k_i cleared) - (2^N - 2^k_i) - [i >= k_i] 2^i s_i
    I_i = coef_i * S_i + h_i

where ``k_i`` is the first column kept in row ``i`` of the truncated J and
``coef_i = jA_i * jB_0``. With nothing truncated ``k_i = 0`` and this is
``-A 2^i (X - A 2^i s_i)`` with the bias folded in.

Arrays of the table (all length ``n_bits``): ``coef``, ``h``, ``keep_mask``
(uint64), ``offset`` (float, ``2^N - 2^k_i``), ``self_d`` (``2^i`` if the
diagonal position would be kept, else 0), ``bit`` (uint64 ``1 << i``) and
``clear`` (its complement).
"""

import math

import numpy as np

from ._jit import njit
from .rng import next_unit

TANH_CLAMP = 30.0
# Below this |I|, tanh(I) == I to within 2**-56 relative.
TINY_FIELD = 1e-8
ORDER_SEQUENTIAL = 0
ORDER_RANDOM_SCAN = 1

_ZERO = np.uint64(0)


@njit(inline="always")
def _field(g, i, coef, h, keep_mask, offset, self_d, bit):
    s_sum = 2.0 * float(g & keep_mask[i]) - offset[i]
    if g & bit[i]:
        s_sum -= self_d[i]
    else:
        s_sum += self_d[i]
    return coef[i] * s_sum + h[i]


@njit
def local_field(g, i, coef, h, keep_mask, offset, self_d, bit):
    return _field(g, i, coef, h, keep_mask, offset, self_d, bit)


@njit
def all_fields(g, coef, h, keep_mask, offset, self_d, bit, out):
    for i in range(coef.shape[0]):
        out[i] = _field(g, i, coef, h, keep_mask, offset, self_d, bit)
    return out


@njit(inline="always")
def prob_up(field):
    if field > TANH_CLAMP:
        field = TANH_CLAMP
    elif field < -TANH_CLAMP:
        field = -TANH_CLAMP
    if -TINY_FIELD < field < TINY_FIELD:
        return 0.5 + 0.5 * field
    return 1.0 / (1.0 + math.exp(-2.0 * field))


@njit(inline="always")
def _update(g, rng, i, coef, h, keep_mask, offset, self_d, bit, clear):
    p = prob_up(_field(g, i, coef, h, keep_mask, offset, self_d, bit))
    rng, u = next_unit(rng)
    if u < p:
        g = g | bit[i]
    else:
        g = g & clear[i]
    return g, rng


@njit
def gibbs_update(g, rng, i, coef, h, keep_mask, offset, self_d, bit, clear):
    return _update(g, rng, i, coef, h, keep_mask, offset, self_d, bit, clear)


@njit(inline="always")
def _sweep(g, rng, order, perm, coef, h, keep_mask, offset, self_d, bit, clear):
    n = perm.shape[0]
    if order == ORDER_RANDOM_SCAN:
        # Fisher-Yates: a fresh uniform permutation every sweep.
        for k in range(n - 1, 0, -1):
            rng, u = next_unit(rng)
            j = int(u * (k + 1))
            tmp = perm[k]
            perm[k] = perm[j]
            perm[j] = tmp
        for k in range(n):
            g, rng = _update(g, rng, perm[k], coef, h, keep_mask, offset, self_d, bit, clear)
    else:
        for i in range(n):
            g, rng = _update(g, rng, i, coef, h, keep_mask, offset, self_d, bit, clear)
    return g, rng


@njit
def gibbs_sweeps(g, rng, order, n_sweeps, coef, h, keep_mask, offset, self_d, bit, clear):
    perm = np.arange(coef.shape[0])
    for _ in range(n_sweeps):
        g, rng = _sweep(g, rng, order, perm, coef, h, keep_mask, offset, self_d, bit, clear)
    return g, rng


@njit
def gibbs_generate(g, rng, order, burn_in, spacing, out,
                   coef, h, keep_mask, offset, self_d, bit, clear):
    """Burn in, then fill ``out`` with readouts ``spacing`` sweeps apart."""
    perm = np.arange(coef.shape[0])
    for _ in range(burn_in):
        g, rng = _sweep(g, rng, order, perm, coef, h, keep_mask, offset, self_d, bit, clear)
    for m in range(out.shape[0]):
        for _ in range(spacing):
            g, rng = _sweep(g, rng, order, perm, coef, h, keep_mask, offset, self_d, bit, clear)
        out[m] = g
    return g, rng


@njit(inline="always")
def _exp_gap(rng):
    rng, u = next_unit(rng)
    return rng, -math.log1p(-u)


@njit(inline="always")
def _advance_ct(g, rng, t_next, t_end, coef, h, keep_mask, offset, self_d, bit, clear):
    n = coef.shape[0]
    while t_next <= t_end:
        rng, u = next_unit(rng)
        i = int(u * n)
        g, rng = _update(g, rng, i, coef, h, keep_mask, offset, self_d, bit, clear)
        rng, gap = _exp_gap(rng)
        t_next += gap
    return g, rng, t_next


@njit
def ct_run(g, rng, duration, coef, h, keep_mask, offset, self_d, bit, clear):
    """Continuous-time dynamics for ``duration`` (in units of 1/total event rate).

    Every p-bit owns an exponential clock; their superposition is one Poisson
    stream whose events pick a p-bit uniformly. The pending event past the end
    is dropped, which is exact because the clocks are memoryless.
    """
    rng, t_next = _exp_gap(rng)
    g, rng, t_next = _advance_ct(g, rng, t_next, duration,
                                 coef, h, keep_mask, offset, self_d, bit, clear)
    return g, rng


@njit
def ct_generate(g, rng, burn_in, spacing, out,
                coef, h, keep_mask, offset, self_d, bit, clear):
    """Read ``g`` every ``spacing`` time units after ``burn_in`` units."""
    rng, t_next = _exp_gap(rng)
    t_end = burn_in
    g, rng, t_next = _advance_ct(g, rng, t_next, t_end,
                                 coef, h, keep_mask, offset, self_d, bit, clear)
    for m in range(out.shape[0]):
        t_end = burn_in + (m + 1) * spacing
        g, rng, t_next = _advance_ct(g, rng, t_next, t_end,
                                     coef, h, keep_mask, offset, self_d, bit, clear)
        out[m] = g
    return g, rng


@njit
def telegraph_trace(rng, p_attempt, p_up, out):
    """Isolated p-bit: each step resamples with probability ``p_attempt``.

    The starting value is drawn from the stationary law, so the trace is
    stationary from step 0.
    """
    rng, u = next_unit(rng)
    s = np.int8(1) if u < p_up else np.int8(-1)
    for t in range(out.shape[0]):
        rng, u = next_unit(rng)
        if u < p_attempt:
            rng, u = next_unit(rng)
            s = np.int8(1) if u < p_up else np.int8(-1)
        out[t] = s
    return rng
