"""SplitMix64 generator used by every sampling kernel.

The generator state is a single ``uint64`` counter, so a chain's full random
state fits in one integer and is trivially serializable. Independent chains get
their starting counters from :class:`numpy.random.SeedSequence`.
"""

import numpy as np

from ._jit import njit

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


@njit(inline="always")
def next_u64(state):
    """Advance ``state`` and return ``(new_state, output)``."""
    state = state + GOLDEN_GAMMA
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@njit(inline="always")
def next_unit(state):
    """Uniform double in [0, 1) built from the top 53 bits of one draw."""
    state, z = next_u64(state)
    return state, float(z >> _S11) * _TO_UNIT


def seed_state(seed):
    """Initial generator counter for a user seed (any non-negative int)."""
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    words = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint32)
    return np.uint64((int(words[0]) << 32) | int(words[1]))


def derive_seeds(seed, count):
    """``count`` distinct 64-bit child seeds for independent chains."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    out = []
    for child in children:
        w = child.generate_state(2, dtype=np.uint32)
        out.append((int(w[0]) << 32) | int(w[1]))
    return out


def uniforms(seed, count):
    """Reference stream of uniforms for a seed (testing/diagnostics)."""
    with np.errstate(over="ignore"):
        return _fill_uniforms(seed_state(seed), np.empty(count, dtype=np.float64))


@njit
def _fill_uniforms(state, out):
    for k in range(out.shape[0]):
        state, out[k] = next_unit(state)
    return out
