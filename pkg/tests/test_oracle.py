import math

import numpy as np
import pytest

from pbit_grng import oracle
from pbit_grng.coupling import GrngSpec, build_couplings, couplings_for
from pbit_grng.errors import CapacityError, ShapeError


def test_two_bit_energies_by_hand():
    # N=2, mu=0, sigma=1: J01=-1/18, h=(-1/12, -1/6); E=-(J01 s0 s1 + h.s)
    c = build_couplings(GrngSpec(2, 0.0, 1.0))
    for s0 in (-1, 1):
        for s1 in (-1, 1):
            want = -(-1 / 18 * s0 * s1 - s0 / 12 - s1 / 6)
            assert oracle.energy(c, np.array([s0, s1])) == pytest.approx(want, rel=1e-14)
    # constant part of 1/2 s^T J s + h^T s + X^2/2 is +(B^2 + C)/2 = 7/36
    assert oracle.self_energy_constant(c) == pytest.approx(7 / 36, rel=1e-14)
    res = oracle.identity_residual(c, GrngSpec(2, 0.0, 1.0))
    np.testing.assert_allclose(res, 7 / 36, rtol=1e-14)


def test_energy_shape_check():
    c = build_couplings(GrngSpec(3, 0.5, 0.1))
    with pytest.raises(ShapeError):
        oracle.energy(c, np.ones(4))


@pytest.mark.parametrize("n", [1, 3, 6, 10])
@pytest.mark.parametrize("mu, sigma", [(0.5, 0.2), (0.3, 0.1), (0.8, 0.05), (0.0, 0.4)])
def test_boltzmann_law_is_target_gaussian(n, mu, sigma):
    spec = GrngSpec(n, mu, sigma)
    exact = oracle.exact_for(spec)
    target = oracle.target_pmf(spec)
    cmp = oracle.compare(exact, target)
    assert cmp.max_rel_diff < 1e-12
    assert exact.pmf.sum() == pytest.approx(1.0, abs=1e-14)
    # Z' = Z exp(-const) is the Gaussian normalizer sum exp(-X^2/2).
    assert exact.z_prime == pytest.approx(target.z, rel=1e-12)


def test_beta_tempers_the_gaussian():
    spec = GrngSpec(6, 0.4, 0.1, beta=0.5)
    cmp = oracle.compare(oracle.exact_for(spec), oracle.target_pmf(spec))
    assert cmp.max_rel_diff < 1e-12
    wide = oracle.target_pmf(GrngSpec(6, 0.4, 0.1 / math.sqrt(0.5)))
    np.testing.assert_allclose(oracle.target_pmf(spec).pmf, wide.pmf, rtol=1e-12)


def test_sign_flip_breaks_identity():
    spec = GrngSpec(6, 0.5, 0.2)
    c = build_couplings(spec).flipped()
    cmp = oracle.compare(oracle.enumerate_states(c, spec), oracle.target_pmf(spec))
    assert cmp.max_rel_diff > 1.0
    # Flipping inverts the law: probability piles up at the extremes.
    pmf = oracle.enumerate_states(c, spec).pmf
    assert pmf[0] + pmf[-1] > pmf[31] + pmf[32]


def test_truncation_breaks_identity():
    spec = GrngSpec(8, 0.3, 0.1, precision=8)
    cmp = oracle.compare(oracle.exact_for(spec), oracle.target_pmf(spec))
    assert cmp.max_rel_diff > 1e-6


def test_capacity_limit():
    with pytest.raises(CapacityError, match="n_bits <= 20"):
        oracle.exact_for(GrngSpec(21, 0.5, 0.1))
    with pytest.raises(CapacityError):
        oracle.target_pmf(GrngSpec(21, 0.5, 0.1))


def test_compare_counts_and_distances():
    ref = np.array([0.25, 0.25, 0.5])
    same = oracle.compare(np.array([25, 25, 50]), ref)
    assert same.tv_distance == 0 and same.chi2_stat == 0 and same.chi2_pvalue == 1.0
    assert same.n_samples == 100
    off = oracle.compare(np.array([0.5, 0.0, 0.5]), ref)
    assert off.tv_distance == pytest.approx(0.25)
    assert off.max_abs_diff == pytest.approx(0.25)
    assert off.kl_divergence == pytest.approx(0.5 * math.log(2))
    assert oracle.compare(ref, np.array([0.5, 0.5, 0.0])).kl_divergence == math.inf
    with pytest.raises(ShapeError):
        oracle.compare(ref, np.ones(4) / 4)
    with pytest.raises(ShapeError):
        oracle.compare(np.zeros(3, dtype=int), ref)


def test_empirical_counts():
    counts = oracle.empirical_counts(np.array([0, 3, 3, 1], dtype=np.uint64), 2)
    np.testing.assert_array_equal(counts, [1, 1, 0, 2])
    with pytest.raises(ShapeError):
        oracle.empirical_counts(np.array([4], dtype=np.uint64), 2)


@pytest.mark.parametrize("n, p", [(8, 4), (10, 6), (12, 3), (9, 9)])
def test_truncated_block_law_matches_full_enumeration(n, p):
    spec = GrngSpec(n, 0.4, 0.15, precision=p)
    law = oracle.truncated_block_distribution(spec)
    full = oracle.exact_for(spec).pmf.reshape(-1, 1 << (n - p))
    np.testing.assert_allclose(full.sum(axis=1), law.block_pmf, atol=1e-15)
    # Free low bits: flat inside each block.
    np.testing.assert_allclose(np.ptp(full, axis=1), 0.0, atol=1e-16)


def test_truncated_block_law_bins_and_moments():
    spec = GrngSpec(64, 0.5, 0.1, precision=12)
    law = oracle.truncated_block_distribution(spec)
    edges = np.linspace(-6, 6, 121)
    mass = law.bin_probabilities(edges)
    assert mass.sum() == pytest.approx(1.0, abs=1e-9)
    m, s = law.moments_x()
    assert abs(m) < 1e-9 and s == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(CapacityError):
        oracle.truncated_block_distribution(GrngSpec(8, 0.5, 0.1, precision=12))


def test_identity_spread_extended_vs_plain():
    spec = GrngSpec(8, 0.7, 0.05)
    c = couplings_for(spec)
    ext = oracle.identity_spread(c, spec)
    plain = oracle.identity_spread(c, spec, extended=False)
    # Both tiny relative to the energy scale (~70); long double removes the
    # evaluation error, leaving the rounding stored in the couplings.
    assert ext < 1e-13 and plain < 1e-12
    assert ext <= plain
