import math

import numpy as np
import pytest

from pbit_grng import oracle, stats
from pbit_grng.coupling import GrngSpec, Mode, couplings_for
from pbit_grng.errors import ConfigurationError
from pbit_grng.rng import derive_seeds
from pbit_grng.sampler import (
    NetworkState,
    autonomous_run,
    concatenate_streams,
    free_pbit_trace,
    generate,
    generate_chains,
    gibbs_sweep,
    readout,
    spins_of,
)


def test_readout_and_spins_round_trip():
    assert readout([-1, -1]) == 0
    assert readout([1, -1, 1]) == 5
    for g in (0, 1, 6, 255):
        assert readout(spins_of(g, 8)) == g
    with pytest.raises(ValueError):
        readout([1, 0])


def test_network_state():
    s = NetworkState.random(64, 3)
    assert 0 <= s.g < 2**64
    assert NetworkState.random(64, 3).g == s.g
    assert NetworkState.from_spins([1, 1, -1]).g == 3
    with pytest.raises(ConfigurationError):
        NetworkState(3, 8, 0)
    assert s.copy() == s and s.copy() is not s


@pytest.mark.parametrize("mode", list(Mode))
@pytest.mark.parametrize("spec_kw", [dict(n_bits=4, mu=0.5, sigma=0.2),
                                     dict(n_bits=5, mu=0.35, sigma=0.15, precision=7)])
def test_stream_matches_oracle(mode, spec_kw):
    # Widely spaced samples behave as independent draws, so chi-squared applies.
    spacing = 8 if mode.is_gibbs else 5e-9
    spec = GrngSpec(mode=mode, sample_spacing=spacing, **spec_kw)
    stream = generate(spec, 40_000, seed=2026)
    counts = oracle.empirical_counts(stream.values, spec.n_bits)
    cmp = oracle.compare(counts, oracle.exact_for(spec))
    assert cmp.chi2_pvalue > 1e-4
    assert cmp.tv_distance < 0.02


def test_truncated_64_bit_top_block_matches_exact_law():
    spec = GrngSpec(64, 0.5, 0.1, precision=8, mode="sequential-gibbs")
    law = oracle.truncated_block_distribution(spec)
    stream = generate(spec, 30_000, seed=2026)
    top = (stream.values >> np.uint64(56)).astype(np.int64)
    counts = np.bincount(top, minlength=256)
    cmp = oracle.compare(counts, law.block_pmf)
    assert cmp.chi2_pvalue > 1e-4
    # The 56 free bits are fair coins.
    low = (stream.values & np.uint64(0xFF)).astype(np.int64)
    assert abs(low.mean() - 127.5) < 3 * 73.9 / math.sqrt(30_000)


def test_generate_deterministic_and_seed_sensitive():
    spec = GrngSpec(32, 0.5, 0.1)
    a = generate(spec, 200, 1)
    b = generate(spec, 200, 1)
    c = generate(spec, 200, 2)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.meta.seed == 1 and a.meta.count == 200 and a.meta.burn_in == 100
    assert a.meta.to_dict()["spec"]["mode"] == "random-scan-gibbs"


def test_full_precision_stream_identical_to_untruncated():
    a = generate(GrngSpec(16, 0.4, 0.1), 300, 5)
    b = generate(GrngSpec(16, 0.4, 0.1, precision=32), 300, 5)
    np.testing.assert_array_equal(a.values, b.values)


def test_generate_errors():
    spec = GrngSpec(8, 0.5, 0.1)
    with pytest.raises(ConfigurationError):
        generate(spec, 0, 1)
    with pytest.raises(ConfigurationError):
        generate(spec, 10, 1, burn_in=-1)
    with pytest.raises(ConfigurationError):
        generate(spec, 10, 1, burn_in=2.5)


def test_chains_are_concatenated_derived_streams():
    spec = GrngSpec(8, 0.5, 0.2)
    merged = generate_chains(spec, 50, 9, 3)
    seeds = derive_seeds(9, 3)
    parts = [generate(spec, 50, s) for s in seeds]
    np.testing.assert_array_equal(merged.values, np.concatenate([p.values for p in parts]))
    assert [c["seed"] for c in merged.meta.chains] == seeds
    assert merged.meta.seed == 9
    with pytest.raises(ConfigurationError):
        concatenate_streams([parts[0], generate(GrngSpec(8, 0.5, 0.3), 5, 1)])


def test_sweep_and_autonomous_run_state_handling():
    c = couplings_for(GrngSpec(10, 0.5, 0.2))
    st = NetworkState.random(10, 4)
    before = st.copy()
    autonomous_run(st, c, 0.0, 1e9)
    assert st == before
    autonomous_run(st, c, 1e-9, 1e9)
    assert st.t_sim == pytest.approx(1e-9)
    assert st.rng_state != before.rng_state
    with pytest.raises(ConfigurationError):
        gibbs_sweep(st, c, order="diagonal")
    with pytest.raises(ConfigurationError):
        autonomous_run(st, c, -1.0, 1e9)


def test_free_pbit_mean_and_correlation_time():
    tau, dt = 380e-12, 1e-12
    for bias in (-1.0, 0.5):
        tr = free_pbit_trace(bias, tau, 400_000, dt, seed=7)
        # Effective sample count ~ steps / (2 tau/dt).
        assert abs(tr.mean() - math.tanh(bias)) < 5 / math.sqrt(400_000 / 760)
    # Estimator sd is ~4% at 1e6 steps.
    tr = free_pbit_trace(0.0, tau, 1_000_000, dt, seed=8).astype(np.float64)
    acf = stats.autocorrelation(tr, 800)
    fitted = stats.fit_correlation_time(acf, dt)
    assert fitted == pytest.approx(tau, rel=0.15)
    assert set(np.unique(tr)) <= {-1.0, 1.0}


def test_free_pbit_rejects_coarse_step():
    with pytest.raises(ConfigurationError, match="too coarse"):
        free_pbit_trace(0.0, 380e-12, 10, 50e-12)
    extreme = free_pbit_trace(math.inf, 380e-12, 100, 1e-12)
    assert np.all(extreme == 1)
