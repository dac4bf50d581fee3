import pytest

from pbit_grng.config import ExperimentConfig, parse_config_text
from pbit_grng.coupling import Mode
from pbit_grng.errors import ConfigurationError


def test_round_trip_text():
    cfg = ExperimentConfig(n_bits=16, mu=0.3, sigma_list=[0.05, 0.1], p_list=[6, 8],
                           seeds=[1, 2**64 - 1], precision=20, flip_couplings=True,
                           sample_spacing=16.0, mode="sequential-gibbs")
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.spec().mode is Mode.SEQUENTIAL and back.spec().precision == 20


def test_parse_types_and_comments():
    vals = parse_config_text("""
        # comment
        samples = 1e6       # trailing comment
        seed = 0x10
        mu_list = 0.3, 0.4,0.5
        precision = none
        flip_couplings = yes
        burn_in =
    """)
    assert vals == {"samples": 1_000_000, "seed": 16, "mu_list": [0.3, 0.4, 0.5],
                    "precision": None, "flip_couplings": True, "burn_in": None}


@pytest.mark.parametrize(
    "text, msg",
    [
        ("colour = red", "unknown config key 'colour'"),
        ("samples = 10\nsamples = 20", "duplicate key"),
        ("samples", "expected 'key = value'"),
        ("samples = 1.5", "not an integer"),
        ("mu = abc", "bad value for mu"),
        ("flip_couplings = maybe", "not a boolean"),
        ("p_list = 6, x", "bad value for p_list"),
    ],
)
def test_parse_errors(text, msg):
    with pytest.raises(ConfigurationError, match=msg):
        ExperimentConfig.from_text(text)


@pytest.mark.parametrize(
    "kw",
    [dict(samples=0), dict(seed=-1), dict(seed=2**64), dict(chains=0), dict(combine=0),
     dict(formats=["png"]), dict(formats=[]), dict(plots=["pdf"]), dict(fit_method="x"),
     dict(mode="gibbs"), dict(mu=2.0), dict(n_bits=65), dict(sample_sizes=[0]), dict(max_lag=0)],
)
def test_invalid_configs(kw):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**kw)


def test_echo_omits_output_locations(monkeypatch, tmp_path):
    cfg = ExperimentConfig(output_dir="/x", output_name="run1")
    echo = cfg.echo_text()
    assert "output_dir" not in echo and "output_name" not in echo
    assert ExperimentConfig.from_text(echo) == cfg.replace(output_dir=None, output_name="samples")
    monkeypatch.setenv("PBIT_GRNG_OUTPUT_DIR", str(tmp_path))
    assert ExperimentConfig().resolved_output_dir() == tmp_path
    assert cfg.resolved_output_dir().as_posix() == "/x"


def test_base_config_overlay():
    base = ExperimentConfig(samples=10, seed=4)
    cfg = ExperimentConfig.from_text("seed = 9", base)
    assert (cfg.samples, cfg.seed) == (10, 9)
