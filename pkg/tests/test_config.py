import pytest

from scflow.config import ConfigError, ScenarioConfig, load_config, parse_config


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    assert cfg.interp.n_vectors == 10_000 and cfg.analysis.level == 10


def test_full_config():
    cfg = parse_config(
        """
[run]
seed = 18446744073709551615
out = results  # trailing comment

[scenario]
functional = quadratic
positive_only = yes
truncation = 12
coeffs = 1: 1.0, 3: -0.5
span = 0, 4
direction = backward

[solver]
method = rk45
rtol = 1e-9

[analysis]
fit_window = 1e-9, 1e-3
lemma_times = 1; 2
bridge = 2, 6

[interp]
families = PolySquare, SobolevLike(3)
n_vectors = 5

[report]
criteria = 1, 5
"""
    )
    assert cfg.seed == 2**64 - 1
    assert cfg.out_dir == "results"
    assert cfg.functional_params == {"positive_only": True}
    assert cfg.coeffs == {1: 1.0, 3: -0.5}
    assert cfg.span == (0.0, 4.0) and cfg.direction == "backward"
    assert cfg.solver.method == "rk45" and cfg.solver.rtol == 1e-9
    assert cfg.analysis.fit_window == (1e-9, 1e-3)
    assert cfg.analysis.lemma_times == (1.0, 2.0)
    assert cfg.analysis.bridge == (2, 6)
    assert cfg.interp.families == ("PolySquare", "SobolevLike(3)")
    assert cfg.criteria == (1, 5)


def test_critical_launch():
    cfg = parse_config("[scenario]\ninitial = critical\ncritical_set = 1, 2\ndelta = 1e-5\n")
    assert cfg.critical_set == (1, 2) and cfg.delta == 1e-5


@pytest.mark.parametrize(
    "text",
    [
        "[scenario]\nfunctional = sextic\n",
        "[scenario]\nspan = 3, 1\n",
        "[scenario]\nspan = 1\n",
        "[scenario]\ntruncation = 0\n",
        "[scenario]\ncoeffs = 1 0.5\n",
        "[scenario]\ndirection = up\n",
        "[scenario]\ninitial = random\n",
        "[solver]\nrtol = -1\n",
        "[solver]\nmethod = euler\n",
        "[analysis]\nepsilon = 0\n",
        "[analysis]\nfit_window = 1e-2, 1e-10\n",
        "[interp]\nfamilies = Exponential\n",
        "[interp]\nn_vectors = 0\n",
        "[interp]\nbasis_debug = maybe\n",
        "[run]\nseed = -1\n",
        "[run]\nseed = 18446744073709551616\n",
        "[run]\nseed = lots\n",
        "[plots]\nx = 1\n",
        "no section header\n",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_load_from_disk(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[run]\nseed = 0x10\n")
    assert load_config(p).seed == 16
