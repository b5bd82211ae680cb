import pytest

from tnbow.config import DEFAULT_TOLERANCES, RunConfig, parse_config, with_overrides
from tnbow.errors import ConfigInvalid

EXAMPLE = """
[tn]
ell = 2.0
centers = 0, 0, 0.5; 0.3, -0.4, -0.6

[bow]
lambda = 0.4
charges = 1, 0

[grid]
h = 1e-3
R_max = 6

[tolerances]
fd = 1e-5

[run]
seed = 0xff
samples = 7
"""


def test_parse_example():
    cfg = parse_config(EXAMPLE)
    assert cfg.ell == 2.0
    assert cfg.centers == ((0.0, 0.0, 0.5), (0.3, -0.4, -0.6))
    assert cfg.charges == (1.0, 0.0)
    assert cfg.R_max == 6.0
    assert cfg.seed == 255 and cfg.samples == 7
    assert cfg.tol("fd") == 1e-5
    assert cfg.tol("exact", 10) == DEFAULT_TOLERANCES["exact"] * 10
    assert cfg.tn.k == 2


@pytest.mark.parametrize("text", [
    "[tn]\nell = -1\n",
    "[tolerances]\nfd = 0\n",
    "[extra]\nx = 1\n",
    "[tn]\ncolour = blue\n",
    "[tn]\ncenters = 0, 0\n",
    "[tn]\ncenters = 0,0,0; 0,0,0\n",
    "[bow]\nlengths = 0.2, 0.2\n[tn]\ncenters = 0,0,0; 1,0,0\n",
    "[run]\nseed = -3\n",
    "[nahm]\ninit = spiral\n",
    "not an ini file",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigInvalid):
        parse_config(text)


def test_overrides_validate():
    cfg = with_overrides(RunConfig(), seed=5, samples=None)
    assert cfg.seed == 5 and cfg.samples == RunConfig().samples
    with pytest.raises(ConfigInvalid):
        with_overrides(RunConfig(), samples=0)
