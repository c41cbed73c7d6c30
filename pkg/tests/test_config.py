import pytest

from roughnet.config import load_config, parse_config
from roughnet.errors import ConfigError


def test_minimal():
    cfg = parse_config("example = flat-product\n")
    assert cfg.example == "flat-product" and cfg.seed == 0 and cfg.theorem.margin == 0.2


def test_full_grammar():
    text = """
    # comment line
    example = warped   # trailing comment
    seed = 7
    warp_amplitude = 0.25
    b0 = 1.0, 2.5
    margin = 0.1
    hlc_samples = 50
    out = somewhere
    """
    cfg = parse_config(text)
    assert cfg.seed == 7 and cfg.theorem.seed == 7
    assert cfg.warp_amplitude == 0.25 and cfg.b0 == [1.0, 2.5]
    assert cfg.theorem.margin == 0.1 and cfg.theorem.hlc_samples == 50 and cfg.out == "somewhere"
    S = cfg.submersion()
    assert S.name == "warped" and list(cfg.base_point(S)) == [1.0, 2.5]


@pytest.mark.parametrize("text", [
    "seed = 1\n",                                   # no example
    "example flat-product\n",                       # no '='
    "example = flat-product\nexample = warped\n",  # duplicate
    "example = flat-product\ncolour = red\n",      # unknown key
    "example = nowhere\n",
    "example = flat-product\nseed = -1\n",
    "example = flat-product\nseed = 18446744073709551616\n",
    "example = flat-product\nseed = 1.5\n",
    "example = flat-product\nmargin = 0\n",
    "example = flat-product\nmargin = nan\n",
    "example = flat-product\nhlc_samples = 0\n",
    "example = flat-product\nb0 = 1\n",
    "example = flat-product\neps0 = 1.0\n",
    "example = flat-product\ndistance_mode = magic\n",
    "example = flat-product\nseed =\n",
])
def test_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_seed_full_64_bit_range():
    assert parse_config("example = flat-product\nseed = 18446744073709551615\n").seed == 2**64 - 1


def test_load_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")


def test_shipped_configs_parse():
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    names = sorted(load_config(p).example for p in root.glob("*.cfg"))
    assert names == ["flat-product", "heisenberg", "warped"]
