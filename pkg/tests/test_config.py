import pytest
from hypothesis import given, strategies as st

from shocklab.config import ConfigError, ExperimentConfig, dump_config, load_config, parse_config


def test_defaults_are_the_acceptance_setup():
    cfg = parse_config("")
    assert cfg.mode == "simulate"
    assert (cfg.gas.gamma, cfg.gas.v_minus, cfg.gas.v_plus, cfg.gas.u1_plus) == (2.0, 1.0, 1.1, 0.0)
    assert (cfg.viscosity.mu, cfg.viscosity.lam) == (1.0, 0.0)
    assert (cfg.grid.L, cfg.grid.N1, cfg.grid.N2, cfg.grid.N3) == (100.0, 1024, 16, 16)
    assert cfg.perturbation.epsilon == 0.01
    assert cfg.time.t_end == 50.0


def test_lambda_alias_and_comments():
    cfg = parse_config("[viscosity]\nmu = 2.0  # inline\nlambda = -1.0\n")
    assert cfg.viscosity.lam == -1.0 and cfg.viscosity.mu == 2.0


def test_mode_from_file_and_override():
    assert parse_config("[run]\nmode = profile\n").mode == "profile"
    assert parse_config("[run]\nmode = profile\n", mode="verify").mode == "verify"


@pytest.mark.parametrize("text,line,fragment", [
    ("[grid]\nN1 = 64\nN9 = 3\n", 3, "unknown key"),
    ("[gird]\nN1 = 64\n", 1, "unknown section"),
    ("\n[gas]\ngamma = 1.0\n", 3, "gamma"),
    ("[gas]\nv_plus = 0.9\n", 2, ""),
    ("[grid]\nN1 = 64.5\n", 2, "valid int"),
    ("[time]\nt_end = 1.0\noutput_interval = 0.3\n", 3, "whole multiple"),
    ("[viscosity]\nmu = 1.0\nlambda = -1.0\n", 2, ""),
    ("[run]\nmode = fly\n", 2, "unknown mode"),
    ("gamma = 2\n", 1, "section"),
    ("[grid]\nL = 6000\n", 2, "exceeds"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.ini")
    assert info.value.line == line
    assert str(info.value).startswith(f"exp.ini:{line}: ")
    assert fragment in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_digest_is_stable_and_sensitive():
    a, b = parse_config(""), ExperimentConfig()
    assert a.digest() == b.digest() and len(a.digest()) == 12
    assert parse_config("[perturbation]\nseed = 1\n").digest() != a.digest()


@given(st.floats(1.1, 3.0), st.floats(0.01, 1.0), st.floats(0.1, 5.0), st.integers(64, 4096),
       st.integers(4, 32), st.sampled_from(["gaussian", "planar", "bump", "random"]), st.integers(1, 100))
def test_dump_parse_round_trip(gamma, jump, mu, n1, n2, shape, steps):
    text = (f"[gas]\ngamma = {gamma!r}\nv_plus = {1.0 + jump!r}\n[viscosity]\nmu = {mu!r}\n"
            f"[grid]\nL = 20.0\nN1 = {n1}\nN2 = {n2}\n[perturbation]\nshape = {shape}\n"
            f"[time]\noutput_interval = 0.5\nt_end = {0.5 * steps!r}\n")
    cfg = parse_config(text)
    back = parse_config(dump_config(cfg))
    assert back == cfg
    assert back.digest() == cfg.digest()


def test_shipped_configs_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "configs"
    for p in sorted(root.glob("*.ini")):
        load_config(p)
