from pathlib import Path

import pytest

from imcflow.errors import ParseError, ScenarioError
from imcflow.scenario import initial_data, load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

MINIMAL = """
[scenario]
name = "umbilic"
seed = 0
[domain]
kind = "homogeneous"
n = 4
[seed]
family = "umbilic"
lambda0 = 1.0
[flow]
variant = "simplified"
[step]
method = "rk4"
cfl = 0.5
dt_max = 1e-3
t_end = 1.0
record_every = 10
"""


def _fields(text):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    return {e.field for e in info.value.errors}


def test_minimal_document():
    sc = parse_scenario(MINIMAL)
    assert sc.domain.n == 4 and sc.initial.lambda0 == 1.0
    assert sc.step.dt_max == 1e-3 and sc.output.csv == "timeseries.csv"
    st, boundary, gauge = initial_data(sc)
    assert st.g.full().shape == (4, 4) and boundary is None and gauge is None


def test_missing_dt_max():
    assert _fields(MINIMAL.replace("dt_max = 1e-3\n", "")) == {"step.dt_max"}


def test_torus_seed_on_homogeneous_domain():
    text = MINIMAL.replace('family = "umbilic"\nlambda0 = 1.0',
                           'family = "torus_random"\namplitude = 0.1\nh_scale = 1.0')
    assert "seed.family" in _fields(text)


def test_all_errors_are_collected():
    text = MINIMAL.replace("cfl = 0.5", "cfl = 2.0").replace("n = 4", "n = 1").replace(
        'variant = "simplified"', 'variant = "curl"')
    assert {"step.cfl", "domain.n", "flow.variant"} <= _fields(text)


def test_unknown_key():
    assert "step.dtmax" in _fields(MINIMAL + "dtmax = 1.0\n")


def test_malformed_document_reports_line():
    with pytest.raises(ParseError) as info:
        parse_scenario("[scenario]\nname = \n")
    assert info.value.line == 2


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_scenarios_validate(path):
    sc = load_scenario(path)
    assert sc.name
