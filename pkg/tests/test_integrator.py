import numpy as np
import pytest

from imcflow.diagnostics import recorder
from imcflow.domain import DomainSpec
from imcflow.fields import Sym2Field
from imcflow.flows import SpacelikeState
from imcflow.integrator import (COMPLETED, POSITIVITY_LOST, StepControl, run_flow, stable_dt)
from imcflow.oracles import UmbilicSolution
from imcflow.runner import EXIT_CODES, EXIT_POSITIVITY


def _point_state(n, g, h, curvature=0.0):
    dom = DomainSpec.homogeneous(n, curvature)
    return SpacelikeState(Sym2Field.from_full(np.asarray(g, float)),
                          Sym2Field.from_full(np.asarray(h, float)), 0.0, dom)


def test_stable_dt_from_second_fundamental_form():
    st = UmbilicSolution(4, 1.0).state(0.0)
    assert stable_dt(st, StepControl(cfl=0.5, dt_max=1.0)) == pytest.approx(0.03125)


def test_stable_dt_from_diffusion():
    dom = DomainSpec.torus(2, 8, extent=8.0)
    g = Sym2Field.from_full(np.einsum("ij,...->ij...", np.eye(2), np.ones(dom.shape)))
    st = SpacelikeState(g, g.scaled(0.0), 0.0, dom)
    assert stable_dt(st, StepControl(cfl=1.0, dt_max=1e9)) == pytest.approx(0.25)


def test_stable_dt_clamped_by_dt_max():
    st = UmbilicSolution(4, 1.0).state(0.0)
    assert stable_dt(st, StepControl(dt_max=1e-6)) == 1e-6


@pytest.mark.parametrize("kwargs", [dict(cfl=0.0), dict(cfl=1.5), dict(dt_max=0.0),
                                    dict(t_end=-1.0), dict(record_every=0),
                                    dict(method="leapfrog")])
def test_step_control_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        StepControl(**kwargs)


@pytest.mark.parametrize("variant", ["raw", "simplified"])
def test_umbilic_run_hits_closed_form(variant):
    sol = UmbilicSolution(4, 1.0)
    res = run_flow(sol.state(0.0), variant, StepControl(dt_max=1e-3, t_end=1.0))
    assert res.reason == COMPLETED
    assert res.final.t == 1.0
    lam = res.final.h.full()[0, 0] / res.final.g.full()[0, 0]
    assert lam == pytest.approx(1.0 / 3.0, rel=1e-8)


def test_records_follow_cadence():
    sol = UmbilicSolution(3, 1.0)
    res = run_flow(sol.state(0.0), "simplified", StepControl(dt_max=1e-2, t_end=0.1, record_every=2),
                   record=recorder())
    assert res.steps == 10
    assert np.allclose(res.times, [0.0, 0.02, 0.04, 0.06, 0.08, 0.1])


def test_flat_zero_data_is_a_fixed_point():
    dom = DomainSpec.torus(2, 16)
    g = Sym2Field.from_full(np.einsum("ij,...->ij...", np.eye(2), np.ones(dom.shape)))
    st = SpacelikeState(g, g.scaled(0.0), 0.0, dom)
    res = run_flow(st, "simplified", StepControl(dt_max=1e-2, t_end=0.05))
    assert res.ok
    assert np.array_equal(res.final.g.data, g.data)
    assert not res.final.h.data.any()


def test_huge_step_loses_positivity():
    # positive curvature with h = 0 shrinks g at rate 2(n-1)K; dt = 10 overshoots zero
    st = _point_state(3, np.eye(3), np.zeros((3, 3)), curvature=1.0)
    res = run_flow(st, "raw", StepControl(method="euler", dt_max=10.0, t_end=20.0))
    assert res.reason == POSITIVITY_LOST
    assert res.final.t == 0.0
    assert EXIT_CODES[res.reason] == EXIT_POSITIVITY


def test_runs_are_deterministic(torus2):
    from imcflow.oracles import torus_random_state
    st = torus_random_state(torus2, 0.2, 4)
    ctrl = StepControl(dt_max=1e-3, t_end=0.01)
    a = run_flow(st, "simplified", ctrl).final
    b = run_flow(st, "simplified", ctrl).final
    assert np.array_equal(a.g.data, b.g.data) and np.array_equal(a.h.data, b.h.data)
