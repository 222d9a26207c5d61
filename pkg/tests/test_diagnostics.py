import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_

from imcflow.diagnostics import (CSV_COLUMNS, codazzi_residual, derivative_monitor, envelope_check,
                                 monotonicity_report, parabolic_rescale, pinching_ratios,
                                 record_state, residual_norms, sectional_range)
from imcflow.domain import DomainSpec
from imcflow.errors import (ClosedIntegralOnPatch, EnvelopeViolation, NonpositiveH,
                            ZeroSecondFundamentalForm)
from imcflow.fields import Sym2Field
from imcflow.flows import SpacelikeState
from imcflow.integrator import StepControl, run_flow
from imcflow.diagnostics import recorder
from imcflow.oracles import UmbilicSolution, ball_patch, hyperbolic_ball_metric, torus_random_state


def _const(dom, M):
    return Sym2Field.from_full(np.einsum("ij,...->ij...", np.asarray(M, float), np.ones(dom.shape)))


def _point(g, h):
    n = len(g)
    return SpacelikeState(Sym2Field.from_full(np.asarray(g, float)),
                          Sym2Field.from_full(np.asarray(h, float)), 0.0, DomainSpec.homogeneous(n))


def test_csv_header_is_frozen():
    assert ",".join(CSV_COLUMNS) == ("t,H_min,H_max,A2_min,A2_max,eps,beta,F_n,D1,D2,normG2,normC2,"
                                     "sec_min,sec_max,vol,s1,s2")


def test_flat_zero_data_has_no_residual(torus2):
    st = SpacelikeState(_const(torus2, np.eye(2)), _const(torus2, np.zeros((2, 2))), 0.0, torus2)
    r = residual_norms(st)
    assert r.normG2 == 0 and r.normC2 == 0


def test_ball_with_h_equal_g_has_small_residuals():
    out = []
    for N in (13, 25):
        dom = ball_patch(3, N)
        g = Sym2Field.from_full(hyperbolic_ball_metric(3, dom.coords))
        r = residual_norms(SpacelikeState(g, g, 0.0, dom))
        out.append((r.normG2, r.normC2))
    # |G|^2 of an O(dx^2) residual approaches a factor 16 per halving from below
    assert out[1][0] < out[0][0] / 5
    # h = g is parallel for the discrete connection of g itself
    assert max(out[0][1], out[1][1]) < 1e-25


def test_codazzi_matches_direct_stencil():
    dom = DomainSpec.torus(2, 64)
    x, y = dom.coords
    h = np.array([[2 + np.sin(x) * np.cos(y), 0.3 * np.cos(x + y)],
                  [0.3 * np.cos(x + y), 2 + np.cos(2 * y)]])
    st = SpacelikeState(_const(dom, np.eye(2)), Sym2Field.from_full(h), 0.0, dom)
    C = codazzi_residual(st)
    # independent path: exact partials of h on the flat torus
    dxh01, dyh00 = -0.3 * np.sin(x + y), -np.sin(x) * np.sin(y)
    dxh11, dyh01 = np.zeros_like(x), -0.3 * np.sin(x + y)
    assert np.max(np.abs(C[0, 1, 0] - (dxh01 - dyh00))) < 5e-3
    assert np.max(np.abs(C[0, 1, 1] - (dxh11 - dyh01))) < 5e-3
    assert np.array_equal(C, -C.swapaxes(0, 1))


def test_pinching_examples():
    eps, beta = pinching_ratios(_point(np.eye(3), 2.0 * np.eye(3)))
    assert eps == pytest.approx(1 / 3) and beta == pytest.approx(1 / 3)
    eps, beta = pinching_ratios(_point(np.eye(2), np.diag([1.0, 2.0])))
    assert eps == pytest.approx(1 / 3) and beta == pytest.approx(2 / 3)


@settings(max_examples=30, deadline=None)
@given(st_.integers(2, 5), st_.integers(0, 2 ** 31))
def test_pinching_brackets_inverse_dimension(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    g = B @ B.T + n * np.eye(n)
    C = rng.normal(size=(n, n))
    h = C @ C.T + 0.1 * np.eye(n)
    eps, beta = pinching_ratios(_point(g, h))
    assert eps <= 1 / n + 1e-12 <= beta + 2e-12


def test_pinching_rejects_nonpositive_H():
    with pytest.raises(NonpositiveH):
        pinching_ratios(_point(np.eye(2), np.diag([1.0, -2.0])))


def _umbilic_records(n=4, t_end=0.5):
    sol = UmbilicSolution(n, 1.0)
    res = run_flow(sol.state(0.0), "simplified", StepControl(dt_max=1e-3, t_end=t_end, record_every=50),
                   record=recorder())
    return sol, res.records


def test_umbilic_saturates_upper_envelopes():
    sol, recs = _umbilic_records()
    rep = envelope_check(recs, 4, sol.H(0), sol.H(0), sol.A2(0))
    assert rep.ok
    w = rep.worst()
    assert abs(w["H_upper"]) < 1e-6 and abs(w["A2_upper"]) < 1e-6
    assert rep.margins["H_lower"][1:].min() > 0 and rep.margins["A2_lower"][1:].min() > 0


def test_envelope_violation_is_reported():
    sol, recs = _umbilic_records()
    with pytest.raises(EnvelopeViolation) as info:
        envelope_check(recs, 4, sol.H(0), 0.5 * sol.H(0), sol.A2(0))
    assert info.value.which == "H_upper"
    rep = envelope_check(recs, 4, sol.H(0), 0.5 * sol.H(0), sol.A2(0), raise_on_violation=False)
    assert not rep.verdicts()["H_upper"] and rep.verdicts()["A2_upper"]


def test_umbilic_functional_is_conserved():
    sol, recs = _umbilic_records(n=4)
    F = np.array([r.F_n for r in recs])
    assert np.allclose(F, F[0], rtol=1e-10)
    assert all(r.D1 == 0 and abs(r.D2) < 1e-12 for r in recs)


def test_pointwise_umbilic_with_varying_H():
    dom = DomainSpec.torus(2, 32)
    x, y = dom.coords
    f = 1.5 + 0.5 * np.sin(x) * np.cos(y)
    st = SpacelikeState(_const(dom, np.eye(2)), Sym2Field.from_full(np.einsum("ij,...->ij...", np.eye(2), f)),
                        0.0, dom)
    m = monotonicity_report(st)
    assert abs(m.D2) < 1e-12 and m.D1 > 0.1


def test_closed_integral_refused_on_patch(ball3):
    st = UmbilicSolution(3, 1.0).state(0.0, ball3)
    with pytest.raises(ClosedIntegralOnPatch):
        monotonicity_report(st)
    assert np.isfinite(monotonicity_report(st, allow_open=True).F_n)


def test_umbilic_derivatives_vanish():
    sol, recs = _umbilic_records(t_end=0.1)
    stats = derivative_monitor(recs, M_bound=2.0)
    assert stats.sup_s1 == 0 and stats.sup_s2 == 0
    assert not any(stats.flags.values())


def test_derivative_budget_flags(torus2):
    st = torus_random_state(torus2, 0.2, 3)
    res = run_flow(st, "simplified", StepControl(dt_max=2e-3, t_end=0.02, record_every=5), record=recorder())
    stats = derivative_monitor(res.records, 1.0, budgets=(1e-9, None))
    assert stats.flags == {"s1": True, "s2": False}


def test_parabolic_rescale_normalizes_and_is_idempotent(torus2):
    st = torus_random_state(torus2, 0.2, 3)
    once, eps = parabolic_rescale(st)
    assert record_state(once).A2_max == pytest.approx(1.0)
    twice, eps2 = parabolic_rescale(once)
    assert eps2 == pytest.approx(1.0)
    assert np.allclose(twice.g.data, once.g.data) and np.allclose(twice.h.data, once.h.data)
    with pytest.raises(ZeroSecondFundamentalForm):
        parabolic_rescale(st.with_fields(st.g, st.h.scaled(0.0)))


def test_sectional_range_of_the_ball():
    dom = ball_patch(3, 25)
    g = Sym2Field.from_full(hyperbolic_ball_metric(3, dom.coords))
    lo, hi = sectional_range(SpacelikeState(g, g, 0.0, dom))
    assert lo == pytest.approx(-1.0, abs=0.05) and hi == pytest.approx(-1.0, abs=0.05)


def test_record_marks_pinching_undefined_when_H_not_positive(torus2):
    st = SpacelikeState(_const(torus2, np.eye(2)), _const(torus2, np.zeros((2, 2))), 0.0, torus2)
    rec = record_state(st)
    assert np.isnan(rec.eps) and np.isnan(rec.F_n)


def test_exponential_rate():
    from imcflow.diagnostics import exponential_rate
    t = np.linspace(0, 1, 6)
    assert exponential_rate(t, 3 * np.exp(-2 * t)) == pytest.approx(-2.0)
    assert np.isnan(exponential_rate([0.0, 1.0], [0.0, 0.0]))
