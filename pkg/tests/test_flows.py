import numpy as np
import pytest

from imcflow.diagnostics import gauss_residual_full
from imcflow.domain import DomainSpec
from imcflow.errors import MapLeftDomain
from imcflow.fields import Sym2Field
from imcflow.flows import (GaugeData, SpacelikeState, advance_diffeo, deturck_vector,
                           mean_curvature, norm_A2, pullback_state, rhs_gauge_fixed, rhs_raw,
                           rhs_simplified)
from imcflow.geometry import Curvature, ricci_full
from imcflow.oracles import (UmbilicSolution, ball_patch, hyperbolic_ball_metric,
                             torus_random_state)


def _const(dom, M):
    return Sym2Field.from_full(np.einsum("ij,...->ij...", np.asarray(M, float), np.ones(dom.shape)))


def test_mean_curvature_examples():
    dom = DomainSpec.homogeneous(4)
    umb = SpacelikeState(Sym2Field.from_full(np.eye(4)), Sym2Field.from_full(np.eye(4)), 0.0, dom)
    assert mean_curvature(umb) == pytest.approx(4.0)
    assert norm_A2(umb) == pytest.approx(4.0)
    zero = umb.with_fields(umb.g, Sym2Field.from_full(np.zeros((4, 4))))
    assert mean_curvature(zero) == 0 and norm_A2(zero) == 0
    d2 = DomainSpec.homogeneous(2)
    st = SpacelikeState(Sym2Field.from_full(np.eye(2)), Sym2Field.from_full(np.diag([1.0, 2.0])), 0.0, d2)
    assert mean_curvature(st) == pytest.approx(3.0)
    assert norm_A2(st) == pytest.approx(5.0)


@pytest.mark.parametrize("rhs", [rhs_raw, rhs_simplified])
def test_umbilic_rates_at_a_point(rhs):
    sol = UmbilicSolution(4, 1.0)
    dg, dh = rhs(sol.state(0.0))
    assert np.allclose(dg.full(), 8.0 * np.eye(4))
    assert np.allclose(dh.full(), 4.0 * np.eye(4))


@pytest.mark.parametrize("rhs", [rhs_raw, rhs_simplified])
def test_flat_zero_data_is_static(rhs, torus2):
    st = SpacelikeState(_const(torus2, np.eye(2)), _const(torus2, np.zeros((2, 2))), 0.0, torus2)
    dg, dh = rhs(st)
    assert np.max(np.abs(dg.data)) == 0 and np.max(np.abs(dh.data)) == 0


def test_hyperboloid_background_rates_agree():
    # raw and simplified differ only by truncation error on the exact background
    errs = []
    for N in (13, 25):
        dom = ball_patch(3, N)
        g = Sym2Field.from_full(hyperbolic_ball_metric(3, dom.coords))
        st = SpacelikeState(g, g, 0.0, dom)
        (gr, hr), (gs, hs) = rhs_raw(st), rhs_simplified(st)
        m = dom.interior_mask()
        scale = g.full()[..., m].max()
        assert np.allclose(gs.full(), 6.0 * g.full())
        assert np.allclose(hs.full(), 3.0 * g.full())
        errs.append(max(np.max(np.abs((gr.full() - gs.full())[..., m])),
                        np.max(np.abs((hr.full() - hs.full())[..., m]))) / scale)
    assert errs[1] < errs[0] / 2.5


def test_raw_minus_simplified_is_contracted_gauss_defect(torus2):
    st = torus_random_state(torus2, 0.2, 3)
    (gr, _), (gs, _) = rhs_raw(st), rhs_simplified(st)
    curv = Curvature(st.g.full(), torus2)
    G = gauss_residual_full(curv.riem, st.h.full())
    expected = -2.0 * ricci_full(G, curv.ginv)
    assert np.allclose(gr.full() - gs.full(), expected, atol=1e-10)


def test_deturck_vector_vanishes_for_scaled_background(ball3):
    s = Sym2Field.from_full(hyperbolic_ball_metric(3, ball3.coords))
    assert np.max(np.abs(deturck_vector(s, s, ball3))) == 0
    assert np.max(np.abs(deturck_vector(s.scaled(3.0), s, ball3))) < 1e-12


def test_deturck_vector_for_conformal_change():
    # g = e^{2u} s with s flat: V^a = g^{bc}(delta^a_b u_c + delta^a_c u_b - delta_bc u^a)
    # = (2 - n) e^{-2u} du^a
    errs = []
    for N in (33, 65):
        dom = DomainSpec.patch(3, N // 2 + 1, 0.3)
        x = dom.coords
        u = 0.3 * np.sin(2 * x[0]) * np.cos(x[1]) + 0.1 * x[2]
        du = np.array([0.6 * np.cos(2 * x[0]) * np.cos(x[1]), -0.3 * np.sin(2 * x[0]) * np.sin(x[1]),
                       0.1 * np.ones_like(x[0])])
        s = _const(dom, np.eye(3))
        g = Sym2Field.from_full(np.einsum("ij,...->ij...", np.eye(3), np.exp(2 * u)))
        V = deturck_vector(g, s, dom)
        exact = -np.exp(-2 * u) * du
        m = dom.interior_mask()
        errs.append(np.max(np.abs((V - exact)[..., m])))
    assert errs[1] < errs[0] / 3.5


def test_gauge_terms_vanish_when_metric_equals_background(ball3):
    sol = UmbilicSolution(3, 1.0)
    st = sol.state(0.0, ball3)
    dg, dh = rhs_gauge_fixed(st.g, st.h, st.g, ball3)
    rg, rh = rhs_raw(st)
    assert np.allclose(dg.data, rg.data) and np.allclose(dh.data, rh.data)


def test_advance_diffeo_examples(torus2):
    F0 = torus2.coords.copy()
    zero = np.zeros_like(F0)
    assert np.array_equal(advance_diffeo(F0, lambda t: zero, 0.0, 1.0, 5, torus2), F0)
    c = np.array([0.3, -0.1]).reshape(2, 1, 1) * np.ones_like(F0)
    F1 = advance_diffeo(F0, lambda t: c, 0.0, 0.5, 4, torus2)
    assert np.allclose(F1, F0 - 0.5 * c, atol=1e-13)


def test_map_leaving_patch_is_reported():
    dom = ball_patch(2, 9)
    push = np.ones_like(dom.coords)
    with pytest.raises(MapLeftDomain):
        advance_diffeo(dom.coords, lambda t: -push, 0.0, 1.0, 4, dom)


def test_pullback_examples(torus2):
    sol = UmbilicSolution(2, 1.0)
    dom = ball_patch(2, 17, interp_order=3)
    st = sol.state(0.0, dom)
    g, h = pullback_state(dom.coords, st.g, st.h, dom)
    assert np.allclose(g.data, st.g.data) and np.allclose(h.data, st.h.data)
    # small translation on the torus, constant target tensor
    T = _const(torus2, [[2.0, 0.5], [0.5, 1.0]])
    F = torus2.coords + np.array([0.1, -0.2]).reshape(2, 1, 1)
    g2, _ = pullback_state(F, T, T, torus2)
    assert np.allclose(g2.data, T.data)


def test_pullback_by_linear_map():
    dom = DomainSpec.patch(2, 17, 0.4)
    A = np.array([[0.9, 0.1], [-0.05, 0.8]])
    F = np.einsum("ai,i...->a...", A, dom.coords)
    T = _const(dom, [[2.0, 0.3], [0.3, 1.5]])
    g, _ = pullback_state(F, T, T, dom)
    assert np.allclose(g.full()[:, :, 8, 8], A.T @ T.full()[:, :, 0, 0] @ A)


def test_gauge_data_identity_map(ball3):
    s = Sym2Field.from_full(hyperbolic_ball_metric(3, ball3.coords))
    gd = GaugeData.identity(s, ball3)
    assert np.array_equal(gd.F, ball3.coords)
    assert gd.gam_s(ball3) is gd.gam_s(ball3)
