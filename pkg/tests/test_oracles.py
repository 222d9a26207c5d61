import numpy as np
import pytest

from imcflow.domain import DomainSpec
from imcflow.errors import InsufficientLevels
from imcflow.oracles import (UmbilicSolution, convergence_order, hyperbolic_ball_metric,
                             hyperboloid_perturbed_state, seeded_perturbation, torus_random_state,
                             umbilic_state)


def test_umbilic_state_at_unit_time():
    st = umbilic_state(UmbilicSolution(4, 1.0), 1.0)
    g, h = st.g.full(), st.h.full()
    assert np.allclose(g, 9.0 * np.eye(4))
    assert h[0, 0] / g[0, 0] == pytest.approx(1.0 / 3.0)
    with pytest.raises(ValueError):
        umbilic_state(UmbilicSolution(), -0.1)


def test_ball_metric_at_origin():
    assert np.allclose(hyperbolic_ball_metric(3, np.zeros(3)), 4.0 * np.eye(3))


def test_umbilic_rates_match_time_derivative(ball3):
    sol = UmbilicSolution(3, 0.7)
    t, e = 0.3, 1e-6
    dg, dh = sol.rates(t, ball3)
    fd_g = (sol.state(t + e, ball3).g.data - sol.state(t - e, ball3).g.data) / (2 * e)
    fd_h = (sol.state(t + e, ball3).h.data - sol.state(t - e, ball3).h.data) / (2 * e)
    assert np.allclose(dg, fd_g, rtol=1e-6) and np.allclose(dh, fd_h, rtol=1e-6)


def test_seeds_are_deterministic(ball3, torus2):
    a = hyperboloid_perturbed_state(ball3, 1e-2, 11)
    b = hyperboloid_perturbed_state(ball3, 1e-2, 11)
    c = hyperboloid_perturbed_state(ball3, 1e-2, 12)
    assert np.array_equal(a.h.data, b.h.data) and not np.array_equal(a.h.data, c.h.data)
    assert np.array_equal(torus_random_state(torus2, 0.2, 5).g.data,
                          torus_random_state(torus2, 0.2, 5).g.data)


def test_perturbation_stays_off_the_boundary(ball3):
    p = seeded_perturbation(ball3, 1.0, 3).full()
    assert not p[..., ball3.boundary_mask()].any()
    assert np.abs(p).max() > 0


def test_torus_seed_is_positive(torus2):
    st = torus_random_state(torus2, 0.3, 9)
    assert np.linalg.eigvalsh(np.moveaxis(st.g.full(), (0, 1), (-2, -1))).min() > 0
    assert np.linalg.eigvalsh(np.moveaxis(st.h.full(), (0, 1), (-2, -1))).min() > 0


def test_convergence_order_examples():
    assert convergence_order([(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 6.25e-4)]) == pytest.approx(2.0)
    assert convergence_order([(0.1, 1e-2), (0.05, 5e-3), (0.025, 2.5e-3)]) == pytest.approx(1.0)
    with pytest.raises(InsufficientLevels):
        convergence_order([(0.1, 1e-2), (0.05, 2.5e-3)])


def test_homogeneous_umbilic_domain_curvature():
    dom = UmbilicSolution(3, 2.0).homogeneous_domain()
    assert dom == DomainSpec.homogeneous(3, -4.0)
