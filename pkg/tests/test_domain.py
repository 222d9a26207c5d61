import numpy as np
import pytest

from imcflow.domain import STENCIL_WIDTH, DomainSpec
from imcflow.oracles import convergence_order


@pytest.mark.parametrize("order,expected", [(2, 2.0), (4, 4.0)])
def test_torus_derivative_order(order, expected):
    errs = []
    for N in (16, 32, 64):
        dom = DomainSpec.torus(1 + 1, N, order=order)
        x, y = dom.coords
        f = np.sin(x) * np.cos(2 * y)
        err = np.max(np.abs(dom.d(f, 1) + 2 * np.sin(x) * np.sin(2 * y)))
        errs.append((dom.dx_min, err))
    assert convergence_order(errs) == pytest.approx(expected, abs=0.1)


def test_patch_derivative_is_second_order_up_to_the_edge():
    errs = []
    for N in (17, 33, 65):
        dom = DomainSpec.patch(2, N, 0.5)
        x, y = dom.coords
        errs.append((dom.dx_min, np.max(np.abs(dom.d(np.exp(x) * y, 0) - np.exp(x) * y))))
    assert convergence_order(errs) > 1.9


def test_grad_puts_derivative_axis_first(torus2):
    f = np.zeros((3,) + torus2.shape)
    assert torus2.grad(f).shape == (2, 3) + torus2.shape


def test_masks_partition_a_patch():
    dom = DomainSpec.patch(3, 9, 0.3)
    inner = dom.interior_mask()
    assert inner.sum() == (9 - 2 * STENCIL_WIDTH) ** 3
    assert not np.any(inner & dom.boundary_mask())
    assert np.all(DomainSpec.torus(2, 8).interior_mask())


@pytest.mark.parametrize("interp", [1, 3])
def test_interpolation_reproduces_grid_values_and_wraps(interp):
    dom = DomainSpec.torus(2, 24, interp_order=interp)
    x, y = dom.coords
    f = np.sin(x) + np.cos(y)
    assert np.allclose(dom.interpolate(f, dom.coords), f, atol=1e-12)
    shifted = dom.coords + np.reshape(dom.period, (2, 1, 1))
    assert np.allclose(dom.interpolate(f, shifted), f, atol=1e-12)


def test_cubic_interpolation_converges_faster_than_linear():
    def err(N, order):
        dom = DomainSpec.patch(2, N, 0.5, interp_order=order)
        x, y = dom.coords
        f = np.sin(3 * x) * np.cos(2 * y)
        pts = np.array([[0.1234, -0.2], [0.05, 0.3111]]).T
        exact = np.sin(3 * pts[0]) * np.cos(2 * pts[1])
        return np.max(np.abs(dom.interpolate(f, pts) - exact))
    assert err(33, 3) < 0.05 * err(33, 1)


def test_descriptor_round_trip():
    for dom in (DomainSpec.homogeneous(4, -1.0), DomainSpec.torus(2, 8, order=4),
                DomainSpec.patch(3, 9, 0.3, boundary="frozen", interp_order=3)):
        assert DomainSpec.from_descriptor(dom.descriptor()) == dom


def test_homogeneous_domain_has_no_stencil():
    dom = DomainSpec.homogeneous(3)
    assert dom.grid_ndim == 0
    assert np.all(dom.grad(np.ones((2, 2))) == 0)
