"""Right-hand sides of the intrinsic mean curvature flow.

Three variants share one code path:

* ``raw``        dg = -2 Ric + 2 h g^-1 h,
                 dh = lap h - Ric g^-1 h - h g^-1 Ric + 2 h g^-1 h g^-1 h - |A|^2 h
* ``simplified`` dg = 2 H h,  dh = lap h + 2 H h g^-1 h - |A|^2 h
                 (equal to ``raw`` whenever the Gauss equation holds)
* ``gauge``      ``raw`` on the target plus the Lie derivative of (g, h) along
                 the De Turck field V, which makes the system strictly parabolic.

Mixed placements such as ``h_i^k h_kj`` are always resolved with the current
metric, ``h_il g^{lk} h_kj``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dposv

from .domain import DomainSpec
from .errors import MapLeftDomain, NotPositiveDefinite
from .fields import Sym2Field, pack_sym2
from .geometry import Curvature, christoffel_full, covd_full, covd_vector_full, inv_full, mm

RAW = "raw"
SIMPLIFIED = "simplified"
GAUGE = "gauge"
VARIANTS = (RAW, SIMPLIFIED, GAUGE)


@dataclass(frozen=True)
class SpacelikeState:
    """The evolving pair ``(g, h)`` at flow time ``t``."""

    g: Sym2Field
    h: Sym2Field
    t: float
    dom: DomainSpec

    @property
    def n(self):
        return self.dom.n

    def with_fields(self, g, h, t=None):
        return replace(self, g=g, h=h, t=self.t if t is None else t)


@dataclass
class GaugeData:
    """De Turck companion data.

    ``s`` is the fixed background metric on the target, ``F`` the target
    coordinates of the evolving diffeomorphism at each grid point (identity at
    t = 0) and ``V`` the most recently evaluated De Turck vector field.
    """

    s: Sym2Field
    F: np.ndarray
    V: np.ndarray | None = None
    _gam_s: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def identity(cls, s: Sym2Field, dom: DomainSpec) -> "GaugeData":
        F = dom.coords.copy() if not dom.is_homogeneous else np.zeros(dom.n)
        return cls(s=s, F=F, V=np.zeros_like(F))

    def gam_s(self, dom):
        if self._gam_s is None:
            s = self.s.full()
            self._gam_s = christoffel_full(s, inv_full(s), dom)
        return self._gam_s


# ---------------------------------------------------------------------------
# scalar invariants
# ---------------------------------------------------------------------------

def mean_curvature_full(g_inv, h):
    return np.einsum("ij...,ij...->...", g_inv, h)


def norm_A2_full(g_inv, h):
    m = mm(g_inv, h)  # h^k_j = g^{kl} h_lj
    return np.einsum("ij...,ji...->...", m, m)


def mean_curvature(st: SpacelikeState) -> np.ndarray:
    """``H = g^ij h_ij`` at every grid point."""
    return mean_curvature_full(inv_full(st.g.full()), st.h.full())


def norm_A2(st: SpacelikeState) -> np.ndarray:
    """``|A|^2 = g^ik g^jl h_ij h_kl`` at every grid point."""
    return norm_A2_full(inv_full(st.g.full()), st.h.full())


# ---------------------------------------------------------------------------
# right-hand sides on full arrays
# ---------------------------------------------------------------------------

def point_rhs(g, h, curvature: float, variant: str):
    """Homogeneous-point right-hand side on plain ``(n, n)`` matrices.

    Same formulas as the grid path with every spatial derivative zero.  The
    space-form Ricci tensor is ``s g`` with ``s = K (n-1)``, so
    ``Ric h^-1 h`` collapses to ``s h``.
    """
    n = g.shape[0]
    # One Cholesky solve gives g^-1 h, det g and the positivity check together
    chol, hm, info = dposv(g, h)
    if info != 0:
        raise NotPositiveDefinite(())
    h2 = h @ hm
    A2 = (hm @ hm).trace()
    h2 = 0.5 * (h2 + h2.T)
    h3 = h2 @ hm
    h3 = 0.5 * (h3 + h3.T)
    if variant == SIMPLIFIED:
        H = hm.trace()
        return (2.0 * H) * h, (2.0 * H) * h2 - A2 * h
    s = curvature * (n - 1) * chol.diagonal().prod() ** (-2.0 / n)
    return 2.0 * h2 - (2.0 * s) * g, 2.0 * h3 - (2.0 * s + A2) * h


def raw_rhs_full(g, h, dom: DomainSpec, curv: Curvature | None = None):
    if dom.is_homogeneous and curv is None:
        return point_rhs(g, h, dom.curvature, RAW)
    curv = curv or Curvature(g, dom)
    hm = mm(curv.ginv, h)
    h2 = mm(h, hm)
    A2 = np.einsum("ij...,ji...->...", hm, hm)
    ric = curv.ric
    rh = mm(ric, hm)
    dg = -2.0 * ric + 2.0 * h2
    dh = -rh - rh.swapaxes(0, 1) + 2.0 * mm(h2, hm) - A2 * h
    if not dom.is_homogeneous:
        dh = dh + curv.laplacian(h)
    return dg, dh


def simplified_rhs_full(g, h, dom: DomainSpec, curv: Curvature | None = None):
    if dom.is_homogeneous and curv is None:
        return point_rhs(g, h, dom.curvature, SIMPLIFIED)
    curv = curv or Curvature(g, dom)
    hm = mm(curv.ginv, h)
    H = np.trace(hm)
    h2 = mm(h, hm)
    A2 = np.einsum("ij...,ji...->...", hm, hm)
    dg = 2.0 * H * h
    dh = 2.0 * H * h2 - A2 * h
    if not dom.is_homogeneous:
        dh = dh + curv.laplacian(h)
    return dg, dh


def deturck_vector_full(g, s_gam, dom: DomainSpec, curv: Curvature | None = None):
    curv = curv or Curvature(g, dom)
    if dom.is_homogeneous:
        return np.zeros(g.shape[1:])
    return np.einsum("bc...,abc...->a...", curv.ginv, curv.gam - s_gam)


def gauge_terms_full(g, h, V, dom: DomainSpec, curv: Curvature, transport=True):
    """Lie derivative of ``(g, h)`` along ``V``, using the Levi-Civita connection of g."""
    if dom.is_homogeneous:
        return np.zeros_like(g), np.zeros_like(h)
    dV = covd_vector_full(V, curv.gam, dom)  # dV[a, k] = nabla_a V^k
    dV_low = mm(dV, g)  # nabla_a V_b
    lg = dV_low + dV_low.swapaxes(0, 1)
    hdV = mm(dV, h)  # h_kb nabla_a V^k
    lh = hdV + hdV.swapaxes(0, 1)
    if transport:
        dh = covd_full(h, curv.gam, dom, 2)
        lh = lh + np.einsum("c...,cab...->ab...", V, dh)
    return lg, lh


def gauge_rhs_full(g, h, s_gam, dom, curv=None, transport=True):
    curv = curv or Curvature(g, dom)
    dg, dh = raw_rhs_full(g, h, dom, curv)
    V = deturck_vector_full(g, s_gam, dom, curv)
    lg, lh = gauge_terms_full(g, h, V, dom, curv, transport)
    return dg + lg, dh + lh, V


# ---------------------------------------------------------------------------
# public field-level operations
# ---------------------------------------------------------------------------

def _packed(dg, dh, n):
    return Sym2Field(pack_sym2(dg), n), Sym2Field(pack_sym2(dh), n)


def rhs_raw(st: SpacelikeState):
    """Time derivatives ``(dg, dh)`` of the flow as originally stated."""
    dg, dh = raw_rhs_full(st.g.full(), st.h.full(), st.dom)
    return _packed(dg, dh, st.n)


def rhs_simplified(st: SpacelikeState):
    """Time derivatives after substituting the Gauss equation."""
    dg, dh = simplified_rhs_full(st.g.full(), st.h.full(), st.dom)
    return _packed(dg, dh, st.n)


def deturck_vector(g_hat: Sym2Field, s: Sym2Field, dom: DomainSpec) -> np.ndarray:
    """``V^a = g^{bc} (Gamma^a_bc(g) - Gamma^a_bc(s))``."""
    sf = s.full()
    s_gam = christoffel_full(sf, inv_full(sf), dom)
    return deturck_vector_full(g_hat.full(), s_gam, dom)


def rhs_gauge_fixed(g_hat: Sym2Field, h_hat: Sym2Field, s: Sym2Field, dom: DomainSpec,
                    transport=True):
    """Gauge-fixed time derivatives ``(dg, dh)`` on the target.

    ``transport`` keeps the ``V^c nabla_c h_ab`` part of the Lie derivative
    of h; without it the pull-back no longer reproduces the ungauged flow.
    """
    sf = s.full()
    s_gam = christoffel_full(sf, inv_full(sf), dom)
    dg, dh, _ = gauge_rhs_full(g_hat.full(), h_hat.full(), s_gam, dom, transport=transport)
    return _packed(dg, dh, dom.n)


RHS = {RAW: raw_rhs_full, SIMPLIFIED: simplified_rhs_full}


# ---------------------------------------------------------------------------
# diffeomorphism ODE and pull-back
# ---------------------------------------------------------------------------

def check_map(F: np.ndarray, dom: DomainSpec) -> None:
    """Raise :class:`MapLeftDomain` if F leaves a patch by more than one cell."""
    if dom.kind != "patch":
        return
    idx = dom.to_index(F)
    hi = np.reshape(np.asarray(dom.shape) - 1, (dom.n,) + (1,) * dom.grid_ndim)
    excursion = np.maximum(-idx, idx - hi).max(axis=0)
    if np.any(excursion > 1.0) or not np.all(np.isfinite(excursion)):
        bad = np.argwhere(~(excursion <= 1.0))[0]
        raise MapLeftDomain(bad, excursion[tuple(bad)])


def diffeo_rate(F: np.ndarray, V: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """``dF/dt = -V(F)``, with V sampled on the grid and interpolated at F."""
    if dom.is_homogeneous:
        return np.zeros_like(F)
    return -dom.interpolate(V, F)


def advance_diffeo(F: np.ndarray, V_of_t, t0: float, t1: float, substeps: int,
                   dom: DomainSpec) -> np.ndarray:
    """Integrate ``dF/dt = -V(t) o F`` from t0 to t1 with classical RK4.

    ``V_of_t(t)`` returns the De Turck field on the grid at time ``t``.
    """
    dt = (t1 - t0) / substeps
    t = t0
    F = np.array(F, dtype=float)
    for k in range(substeps):
        k1 = diffeo_rate(F, V_of_t(t), dom)
        k2 = diffeo_rate(F + 0.5 * dt * k1, V_of_t(t + 0.5 * dt), dom)
        k3 = diffeo_rate(F + 0.5 * dt * k2, V_of_t(t + 0.5 * dt), dom)
        k4 = diffeo_rate(F + dt * k3, V_of_t(t + dt), dom)
        F = F + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (k + 1) * dt
        check_map(F, dom)
    return F


def map_jacobian(F: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """``J[i, a] = d F^a / d x^i``; on the torus F minus the identity is periodic."""
    if dom.kind == "torus":
        eye = np.eye(dom.n).reshape((dom.n, dom.n) + (1,) * dom.grid_ndim)
        return dom.grad(F - dom.coords) + eye
    return dom.grad(F)


def pullback_full(F, T, dom: DomainSpec):
    if dom.is_homogeneous:
        return T.copy()
    J = map_jacobian(F, dom)
    TF = dom.interpolate(T, F)
    JT = np.einsum("ia...,ab...->ib...", J, TF)
    return np.einsum("ib...,jb...->ij...", JT, J)


def pullback_state(F: np.ndarray, g_hat: Sym2Field, h_hat: Sym2Field, dom: DomainSpec):
    """Recover ``(g, h) = (F^* g_hat, F^* h_hat)`` on the source grid."""
    check_map(F, dom)
    g = pullback_full(F, g_hat.full(), dom)
    h = pullback_full(F, h_hat.full(), dom)
    return Sym2Field.from_full(g), Sym2Field.from_full(h)
