"""Discrete differential geometry on the domain backends.

Sign conventions (checked by :func:`convention_self_test`)::

    R^r_{smv} = d_m Gamma^r_{vs} - d_v Gamma^r_{ms}
                + Gamma^r_{ml} Gamma^l_{vs} - Gamma^r_{vl} Gamma^l_{ms}
    R_{ijkl}  = g_{ir} R^r_{jkl}
    R_{ij}    = g^{kl} R_{kilj}
    sec(e_i, e_j) = R_{ijij} / (g_ii g_jj - g_ij^2)

so a space of constant curvature K has R_ijkl = K (g_ik g_jl - g_il g_jk) and
R_ij = K (n-1) g_ij.  For the hyperbolic ball (K = -1) this is
R_ijkl = g_il g_jk - g_ik g_jl, which is the Gauss equation with h = g.

Array-level helpers work on full component arrays (component axes first,
grid axes last); the
public operations take and return the packed field types.
"""
from __future__ import annotations

import warnings
from functools import cached_property

import numpy as np

from .domain import DomainSpec
from .errors import DegenerateMetric, NotPositiveDefinite
from .fields import (ChristoffelField, Riem4Field, Sym2Field, Sym3Field, bianchi_residual,
                     project_riemann, sym_index, sym_pairs)

_LETTERS = "abcdefgh"


class ClosedIntegralOnPatchWarning(UserWarning):
    """A closed-manifold integral was evaluated on a bounded patch."""


# ---------------------------------------------------------------------------
# pointwise linear algebra (component axes first, grid last)
# ---------------------------------------------------------------------------

def as_mat(A: np.ndarray) -> np.ndarray:
    """View ``(n, n) + grid`` as ``grid + (n, n)`` for batched linalg."""
    if A.ndim == 2:
        return A
    return np.moveaxis(A, (0, 1), (-2, -1))


def from_mat(B: np.ndarray) -> np.ndarray:
    if B.ndim == 2:
        return B
    return np.ascontiguousarray(np.moveaxis(B, (-2, -1), (0, 1)))


def mm(A, B):
    """Pointwise matrix product of two ``(n, n) + grid`` fields."""
    if A.ndim == 2 and B.ndim == 2:
        return A @ B
    return np.einsum("ik...,kj...->ij...", A, B)


def det_full(g: np.ndarray) -> np.ndarray:
    return np.linalg.det(as_mat(g))


def inv_full(g: np.ndarray) -> np.ndarray:
    return from_mat(np.linalg.inv(as_mat(g)))


def leading_minors_positive(g: np.ndarray) -> np.ndarray:
    """Boolean field: every leading principal minor of ``g`` is positive."""
    n = g.shape[0]
    ok = g[0, 0] > 0
    for k in range(2, n + 1):
        ok = ok & (det_full(g[:k, :k]) > 0)
    return ok


def first_bad_point(mask_ok: np.ndarray):
    bad = np.argwhere(~np.asarray(mask_ok))
    return tuple(bad[0]) if len(bad) else ()


def inverse_metric(g: Sym2Field) -> Sym2Field:
    """Pointwise inverse of a positive-definite metric."""
    full = g.full()
    ok = leading_minors_positive(full)
    if not np.all(ok):
        raise NotPositiveDefinite(first_bad_point(ok))
    try:
        np.linalg.cholesky(as_mat(full))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(first_bad_point(ok)) from None
    return Sym2Field.from_full(inv_full(full))


def lambda_max_inverse(g: np.ndarray) -> float:
    """Largest eigenvalue of ``g^{-1}`` over the grid, i.e. ``1/min eig(g)``."""
    lam_min = np.min(np.linalg.eigvalsh(as_mat(g)))
    if not np.isfinite(lam_min) or lam_min <= 0:
        raise DegenerateMetric(f"smallest metric eigenvalue is {lam_min}")
    return float(1.0 / lam_min)


def grad_sym(T: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """``dom.grad`` of a field symmetric in its last two component axes.

    Differentiates only the independent components.
    """
    n = dom.n
    k = T.ndim - dom.grid_ndim
    lead = (slice(None),) * (k - 2)
    packed = T[lead + sym_pairs(n)]
    dP = dom.grad(packed)
    return dP[(slice(None),) + lead + (sym_index(n),)]


# ---------------------------------------------------------------------------
# connection and curvature, full arrays
# ---------------------------------------------------------------------------

def christoffel_full(g: np.ndarray, ginv: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """``Gamma[k, i, j, ...]`` from central differences of ``g``."""
    n = dom.n
    if dom.is_homogeneous:
        return np.zeros((n, n, n) + g.shape[2:])
    dg = grad_sym(g, dom)  # dg[a, b, c] = d_a g_bc
    first = 0.5 * (
        np.einsum("ijl...->lij...", dg) + np.einsum("jil...->lij...", dg) - dg
    )
    return np.einsum("kl...,lij...->kij...", ginv, first)


def space_form_riemann(g: np.ndarray, curvature: float) -> np.ndarray:
    n = g.shape[0]
    K = curvature * det_full(g) ** (-1.0 / n)
    return K * (
        np.einsum("ik...,jl...->ijkl...", g, g) - np.einsum("il...,jk...->ijkl...", g, g)
    )


def riemann_raw_full(g: np.ndarray, gam: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """Lowered ``R_ijkl`` assembled from the Christoffel symbols, unsymmetrized."""
    if dom.is_homogeneous:
        return space_form_riemann(g, dom.curvature)
    dG = grad_sym(gam, dom)  # dG[m, r, a, b] = d_m Gamma^r_ab
    quad = np.einsum("rml...,lvs...->rsmv...", gam, gam)
    up = (
        np.einsum("mrvs...->rsmv...", dG)
        - np.einsum("vrms...->rsmv...", dG)
        + quad
        - quad.swapaxes(2, 3)
    )
    return np.einsum("ir...,rjkl...->ijkl...", g, up)


def ricci_from_christoffel(gam: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """``Ric_sv = R^r_srv`` contracted before assembly, symmetrized.

    Cheaper than lowering and projecting the full tensor; agrees with
    :func:`ricci_full` of the projected tensor up to truncation error.
    """
    dG = grad_sym(gam, dom)  # dG[m, r, a, b] = d_m Gamma^r_ab
    tr = np.einsum("rra...->a...", gam)
    ric = (
        np.einsum("rrvs...->vs...", dG)
        - np.einsum("vrrs...->vs...", dG)
        + np.einsum("l...,lvs...->vs...", tr, gam)
        - np.einsum("rvl...,lrs...->vs...", gam, gam)
    )
    return 0.5 * (ric + ric.swapaxes(0, 1))


def symmetrize_riemann(R: np.ndarray) -> np.ndarray:
    return project_riemann(R)


def ricci_full(R: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    ric = np.einsum("kl...,kilj...->ij...", ginv, R)
    return 0.5 * (ric + ric.swapaxes(0, 1))


def scalar_full(ric: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    return np.einsum("ij...,ij...->...", ginv, ric)


def covd_full(T: np.ndarray, gam: np.ndarray, dom: DomainSpec, rank: int,
              sym_last2: bool = False) -> np.ndarray:
    """Covariant derivative of a covariant rank-``rank`` tensor.

    The derivative index becomes the new leading axis.  ``sym_last2`` declares
    ``T`` symmetric in its last two indices so only those components are
    differentiated.
    """
    if dom.is_homogeneous:
        return np.zeros((dom.n,) + T.shape)
    out = grad_sym(T, dom) if sym_last2 else dom.grad(T)
    slots = _LETTERS[:rank]
    for a in range(rank):
        if sym_last2 and a == rank - 1:
            # mirror of the previous slot's term under the declared symmetry
            out -= term.swapaxes(rank - 1, rank)
            continue
        src = slots[:a] + "z" + slots[a + 1:]
        term = np.einsum(f"zi{slots[a]}...,{src}...->i{slots}...", gam, T)
        out -= term
    return out


def covd_vector_full(V: np.ndarray, gam: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """``(nabla_i V)^k = d_i V^k + Gamma^k_ib V^b`` as ``[i, k, ...]``."""
    if dom.is_homogeneous:
        return np.zeros((dom.n,) + V.shape)
    return dom.grad(V) + np.einsum("kib...,b...->ik...", gam, V)


def laplacian_sym2_full(T, ginv, gam, dom):
    if dom.is_homogeneous:
        return np.zeros_like(T)
    dT = covd_full(T, gam, dom, 2, sym_last2=True)
    ddT = covd_full(dT, gam, dom, 3, sym_last2=True)
    return np.einsum("mn...,mnjk...->jk...", ginv, ddT)


def laplacian_scalar_full(f, ginv, gam, dom):
    if dom.is_homogeneous:
        return np.zeros_like(f)
    ddf = covd_full(dom.grad(f), gam, dom, 1)
    return np.einsum("mn...,mn...->...", ginv, ddf)


class Curvature:
    """Lazily evaluated curvature quantities of one metric (full arrays)."""

    def __init__(self, g: np.ndarray, dom: DomainSpec, ginv: np.ndarray | None = None):
        self.g = g
        self.dom = dom
        if ginv is not None:
            self.__dict__["ginv"] = ginv

    @cached_property
    def ginv(self):
        return inv_full(self.g)

    @cached_property
    def gam(self):
        return christoffel_full(self.g, self.ginv, self.dom)

    @cached_property
    def riem_raw(self):
        return riemann_raw_full(self.g, self.gam, self.dom)

    @cached_property
    def riem(self):
        if self.dom.is_homogeneous:
            return self.riem_raw
        return symmetrize_riemann(self.riem_raw)

    @cached_property
    def ric(self):
        if self.dom.is_homogeneous:
            n = self.dom.n
            K = self.dom.curvature * det_full(self.g) ** (-1.0 / n)
            return K * (n - 1) * self.g
        return ricci_from_christoffel(self.gam, self.dom)

    @cached_property
    def scalar(self):
        return scalar_full(self.ric, self.ginv)

    def covd(self, T, rank=2):
        return covd_full(T, self.gam, self.dom, rank)

    def laplacian(self, T):
        return laplacian_sym2_full(T, self.ginv, self.gam, self.dom)


# ---------------------------------------------------------------------------
# public field-level operations
# ---------------------------------------------------------------------------

def christoffel(g: Sym2Field, dom: DomainSpec) -> ChristoffelField:
    ginv = inverse_metric(g).full()
    return ChristoffelField.from_full(christoffel_full(g.full(), ginv, dom))


def riemann(g: Sym2Field, gam: ChristoffelField, dom: DomainSpec) -> Riem4Field:
    """Lowered Riemann tensor, projected onto the curvature index symmetries."""
    return Riem4Field.from_full(riemann_raw_full(g.full(), gam.full(), dom))


def riemann_health(g: Sym2Field, gam: ChristoffelField, dom: DomainSpec, margin=None) -> dict:
    """Discretization health of the assembled Riemann tensor.

    ``asymmetry`` is the largest deviation from the curvature symmetries before
    projection; ``bianchi`` the largest first-Bianchi residual after it.  Patch
    boundary layers are excluded.
    """
    raw = riemann_raw_full(g.full(), gam.full(), dom)
    sym = symmetrize_riemann(raw)
    mask = dom.interior_mask() if margin is None else dom.interior_mask(margin)
    asym = np.abs(raw - sym)
    bian = np.abs(bianchi_residual(sym))
    if dom.is_homogeneous:
        return {"asymmetry": float(asym.max()), "bianchi": float(bian.max())}
    return {"asymmetry": float(asym[..., mask].max()), "bianchi": float(bian[..., mask].max())}


def ricci(R: Riem4Field, g_inv: Sym2Field) -> Sym2Field:
    return Sym2Field.from_full(ricci_full(R.full(), g_inv.full()))


def scalar_curvature(ric: Sym2Field, g_inv: Sym2Field) -> np.ndarray:
    return scalar_full(ric.full(), g_inv.full())


def covd_sym2(T: Sym2Field, gam: ChristoffelField, dom: DomainSpec) -> Sym3Field:
    return Sym3Field.from_full(covd_full(T.full(), gam.full(), dom, 2))


def rough_laplacian_sym2(T: Sym2Field, g_inv: Sym2Field, gam: ChristoffelField,
                         dom: DomainSpec) -> Sym2Field:
    return Sym2Field.from_full(laplacian_sym2_full(T.full(), g_inv.full(), gam.full(), dom))


def grad_scalar(f: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """Coordinate gradient ``d_i f`` as a covector field ``(n,) + grid``."""
    return dom.grad(np.asarray(f, dtype=float))


def laplacian_scalar(f: np.ndarray, g_inv: Sym2Field, gam: ChristoffelField,
                     dom: DomainSpec) -> np.ndarray:
    return laplacian_scalar_full(f, g_inv.full(), gam.full(), dom)


def volume_element_full(g: np.ndarray, dom: DomainSpec) -> np.ndarray:
    return np.sqrt(det_full(g)) * dom.cell_volume


def volume_element(g: Sym2Field, dom: DomainSpec) -> np.ndarray:
    """``sqrt(det g)`` times the coordinate cell volume, per grid point."""
    return volume_element_full(g.full(), dom)


def integrate_full(f, g, dom: DomainSpec, closed=True) -> float:
    if closed and dom.kind == "patch":
        warnings.warn("closed-manifold integral requested on a patch; the boundary is open",
                      ClosedIntegralOnPatchWarning, stacklevel=3)
    return float(np.sum(f * volume_element_full(g, dom)))


def integrate_scalar(f: np.ndarray, g: Sym2Field, dom: DomainSpec, closed=True) -> float:
    """Grid-sum quadrature ``sum f dmu`` (trapezoidal on a periodic grid)."""
    return integrate_full(f, g.full(), dom, closed)


def sectional_full(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Sectional curvature of every coordinate plane, ``[pair, ...]``."""
    n = g.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    num = R[iu, ju, iu, ju]
    den = g[iu, iu] * g[ju, ju] - g[iu, ju] ** 2
    return num / den


def convention_self_test(tol=1e-10) -> None:
    """Assert the sign conventions on an exact constant-curvature point."""
    g = np.diag([2.0, 3.0, 5.0])
    dom = DomainSpec.homogeneous(3, curvature=-1.0)
    curv = Curvature(g, dom)
    K = -1.0 * np.linalg.det(g) ** (-1 / 3)
    # hyperbolic sign: Ric = -(n-1)|K| g and R_ijij < 0
    assert np.allclose(curv.ric, 2 * K * g, atol=tol)
    assert np.all(sectional_full(curv.riem, g) < 0)
    # Gauss equation with h = sqrt(|K|) g reproduces R
    h = np.sqrt(-K) * g
    gauss = np.einsum("il,jk->ijkl", h, h) - np.einsum("ik,jl->ijkl", h, h)
    assert np.allclose(curv.riem, gauss, atol=tol)
