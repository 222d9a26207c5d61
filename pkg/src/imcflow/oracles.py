"""Exact solutions and independent checking instruments.

The umbilic family ``h = lambda(t) g(t)`` with ``g(t) = (1 + 2 n lambda0^2 t) g0``
and ``lambda(t) = lambda0 / sqrt(1 + 2 n lambda0^2 t)`` solves the flow when
``g0`` has constant sectional curvature ``-lambda0^2``; substituting it reduces
the system to ``lambda' = -n lambda^3``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import STENCIL_WIDTH, DomainSpec
from .errors import InsufficientLevels, OutsideChart
from .fields import Sym2Field, pack_sym2
from .flows import SpacelikeState
from .geometry import as_mat

# keeps the conformal factor of the ball chart below ~7.7
MAX_BALL_RADIUS = 0.7


# ---------------------------------------------------------------------------
# constant-curvature charts
# ---------------------------------------------------------------------------

def hyperbolic_ball_metric(n: int, point) -> np.ndarray:
    """Poincare ball metric ``4 delta_ij / (1 - |x|^2)^2`` (curvature -1)."""
    x = np.asarray(point, dtype=float)
    if x.shape[0] != n:
        raise ValueError(f"point needs {n} coordinates")
    r2 = np.sum(x * x, axis=0)
    if np.any(r2 >= 1.0):
        raise OutsideChart("point lies outside the unit ball chart")
    psi = 4.0 / (1.0 - r2) ** 2
    return np.einsum("ij,...->ij...", np.eye(n), psi)


def sphere_chart_metric(n: int, point) -> np.ndarray:
    """Stereographic round-sphere metric ``4 delta_ij / (1 + |x|^2)^2`` (curvature +1)."""
    x = np.asarray(point, dtype=float)
    r2 = np.sum(x * x, axis=0)
    return np.einsum("ij,...->ij...", np.eye(n), 4.0 / (1.0 + r2) ** 2)


def conformal_christoffel(du: np.ndarray) -> np.ndarray:
    """Closed-form Christoffels of ``e^{2u} delta`` from the gradient of u.

    ``Gamma^k_ij = delta^k_i u_j + delta^k_j u_i - delta_ij u_k``.
    """
    n = du.shape[0]
    eye = np.eye(n)
    return (
        np.einsum("ki,j...->kij...", eye, du)
        + np.einsum("kj,i...->kij...", eye, du)
        - np.einsum("ij,k...->kij...", eye, du)
    )


def ball_log_factor_grad(x: np.ndarray) -> np.ndarray:
    """Gradient of ``u = log(2 / (1 - |x|^2))``."""
    r2 = np.sum(x * x, axis=0)
    return 2.0 * x / (1.0 - r2)


def sphere_log_factor_grad(x: np.ndarray) -> np.ndarray:
    r2 = np.sum(x * x, axis=0)
    return -2.0 * x / (1.0 + r2)


def constant_curvature_riemann(g: np.ndarray, K) -> np.ndarray:
    """``K (g_ik g_jl - g_il g_jk)`` in the package's sign convention."""
    return K * (np.einsum("ik...,jl...->ijkl...", g, g) - np.einsum("il...,jk...->ijkl...", g, g))


def ball_patch(n: int, points: int, half_width: float | None = None, boundary="dirichlet_oracle",
               interp_order=1) -> DomainSpec:
    """Centred cube inside the ball chart with its corners at radius <= 0.7."""
    if half_width is None:
        half_width = MAX_BALL_RADIUS / np.sqrt(n)
    if half_width * np.sqrt(n) > MAX_BALL_RADIUS + 1e-12:
        raise OutsideChart(f"patch corners exceed radius {MAX_BALL_RADIUS}")
    return DomainSpec.patch(n, points, half_width, boundary=boundary, interp_order=interp_order)


# ---------------------------------------------------------------------------
# the umbilic family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UmbilicSolution:
    """Exact umbilic solution with base metric of curvature ``-lambda0^2``.

    On the homogeneous backend the base metric is the identity and the domain
    carries the space-form curvature ``-lambda0^2``; on a patch it is the
    Poincare ball metric divided by ``lambda0^2``.
    """

    n: int = 4
    lambda0: float = 1.0

    def scale(self, t):
        return 1.0 + 2.0 * self.n * self.lambda0 ** 2 * t

    def lam(self, t):
        return self.lambda0 / np.sqrt(self.scale(t))

    def H(self, t):
        return self.n * self.lam(t)

    def A2(self, t):
        return self.n * self.lam(t) ** 2

    def homogeneous_domain(self) -> DomainSpec:
        return DomainSpec.homogeneous(self.n, curvature=-self.lambda0 ** 2)

    def base_metric(self, dom: DomainSpec) -> np.ndarray:
        if dom.is_homogeneous:
            return np.eye(self.n)
        if dom.kind != "patch":
            raise ValueError("the umbilic family lives on a homogeneous point or a ball patch")
        return hyperbolic_ball_metric(self.n, dom.coords) / self.lambda0 ** 2

    def state(self, t: float, dom: DomainSpec | None = None) -> SpacelikeState:
        dom = dom or self.homogeneous_domain()
        g0 = self.base_metric(dom)
        c = self.scale(t)
        lam = self.lam(t)
        g = Sym2Field(pack_sym2(c * g0), self.n)
        h = Sym2Field(pack_sym2((lam * c) * g0), self.n)
        return SpacelikeState(g, h, float(t), dom)

    def rates(self, t: float, dom: DomainSpec):
        """Exact ``(dg/dt, dh/dt)`` as packed arrays over the grid."""
        g0 = pack_sym2(self.base_metric(dom))
        k = self.n * self.lambda0 ** 2
        dg = 2.0 * k * g0
        dh = (self.lambda0 * k / np.sqrt(self.scale(t))) * g0
        return dg, dh

    def boundary_rates(self, t, dom):
        return self.rates(t, dom)


def umbilic_state(sol: UmbilicSolution, t: float, dom: DomainSpec | None = None) -> SpacelikeState:
    """Exact umbilic state at time ``t`` (homogeneous unless a patch is given)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return sol.state(t, dom)


@dataclass(frozen=True)
class HyperbolicBackground:
    """Poincare-ball patch carrying the exact umbilic data ``h = lambda0 g``."""

    n: int = 3
    lambda0: float = 1.0
    half_width: float | None = None

    def domain(self, points: int, boundary="dirichlet_oracle", interp_order=1) -> DomainSpec:
        return ball_patch(self.n, points, self.half_width, boundary, interp_order)

    @property
    def solution(self) -> UmbilicSolution:
        return UmbilicSolution(self.n, self.lambda0)

    def state(self, dom: DomainSpec, t: float = 0.0) -> SpacelikeState:
        return self.solution.state(t, dom)


# ---------------------------------------------------------------------------
# perturbations and seeds
# ---------------------------------------------------------------------------

def _bump(r2):
    # C^5 polynomial bump; the exp(-1/(1-r^2)) profile has steep flanks that
    # keep grid-convergence studies pre-asymptotic on affordable grids
    return np.clip(1.0 - r2, 0.0, None) ** 6


def seeded_perturbation(dom: DomainSpec, amplitude: float, seed: int, n_bumps: int = 3,
                        width: float | None = None) -> Sym2Field:
    """Deterministic sum of compactly supported C^5 bumps times random
    symmetric matrices, in coordinate components.

    Each matrix has unit Frobenius norm and each bump peaks at 1, so
    ``amplitude`` bounds the pointwise size up to overlap.  On a patch every
    bump stays more than one stencil width away from the boundary.
    """
    n = dom.n
    rng = np.random.default_rng(seed)
    out = np.zeros((n, n) + dom.shape)
    if amplitude == 0.0 or dom.is_homogeneous:
        return Sym2Field.from_full(out)
    x = dom.coords
    col = (n,) + (1,) * dom.grid_ndim
    lo = np.asarray(dom.origin)
    ext = np.asarray(dom.spacing) * (np.asarray(dom.shape) - (1 if dom.kind == "patch" else 0))
    if width is None:
        width = 0.3 * float(ext.min())
    # a physical buffer keeps bump placement independent of the resolution
    # once the grid is fine enough for the stencil layer to fit inside it
    margin = width + max(0.15 * float(ext.min()), (STENCIL_WIDTH + 1) * max(dom.spacing))
    for _ in range(n_bumps):
        if dom.kind == "patch":
            span = ext - 2 * margin
            if np.any(span <= 0):
                raise ValueError("bump width too large for the patch")
            c = lo + margin + rng.random(n) * span
            d = x - c.reshape(col)
        else:
            c = lo + rng.random(n) * ext
            d = x - c.reshape(col)
            d = d - ext.reshape(col) * np.round(d / ext.reshape(col))
        A = rng.standard_normal((n, n))
        A = 0.5 * (A + A.T)
        A /= np.linalg.norm(A)
        b = _bump(np.sum(d * d, axis=0) / width ** 2)
        out += np.einsum("ij,...->ij...", A, b)
    return Sym2Field.from_full(amplitude * out)


def hyperboloid_perturbed_state(dom: DomainSpec, delta: float, seed: int, lambda0: float = 1.0,
                                target: str = "h", n_bumps: int = 3) -> SpacelikeState:
    """Umbilic ball-patch data with a metric-normalized interior perturbation.

    ``target`` selects which of g and h receives the perturbation
    (``"h"``, ``"g"`` or ``"both"``).  The perturbation is multiplied by the
    conformal factor of the base metric so that ``delta`` measures it in the
    metric's own norm.
    """
    base = UmbilicSolution(dom.n, lambda0).state(0.0, dom)
    g0 = base.g.full()
    psi = g0[0, 0]
    g, h = g0, base.h.full()
    if target in ("h", "both"):
        h = h + psi * seeded_perturbation(dom, delta, seed, n_bumps).full()
    if target in ("g", "both"):
        g = g + psi * seeded_perturbation(dom, delta, seed + 1, n_bumps).full()
    if target not in ("h", "g", "both"):
        raise ValueError(f"unknown perturbation target {target!r}")
    return SpacelikeState(Sym2Field.from_full(g), Sym2Field.from_full(h), 0.0, dom)


def _fourier_field(x, rng, modes, ext):
    """Random smooth periodic scalar with max |.| = 1."""
    n = x.shape[0]
    f = np.zeros(x.shape[1:])
    ks = [k for k in np.ndindex(*(2 * modes + 1,) * n) if any(np.asarray(k) - modes)]
    for k in ks:
        kv = (np.asarray(k) - modes) * 2 * np.pi / ext
        phase = np.einsum("i...,i->...", x, kv)
        f += rng.standard_normal() * np.cos(phase) + rng.standard_normal() * np.sin(phase)
    return f / np.max(np.abs(f))


def pinching_blend(S: np.ndarray, target_eps: float) -> np.ndarray:
    """Blend a positive field of flat-frame matrices with its umbilic part so
    that ``min lambda_min(S)/tr(S)`` equals ``target_eps``."""
    n = S.shape[0]
    tr = np.trace(S)
    r_min = np.min(np.linalg.eigvalsh(as_mat(S))[..., 0] / tr)
    if not (0 < target_eps <= 1.0 / n) or r_min >= 1.0 / n:
        raise ValueError("pinching target must lie in (0, 1/n] and the seed must be non-umbilic")
    s = (target_eps - r_min) / (1.0 / n - r_min)
    return (1 - s) * S + s * np.einsum("ij,...->ij...", np.eye(n), tr / n)


def torus_random_state(dom: DomainSpec, amplitude: float, seed: int, h_scale: float = 1.0,
                       pinch_eps: float | None = None, modes: int = 1) -> SpacelikeState:
    """Conformally flat metric ``e^{2u} delta`` with a positive second fundamental form.

    ``u`` is a random low-mode Fourier field of max size ``amplitude``;
    ``h = e^{2u} S`` with ``S`` positive definite, optionally blended so the
    initial pinching ``min lambda_min(h; H g)`` equals ``pinch_eps``.
    """
    if dom.kind != "torus":
        raise ValueError("torus_random_state needs a torus domain")
    n = dom.n
    rng = np.random.default_rng(seed)
    x = dom.coords
    ext = np.asarray(dom.period)
    u = amplitude * _fourier_field(x, rng, modes, ext)
    a = h_scale * (1.0 + 0.3 * _fourier_field(x, rng, modes, ext))
    eye = np.eye(n)
    B = np.zeros((n, n) + dom.shape)
    for i in range(n):
        for j in range(i, n):
            val = _fourier_field(x, rng, modes, ext)
            B[i, j] += val
            if i != j:
                B[j, i] += val
    B = B - np.einsum("ij,...->ij...", eye, np.trace(B) / n)
    bnorm = np.max(np.abs(np.linalg.eigvalsh(as_mat(B))))
    S = np.einsum("ij,...->ij...", eye, a) + (0.5 * h_scale * 0.7 / bnorm) * B
    if pinch_eps is not None:
        S = pinching_blend(S, pinch_eps)
    conf = np.exp(2.0 * u)
    g = np.einsum("ij,...->ij...", eye, conf)
    h = conf * S
    return SpacelikeState(Sym2Field.from_full(g), Sym2Field.from_full(h), 0.0, dom)


# ---------------------------------------------------------------------------
# refinement studies
# ---------------------------------------------------------------------------

def convergence_order(errors) -> float:
    """Least-squares slope of ``log e`` against ``log delta``."""
    errors = list(errors)
    if len(errors) < 3:
        raise InsufficientLevels(f"need at least 3 refinement levels, got {len(errors)}")
    d = np.array([e[0] for e in errors], dtype=float)
    e = np.array([e[1] for e in errors], dtype=float)
    if np.any(e <= 0) or np.any(d <= 0):
        raise ValueError("errors and spacings must be positive")
    return float(np.polyfit(np.log(d), np.log(e), 1)[0])
