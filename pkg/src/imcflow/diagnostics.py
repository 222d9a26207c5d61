"""Measurements taken along a flow: constraint residuals, pinching,
H and |A|^2 envelopes, the monotone functional, derivative scaling,
parabolic rescaling and sectional curvature.

Extremes and norms on a patch are taken over the interior points (one
stencil width away from the boundary); integrals there are boundary-open.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .domain import DomainSpec
from .errors import (ClosedIntegralOnPatch, EnvelopeViolation, NonpositiveH,
                     ZeroSecondFundamentalForm)
from .fields import Riem4Field, Sym2Field, pack_sym2
from .flows import SpacelikeState, mean_curvature_full, norm_A2_full
from .geometry import Curvature, as_mat, det_full, inv_full, sectional_full

H_FLOOR = 1e-10

CSV_COLUMNS = (
    "t", "H_min", "H_max", "A2_min", "A2_max", "eps", "beta", "F_n", "D1", "D2",
    "normG2", "normC2", "sec_min", "sec_max", "vol", "s1", "s2",
)


def _region(dom: DomainSpec) -> np.ndarray:
    return dom.interior_mask()


def _over(values: np.ndarray, dom: DomainSpec) -> np.ndarray:
    """Values restricted to the measured region, flattened over the grid."""
    if dom.is_homogeneous:
        return np.reshape(values, values.shape + (1,))
    return values[..., _region(dom)]


def _raise_slot(T, ginv, a, rank):
    letters = "abcdef"[:rank]
    src = letters[:a] + "z" + letters[a + 1:]
    return np.einsum(f"{letters[a]}z...,{src}...->{letters}...", ginv, T)


def tensor_norm2(T: np.ndarray, ginv: np.ndarray, rank: int) -> np.ndarray:
    """Pointwise ``|T|^2`` with every index contracted through ``g``."""
    up = T
    for a in range(rank):
        up = _raise_slot(up, ginv, a, rank)
    return np.sum(up * T, axis=tuple(range(rank)))


# ---------------------------------------------------------------------------
# constraint residuals
# ---------------------------------------------------------------------------

def gauss_residual_full(R: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``G_ijkl = R_ijkl - (h_il h_jk - h_ik h_jl)``."""
    return R - (np.einsum("il...,jk...->ijkl...", h, h) - np.einsum("ik...,jl...->ijkl...", h, h))


def codazzi_residual_full(dh: np.ndarray) -> np.ndarray:
    """``C_ijk = nabla_i h_jk - nabla_j h_ik`` from ``dh[i, j, k] = nabla_i h_jk``."""
    return dh - dh.swapaxes(0, 1)


def gauss_residual(st: SpacelikeState, curv: Curvature | None = None) -> Riem4Field:
    curv = curv or Curvature(st.g.full(), st.dom)
    return Riem4Field.from_full(gauss_residual_full(curv.riem, st.h.full()))


def codazzi_residual(st: SpacelikeState, curv: Curvature | None = None) -> np.ndarray:
    """Full ``C[i, j, k] + grid``, antisymmetric in ``(i, j)`` by construction."""
    curv = curv or Curvature(st.g.full(), st.dom)
    return codazzi_residual_full(curv.covd(st.h.full()))


@dataclass(frozen=True)
class ResidualNorms:
    """L-infinity and L2 (over ``dmu``) of the pointwise ``|G|^2`` and ``|C|^2``."""

    G_linf: float
    C_linf: float
    G_l2: float
    C_l2: float

    @property
    def normG2(self):
        return self.G_linf

    @property
    def normC2(self):
        return self.C_linf


def residual_norms(st: SpacelikeState, curv: Curvature | None = None) -> ResidualNorms:
    g = st.g.full()
    curv = curv or Curvature(g, st.dom)
    G2 = tensor_norm2(gauss_residual_full(curv.riem, st.h.full()), curv.ginv, 4)
    C2 = tensor_norm2(codazzi_residual_full(curv.covd(st.h.full())), curv.ginv, 3)
    mu = _over(np.sqrt(det_full(g)) * st.dom.cell_volume, st.dom)
    G2r, C2r = _over(G2, st.dom), _over(C2, st.dom)
    return ResidualNorms(
        float(G2r.max()), float(C2r.max()),
        float(np.sqrt(np.sum(G2r ** 2 * mu))), float(np.sqrt(np.sum(C2r ** 2 * mu))),
    )


def exponential_rate(times, values) -> float:
    """Least-squares ``c`` in ``values ~ K exp(c t)``; zeros and NaNs are skipped."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = np.isfinite(v) & (v > 0)
    if keep.sum() < 2 or np.ptp(t[keep]) == 0:
        return math.nan
    return float(np.polyfit(t[keep], np.log(v[keep]), 1)[0])


# ---------------------------------------------------------------------------
# pinching
# ---------------------------------------------------------------------------

def relative_eigenvalues(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``h`` relative to ``g`` at each point, ascending, ``[..., n]``."""
    L = np.linalg.cholesky(as_mat(g))
    Linv = np.linalg.inv(L)
    M = Linv @ as_mat(h) @ np.swapaxes(Linv, -1, -2)
    return np.linalg.eigvalsh(M)


def pinching_ratios(st: SpacelikeState, H: np.ndarray | None = None) -> tuple[float, float]:
    """``(eps, beta)``: extreme eigenvalues of ``h`` relative to ``H g``."""
    g, h = st.g.full(), st.h.full()
    if H is None:
        H = mean_curvature_full(inv_full(g), h)
    Hr = _over(H, st.dom)
    k = int(np.argmin(Hr))
    if Hr[k] <= 0:
        raise NonpositiveH(_region_point(st.dom, k), float(Hr[k]))
    lam = _over(np.moveaxis(relative_eigenvalues(g, h), -1, 0), st.dom) / Hr
    return float(lam[0].min()), float(lam[-1].max())


def _region_point(dom: DomainSpec, k: int):
    if dom.is_homogeneous:
        return ()
    idx = np.argwhere(_region(dom))[k]
    return tuple(int(i) for i in idx)


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------

ENVELOPES = ("H_lower", "H_upper", "A2_lower", "A2_upper")
_STRICT = {"H_lower": True, "H_upper": False, "A2_lower": True, "A2_upper": False}


def envelope_bounds(t, n, H0_min, H0_max, A20_max):
    """The four comparison curves at time ``t``."""
    t = np.asarray(t, dtype=float)
    return {
        "H_lower": 1.0 / np.sqrt(2.0 * t + 1.0 / H0_min ** 2),
        "H_upper": 1.0 / np.sqrt((2.0 / n) * t + 1.0 / H0_max ** 2),
        "A2_lower": 1.0 / (2.0 * n * t + n / H0_min ** 2),
        "A2_upper": 1.0 / (2.0 * t + 1.0 / A20_max),
    }


@dataclass
class EnvelopeReport:
    """Signed margins per envelope (positive means inside) and violations."""

    times: np.ndarray
    margins: dict
    violations: list = field(default_factory=list)
    tau: float = 0.0

    @property
    def ok(self):
        return not self.violations

    def worst(self) -> dict:
        return {k: float(np.min(v)) for k, v in self.margins.items()}

    def verdicts(self) -> dict:
        bad = {w for _, w, _ in self.violations}
        return {k: k not in bad for k in ENVELOPES}


def envelope_check(records, n, H0_min, H0_max, A20_max, tau=0.0, raise_on_violation=True):
    """Check recorded H and |A|^2 extremes against the maximum-principle envelopes.

    Lower bounds are strict for ``t > 0`` and hold with equality at ``t = 0``;
    upper bounds are non-strict and get slack ``tau``.  A saturating (umbilic)
    trajectory therefore passes with zero margin on the upper sides.
    """
    if H0_min <= 0:
        raise NonpositiveH((), H0_min)
    t = np.array([r.t for r in records], dtype=float)
    b = envelope_bounds(t, n, H0_min, H0_max, A20_max)
    margins = {
        "H_lower": np.array([r.H_min for r in records]) - b["H_lower"],
        "H_upper": b["H_upper"] - np.array([r.H_max for r in records]),
        "A2_lower": np.array([r.A2_min for r in records]) - b["A2_lower"],
        "A2_upper": b["A2_upper"] - np.array([r.A2_max for r in records]),
    }
    violations = []
    for which in ENVELOPES:
        m = margins[which]
        if _STRICT[which]:
            bad = np.where(t > 0, m <= 0, m < 0) | ~np.isfinite(m)
        else:
            bad = (m < -tau) | ~np.isfinite(m)
        for i in np.flatnonzero(bad):
            violations.append((float(t[i]), which, float(m[i])))
    violations.sort()
    if violations and raise_on_violation:
        raise EnvelopeViolation(*violations[0])
    return EnvelopeReport(t, margins, violations, tau)


# ---------------------------------------------------------------------------
# monotone functional
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monotonicity:
    F_n: float
    D1: float
    D2: float


def monotonicity_report(st: SpacelikeState, curv: Curvature | None = None,
                        allow_open: bool = False) -> Monotonicity:
    """``F_n = int H^n dmu`` and its two dissipation integrals.

    ``D1 = n(n-1) int |grad H|^2 H^(n-2) dmu`` and
    ``D2 = n int |h - (H/n) g|^2 H^n dmu``.  A patch has no closed integral;
    pass ``allow_open`` to integrate over its interior anyway.
    """
    dom = st.dom
    if dom.kind == "patch" and not allow_open:
        raise ClosedIntegralOnPatch("monotonicity integrals need a closed domain")
    g, h = st.g.full(), st.h.full()
    curv = curv or Curvature(g, dom)
    n = dom.n
    ginv = curv.ginv
    H = mean_curvature_full(ginv, h)
    Hr = _over(H, dom)
    k = int(np.argmin(Hr))
    if Hr[k] < H_FLOOR:
        raise NonpositiveH(_region_point(dom, k), float(Hr[k]))
    mu = np.sqrt(det_full(g)) * dom.cell_volume
    Hn = H ** n
    dH = dom.grad(H)
    gradH2 = np.einsum("ij...,i...,j...->...", ginv, dH, dH)
    trace_free2 = norm_A2_full(ginv, h) - H ** 2 / n
    parts = [Hn, n * (n - 1) * gradH2 / H ** 2 * Hn, n * trace_free2 * Hn]
    F, D1, D2 = (float(np.sum(_over(p * mu, dom))) for p in parts)
    return Monotonicity(F, D1, D2)


# ---------------------------------------------------------------------------
# derivative scaling
# ---------------------------------------------------------------------------

def derivative_sups(st: SpacelikeState, curv: Curvature | None = None) -> tuple[float, float]:
    """``(sup |nabla A|, sup |nabla^2 A|)`` over the measured region."""
    curv = curv or Curvature(st.g.full(), st.dom)
    if st.dom.is_homogeneous:
        return 0.0, 0.0
    d1 = curv.covd(st.h.full(), 2)
    d2 = curv.covd(d1, 3)
    n1 = tensor_norm2(d1, curv.ginv, 3)
    n2 = tensor_norm2(d2, curv.ginv, 4)
    return (float(np.sqrt(_over(n1, st.dom).max())), float(np.sqrt(_over(n2, st.dom).max())))


@dataclass
class DerivativeStats:
    times: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    sup_s1: float
    sup_s2: float
    flags: dict


def derivative_monitor(records, M_bound: float, budgets=(None, None)) -> DerivativeStats:
    """``s_m(t) = sup|nabla^m A| t^(m/2) / M`` along recorded states.

    Records carry the raw sups in ``grad1``/``grad2``.  A ``budgets`` entry
    that is not None flags the run when the corresponding sup exceeds it.
    """
    t = np.array([r.t for r in records], dtype=float)
    g1 = np.array([r.grad1 for r in records], dtype=float)
    g2 = np.array([r.grad2 for r in records], dtype=float)
    s1 = g1 * np.sqrt(t) / M_bound
    s2 = g2 * t / M_bound
    sup1 = float(np.max(s1)) if len(s1) else 0.0
    sup2 = float(np.max(s2)) if len(s2) else 0.0
    flags = {
        f"s{m}": (b is not None and sup > b)
        for m, (b, sup) in enumerate(zip(budgets, (sup1, sup2)), start=1)
    }
    return DerivativeStats(t, s1, s2, sup1, sup2, flags)


# ---------------------------------------------------------------------------
# rescaling and sectional curvature
# ---------------------------------------------------------------------------

def parabolic_rescale(st: SpacelikeState) -> tuple[SpacelikeState, float]:
    """Normalize to ``max |A| = 1``: ``g -> g / eps^2``, ``h -> h / eps``."""
    g, h = st.g.full(), st.h.full()
    A2 = norm_A2_full(inv_full(g), h)
    amax = math.sqrt(float(_over(A2, st.dom).max()))
    if amax == 0.0:
        raise ZeroSecondFundamentalForm("cannot rescale a state with A = 0")
    eps = 1.0 / amax
    n = st.n
    return st.with_fields(Sym2Field(pack_sym2(g * amax ** 2), n), Sym2Field(pack_sym2(h * amax), n)), eps


def sectional_range(st: SpacelikeState, curv: Curvature | None = None) -> tuple[float, float]:
    """Extremes of sectional curvature over coordinate 2-planes.

    Sampling only coordinate planes gives an inner estimate of the true range.
    """
    g = st.g.full()
    curv = curv or Curvature(g, st.dom)
    sec = _over(sectional_full(curv.riem, g), st.dom)
    return float(sec.min()), float(sec.max())


# ---------------------------------------------------------------------------
# per-time record
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    H_min: float
    H_max: float
    A2_min: float
    A2_max: float
    eps: float
    beta: float
    F_n: float
    D1: float
    D2: float
    normG2: float
    normC2: float
    sec_min: float
    sec_max: float
    vol: float
    s1: float
    s2: float
    grad1: float = 0.0
    grad2: float = 0.0

    def row(self) -> list[float]:
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_row(cls, row) -> "DiagnosticsRecord":
        return cls(**{c: float(v) for c, v in zip(CSV_COLUMNS, row)})


assert tuple(f.name for f in fields(DiagnosticsRecord))[: len(CSV_COLUMNS)] == CSV_COLUMNS


@dataclass(frozen=True)
class RecordOptions:
    """Which of the costlier diagnostics a record computes.

    ``M_bound`` normalizes ``s1``/``s2``; ``t0`` is the time origin for the
    ``t^(m/2)`` weights.
    """

    residuals: bool = True
    monotonicity: bool = True
    sectional: bool = True
    derivatives: bool = True
    M_bound: float | None = None
    t0: float = 0.0


def record_state(st: SpacelikeState, options: RecordOptions = RecordOptions()) -> DiagnosticsRecord:
    """Compute one :class:`DiagnosticsRecord`; skipped quantities are NaN."""
    dom = st.dom
    g, h = st.g.full(), st.h.full()
    curv = Curvature(g, dom)
    ginv = curv.ginv
    H = mean_curvature_full(ginv, h)
    A2 = norm_A2_full(ginv, h)
    Hr, A2r = _over(H, dom), _over(A2, dom)
    nan = math.nan
    eps = beta = nan
    if Hr.min() > 0:
        eps, beta = pinching_ratios(st, H)
    F = D1 = D2 = nan
    if options.monotonicity and Hr.min() >= H_FLOOR:
        m = monotonicity_report(st, curv, allow_open=True)
        F, D1, D2 = m.F_n, m.D1, m.D2
    G2 = C2 = nan
    if options.residuals:
        r = residual_norms(st, curv)
        G2, C2 = r.normG2, r.normC2
    smin = smax = nan
    if options.sectional:
        smin, smax = sectional_range(st, curv)
    s1 = s2 = grad1 = grad2 = nan
    if options.derivatives:
        grad1, grad2 = derivative_sups(st, curv)
        M = options.M_bound or math.sqrt(float(A2r.max())) or 1.0
        dt = max(st.t - options.t0, 0.0)
        s1, s2 = grad1 * math.sqrt(dt) / M, grad2 * dt / M
    vol = float(np.sum(_over(np.sqrt(det_full(g)) * dom.cell_volume, dom)))
    return DiagnosticsRecord(
        float(st.t), float(Hr.min()), float(Hr.max()), float(A2r.min()), float(A2r.max()),
        eps, beta, F, D1, D2, G2, C2, smin, smax, vol, s1, s2, grad1, grad2,
    )


def recorder(options: RecordOptions = RecordOptions()):
    """Callable ``(state, gauge) -> DiagnosticsRecord`` for :func:`run_flow`."""

    def _record(st, gauge=None):
        return record_state(st, options)

    return _record
