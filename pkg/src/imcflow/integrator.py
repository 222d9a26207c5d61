"""Explicit time stepping with stability control and trajectory recording."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dposv

from .domain import DIRICHLET_ORACLE, FROZEN, DomainSpec
from .errors import Instability, MapLeftDomain, NotPositiveDefinite, PositivityLost
from .fields import Sym2Field, pack_sym2, sym_index
from .flows import (GAUGE, RHS, VARIANTS, GaugeData, SpacelikeState, point_rhs,
                    check_map, diffeo_rate, gauge_rhs_full, norm_A2_full)
from .geometry import Curvature, first_bad_point, inv_full, lambda_max_inverse, leading_minors_positive

log = logging.getLogger(__name__)

EULER = "euler"
RK4 = "rk4"

COMPLETED = "Completed"
POSITIVITY_LOST = "PositivityLost"
INSTABILITY = "Instability"
MAP_LEFT_DOMAIN = "MapLeftDomain"


@dataclass(frozen=True)
class StepControl:
    method: str = RK4
    cfl: float = 0.5
    dt_max: float = 1e-3
    t_end: float = 1.0
    record_every: int = 1
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.method not in (EULER, RK4):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.dt_max <= 0 or self.t_end <= 0:
            raise ValueError("dt_max and t_end must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0")


@dataclass
class RunResult:
    records: list
    final: SpacelikeState
    reason: str = COMPLETED
    gauge: GaugeData | None = None
    steps: int = 0
    message: str = ""

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    @property
    def ok(self):
        return self.reason == COMPLETED


def stable_dt(st: SpacelikeState, ctrl: StepControl) -> float:
    """``min(dt_max, cfl dx^2 / (2 n lambda_max(g^-1)), cfl / (4 max|A|^2))``."""
    g = st.g.full()
    dom = st.dom
    dt = ctrl.dt_max
    if not dom.is_homogeneous:
        lam = lambda_max_inverse(g)
        dt = min(dt, ctrl.cfl * dom.dx_min ** 2 / (2 * dom.n * lam))
    if dom.is_homogeneous:
        hm = np.linalg.solve(g, st.h.full())
        A2max = float((hm @ hm).trace())
    else:
        A2max = float(np.max(norm_A2_full(inv_full(g), st.h.full())))
    if A2max > 0:
        dt = min(dt, ctrl.cfl / (4.0 * A2max))
    return dt


class FlowSystem:
    """Packed right-hand side of one flow variant, boundary policy included.

    The state vector is ``(g, h)`` for the raw and simplified variants and
    ``(g_hat, h_hat, F)`` for the gauge-fixed one.  ``boundary`` supplies
    exact boundary rates (``boundary.boundary_rates(t, dom)``) when a patch
    uses the Dirichlet-from-oracle policy.
    """

    def __init__(self, variant: str, dom: DomainSpec, boundary=None, gauge: GaugeData | None = None,
                 transport: bool = True):
        if variant not in VARIANTS:
            raise ValueError(f"unknown flow variant {variant!r}")
        if variant == GAUGE and gauge is None:
            raise ValueError("the gauge-fixed variant needs GaugeData")
        if dom.kind == "patch" and dom.boundary == DIRICHLET_ORACLE and boundary is None:
            raise ValueError("Dirichlet-from-oracle boundary needs an oracle")
        self.variant = variant
        self.dom = dom
        self.boundary = boundary
        self.gauge = gauge
        self.transport = transport
        self.n = dom.n
        self._bmask = dom.boundary_mask() if dom.kind == "patch" else None
        self.last_V = None

    def rates(self, t, y):
        n = self.n
        g = y[0][sym_index(n)]
        h = y[1][sym_index(n)]
        curv = Curvature(g, self.dom)
        if self.variant == GAUGE:
            dg, dh, V = gauge_rhs_full(g, h, self.gauge.gam_s(self.dom), self.dom, curv,
                                       self.transport)
            self.last_V = V
        else:
            dg, dh = RHS[self.variant](g, h, self.dom, curv)
        out = [pack_sym2(dg), pack_sym2(dh)]
        if self.variant == GAUGE:
            out.append(diffeo_rate(y[2], V, self.dom))
        if self._bmask is not None:
            self._apply_boundary(t, out)
        return out

    def _apply_boundary(self, t, out):
        m = self._bmask
        if self.dom.boundary == FROZEN:
            for arr in out:
                arr[..., m] = 0.0
            return
        bg, bh = self.boundary.boundary_rates(t, self.dom)
        out[0][..., m] = bg[..., m]
        out[1][..., m] = bh[..., m]
        if len(out) > 2:
            out[2][..., m] = 0.0


def _axpy(y, a, k):
    return [yi + a * ki for yi, ki in zip(y, k)]


def advance(system: FlowSystem, t, y, dt, method=RK4):
    """One explicit step of the packed system."""
    if method == EULER:
        k1 = system.rates(t, y)
        return _axpy(y, dt, k1)
    k1 = system.rates(t, y)
    k2 = system.rates(t + 0.5 * dt, _axpy(y, 0.5 * dt, k1))
    k3 = system.rates(t + 0.5 * dt, _axpy(y, 0.5 * dt, k2))
    k4 = system.rates(t + dt, _axpy(y, dt, k3))
    return [yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]


def _pack_state(st: SpacelikeState, gauge: GaugeData | None):
    y = [st.g.data, st.h.data]
    if gauge is not None:
        y.append(gauge.F)
    return y


def _point_dt(g, h, ctrl: StepControl) -> float:
    hm = dposv(g, h)[1]
    A2 = (hm @ hm).trace()
    return min(ctrl.dt_max, ctrl.cfl / (4.0 * A2)) if A2 > 0 else ctrl.dt_max


def _point_advance(g, h, curvature, variant, dt, method):
    if method == EULER:
        dg, dh = point_rhs(g, h, curvature, variant)
        return g + dt * dg, h + dt * dh
    half = 0.5 * dt
    a1, b1 = point_rhs(g, h, curvature, variant)
    a2, b2 = point_rhs(g + half * a1, h + half * b1, curvature, variant)
    a3, b3 = point_rhs(g + half * a2, h + half * b2, curvature, variant)
    a4, b4 = point_rhs(g + dt * a3, h + dt * b3, curvature, variant)
    w = dt / 6.0
    return g + w * (a1 + 2.0 * (a2 + a3) + a4), h + w * (b1 + 2.0 * (b2 + b3) + b4)


def _point_check(g, h, t):
    if not (np.isfinite(g).all() and np.isfinite(h).all()):
        raise Instability(t)
    if dposv(g, h)[2] != 0:
        raise PositivityLost(t, ())


def _point_state(st0: SpacelikeState, g, h, t) -> SpacelikeState:
    n = st0.n
    return st0.with_fields(Sym2Field(pack_sym2(g), n), Sym2Field(pack_sym2(h), n), t)


def _check(y, t, dom, n):
    for arr in y:
        if not np.isfinite(arr).all():
            raise Instability(t)
    g = y[0][sym_index(n)]
    ok = leading_minors_positive(g)
    if not np.all(ok):
        raise PositivityLost(t, first_bad_point(ok))
    if len(y) > 2:
        check_map(y[2], dom)


def step(st: SpacelikeState, variant: str, ctrl: StepControl, dt: float | None = None,
         system: FlowSystem | None = None, gauge: GaugeData | None = None, boundary=None):
    """Advance ``st`` by one Euler or RK4 step (``dt`` defaults to :func:`stable_dt`)."""
    system = system or FlowSystem(variant, st.dom, boundary=boundary, gauge=gauge)
    if dt is None:
        dt = stable_dt(st, ctrl)
    y = advance(system, st.t, _pack_state(st, gauge), dt, ctrl.method)
    t = st.t + dt
    _check(y, t, st.dom, st.n)
    new = st.with_fields(Sym2Field(y[0], st.n), Sym2Field(y[1], st.n), t)
    if gauge is not None:
        gauge.F = y[2]
        gauge.V = system.last_V
    return new


def run_flow(st0: SpacelikeState, variant: str, ctrl: StepControl, sinks=(), *,
             record=None, boundary=None, gauge: GaugeData | None = None,
             start_step: int = 0, record_initial: bool = True, on_checkpoint=None,
             transport: bool = True) -> RunResult:
    """Integrate from ``st0.t`` to ``ctrl.t_end``.

    ``record(state, gauge)`` builds a diagnostics record; every
    ``record_every`` steps the record is appended to the result and handed to
    each sink (any callable).  ``on_checkpoint(state, step, gauge)`` fires
    every ``checkpoint_every`` steps.  Errors stop the run and set the
    termination reason; the last good state is returned.
    """
    system = FlowSystem(variant, st0.dom, boundary=boundary, gauge=gauge, transport=transport)
    records = []
    point = st0.dom.is_homogeneous and variant != GAUGE

    def emit(state):
        if record is None:
            return
        rec = record(state, gauge)
        records.append(rec)
        for sink in sinks:
            sink(rec)

    st = st0
    k = start_step
    if record_initial and k % ctrl.record_every == 0:
        emit(st)
    reason, message = COMPLETED, ""
    n = st0.n
    # The homogeneous loop carries full matrices and builds states lazily
    g_pt, h_pt = (st.g.full(), st.h.full()) if point else (None, None)
    t_now = st.t
    while t_now < ctrl.t_end:
        try:
            if point:
                dt = _point_dt(g_pt, h_pt, ctrl)
            else:
                dt = stable_dt(st, ctrl)
            last = t_now + dt >= ctrl.t_end * (1.0 - 1e-12)
            if last:
                dt = ctrl.t_end - t_now
            t = ctrl.t_end if last else t_now + dt
            if point:
                try:
                    g_pt, h_pt = _point_advance(g_pt, h_pt, st0.dom.curvature, variant, dt,
                                                ctrl.method)
                except NotPositiveDefinite:
                    raise PositivityLost(t, ()) from None
                _point_check(g_pt, h_pt, t)
                t_now = t
                k += 1
                if k % ctrl.record_every == 0 or last or (
                        on_checkpoint is not None and ctrl.checkpoint_every
                        and k % ctrl.checkpoint_every == 0):
                    st = _point_state(st0, g_pt, h_pt, t)
                    if k % ctrl.record_every == 0:
                        emit(st)
                    if on_checkpoint is not None and ctrl.checkpoint_every and k % ctrl.checkpoint_every == 0:
                        on_checkpoint(st, k, gauge)
                continue
            y = advance(system, st.t, _pack_state(st, gauge), dt, ctrl.method)
            _check(y, t, st.dom, n)
        except PositivityLost as exc:
            reason, message = POSITIVITY_LOST, str(exc)
            break
        except Instability as exc:
            reason, message = INSTABILITY, str(exc)
            break
        except MapLeftDomain as exc:
            reason, message = MAP_LEFT_DOMAIN, str(exc)
            break
        except np.linalg.LinAlgError as exc:
            reason, message = INSTABILITY, f"linear algebra failure: {exc}"
            break
        st = st.with_fields(Sym2Field(y[0], n), Sym2Field(y[1], n), t)
        t_now = t
        if gauge is not None:
            gauge.F = y[2]
            gauge.V = system.last_V
        k += 1
        if k % ctrl.record_every == 0:
            emit(st)
        if on_checkpoint is not None and ctrl.checkpoint_every and k % ctrl.checkpoint_every == 0:
            on_checkpoint(st, k, gauge)
    if point and st.t != t_now:
        st = _point_state(st0, g_pt, h_pt, t_now)
    if reason != COMPLETED:
        log.warning("run stopped: %s", message)
    return RunResult(records, st, reason, gauge, k, message)
