"""Scenario documents: a TOML file describing one flow run.

Grammar (every physical parameter is required; there are no hidden
defaults for them)::

    [scenario]   name (str), seed (int, 0 <= seed < 2**64)
    [domain]     kind = "homogeneous" | "torus" | "patch", n (int >= 2)
                 torus:  points (int >= 4), extent (float > 0),
                         stencil_order = 2 | 4 (optional, default 2)
                 patch:  points (int >= 4), half_width (float > 0),
                         boundary = "dirichlet_oracle" | "frozen"
                 interp_order = 1 | 3 (optional, default 1)
    [seed]       family = "umbilic" | "hyperboloid_perturbed" | "torus_random"
                 umbilic:               lambda0
                 hyperboloid_perturbed: lambda0, delta, target = "h" | "g" | "both"
                 torus_random:          amplitude, h_scale, pinch_eps (optional)
    [flow]       variant = "raw" | "simplified" | "gauge", transport (optional bool)
    [step]       method = "euler" | "rk4", cfl, dt_max, t_end, record_every,
                 checkpoint_every (optional, 0 disables)
    [diagnostics] residuals, monotonicity, sectional, derivatives (optional bools),
                 M_bound (optional float), envelope_tau (optional float),
                 s_budget (optional [float, float])
    [output]     csv, summary (file names), figures (bool), checkpoint (file name)

Errors are collected over the whole document and raised together.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .domain import DIRICHLET_ORACLE, FROZEN, DomainSpec
from .errors import ParseError, ScenarioError, ValidationError
from .flows import GAUGE, VARIANTS, GaugeData
from .integrator import EULER, RK4, StepControl
from .oracles import (MAX_BALL_RADIUS, UmbilicSolution, hyperboloid_perturbed_state,
                      torus_random_state)

UMBILIC = "umbilic"
HYPERBOLOID_PERTURBED = "hyperboloid_perturbed"
TORUS_RANDOM = "torus_random"
FAMILIES = (UMBILIC, HYPERBOLOID_PERTURBED, TORUS_RANDOM)

COMPATIBLE = {
    UMBILIC: ("homogeneous", "patch"),
    HYPERBOLOID_PERTURBED: ("patch",),
    TORUS_RANDOM: ("torus",),
}

_KNOWN = {
    "scenario": {"name", "seed"},
    "domain": {"kind", "n", "points", "extent", "half_width", "boundary", "stencil_order",
               "interp_order"},
    "seed": {"family", "lambda0", "delta", "target", "amplitude", "h_scale", "pinch_eps"},
    "flow": {"variant", "transport"},
    "step": {"method", "cfl", "dt_max", "t_end", "record_every", "checkpoint_every"},
    "diagnostics": {"residuals", "monotonicity", "sectional", "derivatives", "M_bound",
                    "envelope_tau", "s_budget"},
    "output": {"csv", "summary", "figures", "checkpoint"},
}
_REQUIRED_SECTIONS = ("scenario", "domain", "seed", "flow", "step")


@dataclass(frozen=True)
class SeedSpec:
    family: str
    lambda0: float = 1.0
    delta: float = 0.0
    target: str = "h"
    amplitude: float = 0.0
    h_scale: float = 1.0
    pinch_eps: float | None = None


@dataclass(frozen=True)
class DiagnosticsConfig:
    residuals: bool = True
    monotonicity: bool = True
    sectional: bool = True
    derivatives: bool = True
    M_bound: float | None = None
    envelope_tau: float | None = None
    s_budget: tuple = (None, None)


@dataclass(frozen=True)
class OutputConfig:
    csv: str = "timeseries.csv"
    summary: str = "summary.json"
    figures: bool = True
    checkpoint: str = "checkpoint.imck"


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    domain: DomainSpec
    initial: SeedSpec
    variant: str
    step: StepControl
    transport: bool = True
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    text: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def tau(self) -> float:
        """Slack for non-strict envelope and pinching comparisons."""
        if self.diagnostics.envelope_tau is not None:
            return self.diagnostics.envelope_tau
        dx = 0.0 if self.domain.is_homogeneous else self.domain.dx_min
        return 10.0 * (dx ** 2 + self.step.dt_max)


class _Reader:
    """Typed access to one TOML table that records every problem it meets."""

    def __init__(self, table: dict, section: str, errors: list):
        self.t = table
        self.section = section
        self.errors = errors

    def _err(self, key, reason):
        self.errors.append(ValidationError(f"{self.section}.{key}", reason))

    def get(self, key, kind, required=True, default=None, check=None, reason=""):
        if key not in self.t:
            if required:
                self._err(key, "missing required key")
            return default
        v = self.t[key]
        if kind is float and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        if kind is int and isinstance(v, bool):
            self._err(key, "expected an integer")
            return default
        if not isinstance(v, kind):
            self._err(key, f"expected {getattr(kind, '__name__', kind)}, got {type(v).__name__}")
            return default
        if kind is float and not math.isfinite(v):
            self._err(key, "must be finite")
            return default
        if check is not None and not check(v):
            self._err(key, reason or "invalid value")
            return default
        return v

    def choice(self, key, options, required=True, default=None):
        v = self.get(key, str, required, default)
        if v is not None and v not in options:
            self._err(key, f"must be one of {', '.join(options)}")
            return default
        return v


def _positive(v):
    return v > 0


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises :class:`ParseError` for malformed TOML and :class:`ScenarioError`
    carrying every :class:`ValidationError` otherwise.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ParseError(getattr(exc, "lineno", None), getattr(exc, "msg", str(exc))) from None
    errors: list[ValidationError] = []
    for sec in doc:
        if sec not in _KNOWN:
            errors.append(ValidationError(sec, "unknown section"))
        elif not isinstance(doc[sec], dict):
            errors.append(ValidationError(sec, "expected a table"))
        else:
            for key in doc[sec]:
                if key not in _KNOWN[sec]:
                    errors.append(ValidationError(f"{sec}.{key}", "unknown key"))
    for sec in _REQUIRED_SECTIONS:
        if not isinstance(doc.get(sec), dict):
            errors.append(ValidationError(sec, "missing required section"))

    def reader(sec):
        t = doc.get(sec)
        return _Reader(t if isinstance(t, dict) else {}, sec, errors)

    sc = reader("scenario")
    name = sc.get("name", str, check=lambda s: bool(s.strip()), reason="must not be empty")
    seed = sc.get("seed", int, check=lambda s: 0 <= s < 2 ** 64, reason="must lie in [0, 2**64)")

    dom = _parse_domain(reader("domain"), errors)
    init = _parse_seed(reader("seed"))

    fl = reader("flow")
    variant = fl.choice("variant", VARIANTS)
    transport = fl.get("transport", bool, required=False, default=True)

    st = reader("step")
    method = st.choice("method", (EULER, RK4))
    cfl = st.get("cfl", float, check=lambda v: 0 < v <= 1, reason="must lie in (0, 1]")
    dt_max = st.get("dt_max", float, check=_positive, reason="must be positive")
    t_end = st.get("t_end", float, check=_positive, reason="must be positive")
    record_every = st.get("record_every", int, check=lambda v: v >= 1, reason="must be >= 1")
    ck_every = st.get("checkpoint_every", int, required=False, default=0,
                      check=lambda v: v >= 0, reason="must be >= 0")

    dg = reader("diagnostics")
    diag = DiagnosticsConfig(
        residuals=dg.get("residuals", bool, required=False, default=True),
        monotonicity=dg.get("monotonicity", bool, required=False, default=True),
        sectional=dg.get("sectional", bool, required=False, default=True),
        derivatives=dg.get("derivatives", bool, required=False, default=True),
        M_bound=dg.get("M_bound", float, required=False, check=_positive, reason="must be positive"),
        envelope_tau=dg.get("envelope_tau", float, required=False, check=lambda v: v >= 0,
                            reason="must be >= 0"),
        s_budget=_parse_budget(dg),
    )

    out = reader("output")
    output = OutputConfig(
        csv=out.get("csv", str, required=False, default="timeseries.csv"),
        summary=out.get("summary", str, required=False, default="summary.json"),
        figures=out.get("figures", bool, required=False, default=True),
        checkpoint=out.get("checkpoint", str, required=False, default="checkpoint.imck"),
    )
    for key in ("csv", "summary", "checkpoint"):
        v = getattr(output, key)
        if Path(v).is_absolute() or ".." in Path(v).parts or not v:
            errors.append(ValidationError(f"output.{key}", "must be a relative file name inside the output directory"))

    if init is not None and dom is not None and dom.kind not in COMPATIBLE[init.family]:
        errors.append(ValidationError(
            "seed.family", f"{init.family} seed is incompatible with a {dom.kind} domain"))
    if dom is not None and dom.kind == "patch" \
            and dom.n * (dom.spacing[0] * (dom.shape[0] - 1) / 2) ** 2 > MAX_BALL_RADIUS ** 2 + 1e-12:
        errors.append(ValidationError("domain.half_width", "patch corners leave the ball chart radius"))

    ctrl = None
    if None not in (method, cfl, dt_max, t_end, record_every, ck_every):
        ctrl = StepControl(method, cfl, dt_max, t_end, record_every, ck_every)
    if errors:
        raise ScenarioError(errors)
    return Scenario(name, seed, dom, init, variant, ctrl, transport, diag, output, text)


def _parse_budget(dg: _Reader):
    v = dg.get("s_budget", list, required=False)
    if v is None:
        return (None, None)
    if len(v) != 2 or not all(isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in v):
        dg._err("s_budget", "expected two positive numbers")
        return (None, None)
    return (float(v[0]), float(v[1]))


def _parse_domain(r: _Reader, errors) -> DomainSpec | None:
    kind = r.choice("kind", ("homogeneous", "torus", "patch"))
    n = r.get("n", int, check=lambda v: 2 <= v <= 6, reason="must lie in [2, 6]")
    interp = r.get("interp_order", int, required=False, default=1, check=lambda v: v in (1, 3),
                   reason="must be 1 or 3")
    if kind is None or n is None:
        return None
    if kind == "homogeneous":
        for key in ("points", "extent", "half_width", "boundary", "stencil_order"):
            if key in r.t:
                r._err(key, "not used by a homogeneous domain")
        return DomainSpec.homogeneous(n)
    points = r.get("points", int, check=lambda v: v >= 4, reason="must be >= 4")
    if kind == "torus":
        extent = r.get("extent", float, check=_positive, reason="must be positive")
        order = r.get("stencil_order", int, required=False, default=2, check=lambda v: v in (2, 4),
                      reason="must be 2 or 4")
        for key in ("half_width", "boundary"):
            if key in r.t:
                r._err(key, "not used by a torus domain")
        if None in (points, extent, order, interp):
            return None
        return DomainSpec.torus(n, points, extent, order=order, interp_order=interp)
    half_width = r.get("half_width", float, check=_positive, reason="must be positive")
    boundary = r.choice("boundary", (DIRICHLET_ORACLE, FROZEN))
    for key in ("extent", "stencil_order"):
        if key in r.t:
            r._err(key, "not used by a patch domain")
    if None in (points, half_width, boundary, interp):
        return None
    return DomainSpec.patch(n, points, half_width, boundary=boundary, interp_order=interp)


def _parse_seed(r: _Reader) -> SeedSpec | None:
    family = r.choice("family", FAMILIES)
    if family is None:
        return None
    pos = dict(check=_positive, reason="must be positive")
    if family == UMBILIC:
        lam = r.get("lambda0", float, **pos)
        return None if lam is None else SeedSpec(family, lambda0=lam)
    if family == HYPERBOLOID_PERTURBED:
        lam = r.get("lambda0", float, **pos)
        delta = r.get("delta", float, check=lambda v: v >= 0, reason="must be >= 0")
        target = r.choice("target", ("h", "g", "both"))
        if None in (lam, delta, target):
            return None
        return SeedSpec(family, lambda0=lam, delta=delta, target=target)
    amp = r.get("amplitude", float, check=lambda v: v >= 0, reason="must be >= 0")
    hs = r.get("h_scale", float, **pos)
    pe = r.get("pinch_eps", float, required=False, check=lambda v: v > 0, reason="must be positive")
    if None in (amp, hs):
        return None
    return SeedSpec(family, amplitude=amp, h_scale=hs, pinch_eps=pe)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def initial_data(sc: Scenario):
    """``(state, boundary_oracle, gauge)`` at t = 0 for a scenario."""
    s = sc.initial
    dom = sc.domain
    boundary = None
    if s.family == UMBILIC:
        sol = UmbilicSolution(dom.n, s.lambda0)
        if dom.is_homogeneous:
            dom = sol.homogeneous_domain()
        st = sol.state(0.0, dom)
        boundary = sol
    elif s.family == HYPERBOLOID_PERTURBED:
        st = hyperboloid_perturbed_state(dom, s.delta, sc.seed, s.lambda0, s.target)
        boundary = UmbilicSolution(dom.n, s.lambda0)
    else:
        st = torus_random_state(dom, s.amplitude, sc.seed, s.h_scale, s.pinch_eps)
    if dom.kind != "patch" or dom.boundary != DIRICHLET_ORACLE:
        boundary = None
    gauge = GaugeData.identity(st.g, st.dom) if sc.variant == GAUGE else None
    return st, boundary, gauge

