"""Intrinsic mean curvature flow of spacelike data ``(g, h)`` on structured grids.

Modules by role: :mod:`~imcflow.geometry` (curvature kernels),
:mod:`~imcflow.flows` (right-hand sides and gauge machinery),
:mod:`~imcflow.integrator` (time stepping), :mod:`~imcflow.diagnostics`,
:mod:`~imcflow.oracles` (exact solutions and seeds) and
:mod:`~imcflow.cli`.
"""
from .domain import DomainSpec
from .errors import FlowError
from .fields import Sym2Field
from .flows import GaugeData, SpacelikeState
from .integrator import StepControl, run_flow
from .oracles import UmbilicSolution

__version__ = "0.1.0"

__all__ = ["DomainSpec", "FlowError", "GaugeData", "SpacelikeState", "StepControl",
           "Sym2Field", "UmbilicSolution", "run_flow", "__version__"]
