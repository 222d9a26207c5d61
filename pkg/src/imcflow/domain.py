"""Domain backends: a single homogeneous point, a periodic coordinate torus,
or a bounded coordinate patch.

Fields carry their component axes first and the grid axes last.  The
homogeneous backend has an empty grid shape, so a metric there is just an
``(n, n)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

HOMOGENEOUS = "homogeneous"
TORUS = "torus"
PATCH = "patch"
KINDS = (HOMOGENEOUS, TORUS, PATCH)

DIRICHLET_ORACLE = "dirichlet_oracle"
FROZEN = "frozen"
BOUNDARY_POLICIES = (DIRICHLET_ORACLE, FROZEN)

# Nested first-derivative stencils (Christoffel -> Riemann, covd -> covd)
# reach two cells; this is the width of the patch boundary layer.
STENCIL_WIDTH = 2


@dataclass(frozen=True)
class DomainSpec:
    """Discretized coordinate domain.

    Parameters
    ----------
    kind : {"homogeneous", "torus", "patch"}
    n : int
        Manifold dimension (>= 2).  Torus and patch grids are n-dimensional.
    shape : tuple of int
        Points per axis; empty for the homogeneous point.
    spacing : tuple of float
        Grid spacing per axis in coordinate units.
    origin : tuple of float
        Coordinates of grid index 0.
    boundary : str or None
        Patch boundary policy, ``"dirichlet_oracle"`` or ``"frozen"``.
    curvature : float
        Homogeneous backend only: sectional curvature of the isotropic model
        space at unit volume.  A metric ``g`` at the point is assigned the
        constant sectional curvature ``curvature * det(g)**(-1/n)``, which is
        how constant-curvature space forms rescale.
    order : {2, 4}
        Central-difference order.  Fourth order is available on the torus.
    """

    kind: str
    n: int
    shape: tuple = ()
    spacing: tuple = ()
    origin: tuple = ()
    boundary: str | None = None
    curvature: float = 0.0
    order: int = 2
    interp_order: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        if not self.origin and self.kind != HOMOGENEOUS:
            object.__setattr__(self, "origin", (0.0,) * self.n)
        object.__setattr__(self, "origin", tuple(float(s) for s in self.origin))
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("dimension n must be >= 2")
        if self.kind == HOMOGENEOUS:
            if self.shape not in ((), (1,) * len(self.shape)):
                raise ValueError("homogeneous domain has exactly one grid point")
            object.__setattr__(self, "shape", ())
            object.__setattr__(self, "spacing", ())
            object.__setattr__(self, "origin", ())
        else:
            if len(self.shape) != self.n or len(self.spacing) != self.n:
                raise ValueError("grid shape and spacing need one entry per dimension")
            if min(self.shape) < 4:
                raise ValueError("every axis needs at least 4 points")
            if min(self.spacing) <= 0:
                raise ValueError("spacing must be positive")
            if len(self.origin) != self.n:
                raise ValueError("origin needs one entry per dimension")
        if self.kind == PATCH:
            if self.boundary not in BOUNDARY_POLICIES:
                raise ValueError(f"patch boundary policy must be one of {BOUNDARY_POLICIES}")
            if self.order != 2:
                raise ValueError("fourth-order stencils are only implemented on the torus")
        if self.order not in (2, 4):
            raise ValueError("stencil order must be 2 or 4")
        if self.interp_order not in (1, 3):
            raise ValueError("interpolation order must be 1 or 3")

    # -- constructors -----------------------------------------------------
    @classmethod
    def homogeneous(cls, n, curvature=0.0):
        return cls(HOMOGENEOUS, n, curvature=curvature)

    @classmethod
    def torus(cls, n, points, extent=2 * np.pi, order=2, interp_order=1):
        points = (points,) * n if np.isscalar(points) else tuple(points)
        extent = (extent,) * n if np.isscalar(extent) else tuple(extent)
        spacing = tuple(L / N for L, N in zip(extent, points))
        return cls(TORUS, n, points, spacing, (0.0,) * n, order=order,
                   interp_order=interp_order)

    @classmethod
    def patch(cls, n, points, half_width, boundary=DIRICHLET_ORACLE, interp_order=1):
        """Centred cube ``[-half_width, half_width]^n`` with both ends sampled."""
        points = (points,) * n if np.isscalar(points) else tuple(points)
        spacing = tuple(2 * half_width / (N - 1) for N in points)
        return cls(PATCH, n, points, spacing, (-half_width,) * n, boundary=boundary,
                   interp_order=interp_order)

    # -- geometry of the grid -------------------------------------------
    @property
    def is_homogeneous(self):
        return self.kind == HOMOGENEOUS

    @property
    def grid_ndim(self):
        return len(self.shape)

    @property
    def npoints(self):
        return int(np.prod(self.shape)) if self.shape else 1

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing)) if self.spacing else 1.0

    @property
    def dx_min(self):
        return min(self.spacing) if self.spacing else np.inf

    @property
    def period(self):
        return tuple(N * h for N, h in zip(self.shape, self.spacing))

    @cached_property
    def coords(self) -> np.ndarray:
        """Coordinates of every grid point, shape ``(n,) + grid``."""
        if self.is_homogeneous:
            return np.zeros((self.n,))
        axes = [o + h * np.arange(N) for o, h, N in zip(self.origin, self.spacing, self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=0)

    def interior_mask(self, margin=STENCIL_WIDTH) -> np.ndarray:
        """Points at least ``margin`` cells away from a patch boundary."""
        if self.kind != PATCH:
            return np.ones(self.shape, dtype=bool)
        mask = np.zeros(self.shape, dtype=bool)
        mask[tuple(slice(margin, N - margin) for N in self.shape)] = True
        return mask

    def boundary_mask(self, width=STENCIL_WIDTH) -> np.ndarray:
        return ~self.interior_mask(width)

    # -- stencils -----------------------------------------------------------
    def d(self, f: np.ndarray, axis: int) -> np.ndarray:
        """Partial derivative of ``f`` along grid axis ``axis``."""
        if self.is_homogeneous:
            return np.zeros_like(f)
        h = self.spacing[axis]
        axis = f.ndim - self.grid_ndim + axis
        if self.kind == TORUS:
            if self.order == 4:
                return (
                    8.0 * (np.roll(f, -1, axis) - np.roll(f, 1, axis))
                    - (np.roll(f, -2, axis) - np.roll(f, 2, axis))
                ) / (12.0 * h)
            return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)
        return np.gradient(f, h, axis=axis, edge_order=2)

    def grad(self, f: np.ndarray) -> np.ndarray:
        """All partials, with the derivative index as the new leading axis."""
        if self.is_homogeneous:
            return np.zeros((self.n,) + f.shape)
        return np.stack([self.d(f, a) for a in range(self.n)], axis=0)

    # -- interpolation --------------------------------------------------
    def to_index(self, points: np.ndarray) -> np.ndarray:
        """Fractional grid indices of coordinate points (leading axis = n)."""
        shape = (self.n,) + (1,) * (points.ndim - 1)
        return (points - np.reshape(self.origin, shape)) / np.reshape(self.spacing, shape)

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate a grid field at arbitrary coordinate points.

        ``values`` has shape ``comp + grid``; ``points`` has shape
        ``(n,) + pts``.  Multilinear by default (``interp_order=1``), cubic
        spline when the domain asks for ``interp_order=3``.
        """
        if self.is_homogeneous:
            return values.copy()
        comp = values.shape[: values.ndim - self.grid_ndim]
        idx = self.to_index(points)
        mode = "grid-wrap" if self.kind == TORUS else "nearest"
        flat = values.reshape((-1,) + self.shape)
        out = np.empty((flat.shape[0],) + points.shape[1:])
        for c in range(flat.shape[0]):
            out[c] = ndimage.map_coordinates(
                flat[c], idx, order=self.interp_order, mode=mode, prefilter=True
            )
        return out.reshape(comp + points.shape[1:])

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "shape": list(self.shape),
            "spacing": list(self.spacing),
            "origin": list(self.origin),
            "boundary": self.boundary,
            "curvature": self.curvature,
            "order": self.order,
            "interp_order": self.interp_order,
        }

    @classmethod
    def from_descriptor(cls, d: dict) -> "DomainSpec":
        return cls(
            d["kind"], int(d["n"]), tuple(d["shape"]), tuple(d["spacing"]),
            tuple(d["origin"]), d.get("boundary"), float(d.get("curvature", 0.0)),
            int(d.get("order", 2)), int(d.get("interp_order", 1)),
        )
