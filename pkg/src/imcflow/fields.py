"""Packed storage for symmetric tensor fields.

Component axes come first and grid axes last, so a metric on a 32^3 grid is
``(n, n, 32, 32, 32)`` when expanded.  Keeping the grid contiguous and
trailing lets contractions run long inner loops.

Index symmetries are enforced by the layout itself: a symmetric pair is
stored once, so the expanded tensor is symmetric bit for bit.  Scalar fields
are plain arrays of the grid shape; vector fields are ``(n,) + grid``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def sym_pairs(n: int):
    """Upper-triangular ``(i, j)`` index arrays, row-major, ``i <= j``."""
    return np.triu_indices(n)


@lru_cache(maxsize=None)
def sym_index(n: int) -> np.ndarray:
    """``(n, n)`` table mapping ``(i, j)`` to its packed slot."""
    iu, ju = sym_pairs(n)
    table = np.empty((n, n), dtype=np.intp)
    table[iu, ju] = np.arange(len(iu))
    table[ju, iu] = np.arange(len(iu))
    return table


@lru_cache(maxsize=None)
def antisym_pairs(n: int):
    return np.triu_indices(n, k=1)


@lru_cache(maxsize=None)
def _riem_tables(n: int):
    pi, pj = antisym_pairs(n)
    npair = len(pi)
    pair_of = -np.ones((n, n), dtype=np.intp)
    sign_of = np.zeros((n, n))
    pair_of[pi, pj] = np.arange(npair)
    pair_of[pj, pi] = np.arange(npair)
    sign_of[pi, pj] = 1.0
    sign_of[pj, pi] = -1.0
    qtab = sym_index(npair)
    nslots = npair * (npair + 1) // 2
    slot = np.full((n, n, n, n), nslots, dtype=np.intp)  # trailing zero slot
    sign = np.zeros((n, n, n, n))
    for i, j, k, l in np.ndindex(n, n, n, n):
        p, q = pair_of[i, j], pair_of[k, l]
        if p >= 0 and q >= 0:
            slot[i, j, k, l] = qtab[p, q]
            sign[i, j, k, l] = sign_of[i, j] * sign_of[k, l]
    return slot, sign, nslots


def ncomp_sym2(n: int) -> int:
    return n * (n + 1) // 2


def pack_sym2(full: np.ndarray) -> np.ndarray:
    """Pack ``(n, n, ...)`` into ``(n(n+1)/2, ...)``, averaging the two halves."""
    n = full.shape[0]
    iu, ju = sym_pairs(n)
    return 0.5 * (full[iu, ju] + full[ju, iu])


def unpack_sym2(packed: np.ndarray, n: int) -> np.ndarray:
    return packed[sym_index(n)]


def _expand(arr, grid_ndim):
    return arr.reshape(arr.shape + (1,) * grid_ndim)


@dataclass(frozen=True)
class Sym2Field:
    """Symmetric covariant 2-tensor such as ``g_ij`` or ``h_ij``."""

    data: np.ndarray
    n: int

    @classmethod
    def from_full(cls, full) -> "Sym2Field":
        full = np.asarray(full, dtype=float)
        return cls(pack_sym2(full), full.shape[0])

    def full(self) -> np.ndarray:
        return unpack_sym2(self.data, self.n)

    @property
    def grid_shape(self):
        return self.data.shape[1:]

    def __add__(self, other):
        return Sym2Field(self.data + other.data, self.n)

    def __sub__(self, other):
        return Sym2Field(self.data - other.data, self.n)

    def scaled(self, c) -> "Sym2Field":
        return Sym2Field(c * self.data, self.n)


@dataclass(frozen=True)
class Sym3Field:
    """``T_ijk`` symmetric in ``jk`` only, stored as ``(i, packed jk, ...)``."""

    data: np.ndarray
    n: int

    @classmethod
    def from_full(cls, full) -> "Sym3Field":
        full = np.asarray(full, dtype=float)
        n = full.shape[0]
        return cls(np.moveaxis(pack_sym2(np.moveaxis(full, 0, 2)), 1, 0), n)

    def full(self) -> np.ndarray:
        return self.data[:, sym_index(self.n)]


@dataclass(frozen=True)
class ChristoffelField:
    """``Gamma^k_ij`` stored as ``(k, packed ij, ...)``."""

    data: np.ndarray
    n: int

    @classmethod
    def from_full(cls, full) -> "ChristoffelField":
        full = np.asarray(full, dtype=float)
        n = full.shape[0]
        return cls(np.moveaxis(pack_sym2(np.moveaxis(full, 0, 2)), 1, 0), n)

    def full(self) -> np.ndarray:
        return self.data[:, sym_index(self.n)]


def project_riemann(full: np.ndarray) -> np.ndarray:
    """Project a 4-tensor onto antisymmetry in (ij), (kl) and pair symmetry."""
    a = full - full.swapaxes(0, 1)
    a = a - a.swapaxes(2, 3)
    a = 0.25 * a
    return 0.5 * (a + a.transpose((2, 3, 0, 1) + tuple(range(4, a.ndim))))


@dataclass(frozen=True)
class Riem4Field:
    """Algebraic curvature tensor ``R_ijkl``.

    Stored as a packed symmetric matrix over antisymmetric index pairs
    ``(i<j)``, which builds in antisymmetry in ``ij`` and ``kl`` and pair
    symmetry.  The first Bianchi identity is not part of the layout.
    """

    data: np.ndarray
    n: int

    @classmethod
    def from_full(cls, full) -> "Riem4Field":
        full = np.asarray(full, dtype=float)
        n = full.shape[0]
        a = project_riemann(full)
        pi, pj = antisym_pairs(n)
        mat = a[pi, pj][:, pi, pj]
        return cls(pack_sym2(mat), n)

    def full(self) -> np.ndarray:
        slot, sign, _ = _riem_tables(self.n)
        gd = self.data.ndim - 1
        padded = np.concatenate([self.data, np.zeros((1,) + self.data.shape[1:])], axis=0)
        return padded[slot] * _expand(sign, gd)

    @property
    def grid_shape(self):
        return self.data.shape[1:]


def bianchi_residual(full: np.ndarray) -> np.ndarray:
    """``R_ijkl + R_jkil + R_kijl`` for a full 4-tensor."""
    return (
        full
        + np.einsum("jkil...->ijkl...", full)
        + np.einsum("kijl...->ijkl...", full)
    )
