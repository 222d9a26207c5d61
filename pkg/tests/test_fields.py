import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from imcflow.fields import (Riem4Field, Sym2Field, bianchi_residual, ncomp_sym2, pack_sym2,
                            project_riemann, sym_index, sym_pairs, unpack_sym2)


def test_sym_index_inverts_pairs():
    for n in range(2, 6):
        idx = sym_index(n)
        i, j = sym_pairs(n)
        assert len(i) == ncomp_sym2(n) == n * (n + 1) // 2
        for k, (a, b) in enumerate(zip(i, j)):
            assert idx[a, b] == idx[b, a] == k


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5).flatmap(
    lambda n: arrays(float, (n * (n + 1) // 2, 3, 2),
                     elements=st.floats(-1e3, 1e3, allow_nan=False))))
def test_pack_unpack_round_trip(packed):
    n = {3: 2, 6: 3, 10: 4, 15: 5}[packed.shape[0]]
    full = unpack_sym2(packed, n)
    assert np.array_equal(full, full.swapaxes(0, 1))
    assert np.array_equal(pack_sym2(full), packed)


def test_pack_averages_asymmetric_input():
    A = np.array([[1.0, 2.0], [4.0, 3.0]])
    assert np.allclose(unpack_sym2(pack_sym2(A), 2), [[1.0, 3.0], [3.0, 3.0]])


def test_sym2field_full_matches_from_full(rng):
    A = rng.standard_normal((3, 3, 4))
    A = A + A.swapaxes(0, 1)
    f = Sym2Field.from_full(A)
    assert np.allclose(f.full(), A)
    assert f.n == 3


def test_projection_produces_algebraic_curvature_tensor(rng):
    n = 3
    R = project_riemann(rng.standard_normal((n, n, n, n, 5)))
    assert np.allclose(R, -R.swapaxes(0, 1))
    assert np.allclose(R, -R.swapaxes(2, 3))
    assert np.allclose(R, np.transpose(R, (2, 3, 0, 1, 4)))
    assert np.max(np.abs(bianchi_residual(R))) < 1e-12
    assert np.allclose(project_riemann(R), R)
    assert isinstance(Riem4Field.from_full(R), Riem4Field)
