import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from georel.errors import DomainError
from georel.hypercomplex import (
    AlgebraKind,
    HNum,
    hamilton,
    hinner,
    hmat_inner,
    hmat_rotate,
    hnorm,
    hnormalize_rotor,
    real_unit,
)

KINDS = ["q", "h", "s"]
comp = st.floats(-3, 3, allow_nan=False)
hnum = st.lists(comp, min_size=4, max_size=4)

# basis products written out by hand: (a, b) -> (sign, result) over 1, i, j, k
BASIS = {
    "q": {("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
          ("i", "j"): (1, "k"), ("j", "i"): (-1, "k"), ("j", "k"): (1, "i"),
          ("k", "j"): (-1, "i"), ("k", "i"): (1, "j"), ("i", "k"): (-1, "j")},
    "h": {("i", "i"): (1, "1"), ("j", "j"): (1, "1"), ("k", "k"): (1, "1"),
          ("i", "j"): (1, "k"), ("j", "i"): (-1, "k"), ("j", "k"): (1, "i"),
          ("k", "j"): (-1, "i"), ("k", "i"): (1, "j"), ("i", "k"): (-1, "j")},
    "s": {("i", "i"): (-1, "1"), ("j", "j"): (1, "1"), ("k", "k"): (1, "1"),
          ("i", "j"): (1, "k"), ("j", "i"): (-1, "k"), ("j", "k"): (-1, "i"),
          ("k", "j"): (1, "i"), ("k", "i"): (1, "j"), ("i", "k"): (-1, "j")},
}
NAMES = ["1", "i", "j", "k"]


def expand(a, b, kind):
    """Scalar-by-scalar product oracle."""
    out = dict.fromkeys(NAMES, 0.0)
    for ia, ca in zip(NAMES, a):
        for ib, cb in zip(NAMES, b):
            if ia == "1":
                sign, res = 1, ib
            elif ib == "1":
                sign, res = 1, ia
            else:
                sign, res = BASIS[kind][(ia, ib)]
            out[res] += sign * ca * cb
    return np.array([out[n] for n in NAMES])


def unit(name):
    v = np.zeros(4)
    v[NAMES.index(name)] = 1
    return v


class TestNorm:
    @pytest.mark.parametrize("kind", KINDS)
    def test_real_unit(self, kind):
        assert hnorm([1.0, 0, 0, 0], kind) == 1.0

    def test_quaternion_ones(self):
        assert hnorm([1.0, 1, 1, 1], "q") == 4.0

    def test_split_sign(self):
        assert hnorm([0.0, 0, 1, 0], "s") == -1.0

    def test_hyperbolic_sign(self):
        assert hnorm([2.0, 1, 1, 1], "h") == 1.0

    def test_needs_kind(self):
        with pytest.raises(DomainError):
            hnorm([1.0, 0, 0, 0])


class TestProducts:
    @pytest.mark.parametrize("kind", KINDS)
    def test_real_unit_is_identity(self, kind, rng):
        q = rng.normal(size=4)
        assert np.array_equal(hamilton([1.0, 0, 0, 0], q, kind), q)
        assert np.array_equal(hamilton(q, [1.0, 0, 0, 0], kind), q)

    def test_ij_is_k(self):
        assert np.array_equal(hamilton(unit("i"), unit("j"), "q"), unit("k"))
        assert np.array_equal(hamilton(unit("j"), unit("i"), "q"), -unit("k"))

    @pytest.mark.parametrize("kind", KINDS)
    @given(a=hnum, b=hnum)
    def test_matches_expansion_oracle(self, kind, a, b):
        assert np.allclose(hamilton(a, b, kind), expand(a, b, kind), atol=1e-12)

    @pytest.mark.parametrize("kind", ["q", "s"])
    @given(a=hnum, b=hnum)
    def test_norm_is_multiplicative(self, kind, a, b):
        lhs = hnorm(hamilton(a, b, kind), kind)
        rhs = hnorm(a, kind) * hnorm(b, kind)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs), np.abs(a).max() ** 2 * np.abs(b).max() ** 2)

    @pytest.mark.parametrize("kind", KINDS)
    @given(a=hnum, b=hnum, c=hnum)
    def test_distributive(self, kind, a, b, c):
        lhs = hamilton(a, np.add(b, c), kind)
        rhs = hamilton(a, b, kind) + hamilton(a, c, kind)
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())

    @given(a=hnum, b=hnum, c=hnum)
    def test_quaternions_associative(self, a, b, c):
        lhs = hamilton(hamilton(a, b, "q"), c, "q")
        rhs = hamilton(a, hamilton(b, c, "q"), "q")
        assert np.abs(lhs - rhs).max() < 1e-10 * max(1.0, np.abs(lhs).max())

    def test_hyperbolic_quaternions_are_not_associative(self):
        i, j = unit("i"), unit("j")
        lhs = hamilton(hamilton(i, i, "h"), j, "h")
        rhs = hamilton(i, hamilton(i, j, "h"), "h")
        assert not np.allclose(lhs, rhs)

    def test_kind_mismatch(self):
        with pytest.raises(DomainError):
            hamilton(HNum(unit("i"), "q"), HNum(unit("j"), "s"))

    def test_tagged_numbers(self):
        out = HNum(unit("i"), "q") * HNum(unit("j"), "q")
        assert out.kind == AlgebraKind.QUATERNION and np.array_equal(out.data.numpy(), unit("k"))


class TestRotor:
    def test_scalar(self):
        assert np.array_equal(hnormalize_rotor([2.0, 0, 0, 0]), [1.0, 0, 0, 0])

    def test_unit_unchanged(self):
        r = np.array([0.5, 0.5, 0.5, 0.5])
        assert np.allclose(hnormalize_rotor(r), r, atol=1e-16)

    @given(hnum.filter(lambda v: np.linalg.norm(v) > 1e-3))
    def test_unit_norm(self, r):
        assert abs(np.linalg.norm(hnormalize_rotor(r)) - 1) < 1e-12

    def test_zero(self):
        with pytest.raises(DomainError):
            hnormalize_rotor([0.0, 0, 0, 0])

    @given(hnum.filter(lambda v: np.linalg.norm(v) > 1e-3), hnum)
    def test_quaternion_rotation_preserves_norm(self, r, h):
        out = hamilton(h, hnormalize_rotor(r), "q")
        assert abs(np.linalg.norm(out) - np.linalg.norm(h)) < 1e-9 * max(1.0, np.linalg.norm(h))


class TestInner:
    def test_zero(self, rng):
        assert hinner(rng.normal(size=4), np.zeros(4)) == 0

    def test_component_sum(self):
        assert hinner([1.0, 1, 0, 0], [1.0, 0, 1, 0]) == 1.0

    def test_flattened_dot(self, rng):
        a, b = rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
        assert hinner(a, b) == pytest.approx(float(a.ravel() @ b.ravel()), abs=1e-12)


class TestMatrixRotation:
    def test_identity_grid(self, rng):
        T = rng.normal(size=(3, 2, 4))
        R = np.zeros((3, 3, 2, 4))
        for i in range(3):
            R[i, i] = real_unit((2,)).numpy()
        assert np.array_equal(hmat_rotate(T, R, "s"), T)

    def test_anti_diagonal_reverses(self, rng):
        T = rng.normal(size=(3, 2, 4))
        R = np.zeros((3, 3, 2, 4))
        for i in range(3):
            R[i, 2 - i] = real_unit((2,)).numpy()
        assert np.array_equal(hmat_rotate(T, R, "q"), T[::-1])

    @pytest.mark.parametrize("kind", KINDS)
    def test_matches_expansion(self, kind, rng):
        T = rng.normal(size=(3, 1, 4))
        R = rng.normal(size=(3, 3, 1, 4))
        out = hmat_rotate(T, R, kind)
        for j in range(3):
            expect = sum(expand(T[i, 0], R[i, j, 0], kind) for i in range(3))
            assert np.allclose(out[j, 0], expect, atol=1e-12)

    def test_matrix_inner(self, rng):
        A, B = rng.normal(size=(3, 2, 4)), rng.normal(size=(3, 2, 4))
        assert hmat_inner(A, B) == pytest.approx(float((A * B).sum()), abs=1e-12)

    def test_batched_tensor_stays_torch(self):
        T = torch.randn(5, 3, 2, 4, dtype=torch.float64)
        R = torch.randn(5, 3, 3, 2, 4, dtype=torch.float64)
        assert isinstance(hmat_rotate(T, R, "h"), torch.Tensor)
