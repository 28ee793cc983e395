import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from georel.errors import DimensionError, DomainError
from georel.transforms import (
    UltraRelParams,
    apply_relation,
    build_H,
    build_U,
    build_V,
    dense_relation,
    givens_block,
    signature_matrix,
)

angles = st.floats(-10, 10, allow_nan=False)
PQ = [(2, 2), (4, 2), (6, 4), (8, 4)]


def random_params(seed, p, q):
    return UltraRelParams.random(p, q, torch.Generator().manual_seed(seed))


class TestGivens:
    def test_zero_rotation_is_identity(self):
        assert np.array_equal(givens_block(0.0, "rotation"), np.eye(2))

    def test_zero_reflection(self):
        assert np.array_equal(givens_block(0.0, "reflection"), np.diag([1.0, -1.0]))

    def test_rotation_layout(self):
        c, s = math.cos(0.3), math.sin(0.3)
        assert np.allclose(givens_block(0.3), [[c, -s], [s, c]], atol=0)

    @given(angles, st.sampled_from(["rotation", "reflection"]))
    def test_orthogonal(self, t, kind):
        G = givens_block(t, kind)
        assert np.abs(G.T @ G - np.eye(2)).max() < 1e-12

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            givens_block(0.1, "shear")


class TestBuilders:
    def test_zero_angles(self):
        assert np.array_equal(build_U(np.zeros(3), 4, 2), np.eye(6))
        assert np.array_equal(build_V(np.zeros(3), 4, 2), np.diag([1.0, -1, 1, -1, 1, -1]))

    def test_zero_boost(self):
        assert np.array_equal(build_H(np.zeros(2), 4, 2), np.eye(6))

    @given(st.lists(angles, min_size=4, max_size=4))
    def test_orthogonality(self, a):
        for M in (build_U(a, 6, 2), build_V(a, 6, 2)):
            assert np.abs(M.T @ M - np.eye(8)).max() < 1e-10

    def test_H_block_layout(self, rng):
        mu = rng.normal(size=2)
        H = build_H(mu, 6, 2)
        C, S = H[:2, :2], H[:2, 6:]
        assert np.allclose(C, np.diag(np.cosh(mu)), atol=0) and np.allclose(S, np.diag(np.sinh(mu)), atol=0)
        assert np.array_equal(H[2:6, 2:6], np.eye(4))
        assert np.abs(C @ C - S @ S - np.eye(2)).max() < 1e-12

    @given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=2))
    def test_H_is_J_orthogonal(self, mu):
        H, J = build_H(mu, 4, 2), signature_matrix(4, 2)
        assert np.abs(H.T @ J @ H - J).max() < 1e-9 * max(1.0, np.cosh(np.abs(mu)).max() ** 2)

    def test_angle_count_mismatch(self):
        with pytest.raises(DimensionError):
            build_U(np.zeros(2), 4, 2)

    @pytest.mark.parametrize("p,q", [(2, 4), (3, 2), (4, 0)])
    def test_invalid_signatures(self, p, q):
        with pytest.raises(DomainError):
            UltraRelParams(None, None, None, p, q)


class TestApply:
    def test_zero_params_flip_odd_coordinates(self):
        x = np.arange(1.0, 7.0)
        params = UltraRelParams(torch.zeros(3), torch.zeros(3), torch.zeros(2), 4, 2)
        assert np.array_equal(apply_relation(params, x), [1.0, -2, 3, -4, 5, -6])

    @pytest.mark.parametrize("p,q", PQ)
    def test_blockwise_matches_dense(self, p, q, rng):
        for seed in range(10):
            params = random_params(seed, p, q)
            x = torch.as_tensor(rng.normal(size=(5, p + q)))
            dense = x @ torch.as_tensor(dense_relation(params)).T
            assert (apply_relation(params, x) - dense).abs().max() < 1e-12

    @pytest.mark.parametrize("p,q", PQ)
    def test_J_orthogonal(self, p, q):
        J = signature_matrix(p, q)
        for seed in range(25):
            F = np.asarray(dense_relation(random_params(seed, p, q)))
            assert np.abs(F.T @ J @ F - J).max() < 1e-9

    @pytest.mark.parametrize("phi0", [0.0, -math.pi])
    def test_symmetry_pattern(self, phi0, rng):
        params = UltraRelParams(None, torch.full((3,), phi0), None, 4, 2)
        x = torch.as_tensor(rng.normal(size=(4, 6)))
        assert (apply_relation(params, apply_relation(params, x)) - x).abs().max() < 1e-12

    def test_inversion_pattern(self, rng):
        t1 = torch.as_tensor(rng.uniform(-3, 3, 3))
        r1, r2 = UltraRelParams(t1, None, None, 4, 2), UltraRelParams(-t1, None, None, 4, 2)
        x = torch.as_tensor(rng.normal(size=(4, 6)))
        assert (apply_relation(r2, apply_relation(r1, x)) - x).abs().max() < 1e-12

    def test_composition_pattern(self, rng):
        t2, t3 = (torch.as_tensor(rng.uniform(-3, 3, 3)) for _ in range(2))
        t1 = torch.remainder(t2 + t3 + math.pi, 2 * math.pi) - math.pi
        x = torch.as_tensor(rng.normal(size=(4, 6)))
        lhs = apply_relation(UltraRelParams(t1, None, None, 4, 2), x)
        rhs = apply_relation(UltraRelParams(t3, None, None, 4, 2), apply_relation(UltraRelParams(t2, None, None, 4, 2), x))
        assert (lhs - rhs).abs().max() < 1e-12

    def test_preserves_manifold(self, rng):
        from georel.manifold import Signature, canonical_to_ultra, project_to_manifold, pseudo_inner, ultra_to_canonical

        p, q = 4, 2
        sig = Signature(p, q)
        x = canonical_to_ultra(project_to_manifold(rng.normal(size=(10, 6)), sig), p, q)
        y = apply_relation(random_params(3, p, q), x)
        inner = pseudo_inner(ultra_to_canonical(y, p, q), ultra_to_canonical(y, p, q), sig)
        assert (inner + 1).abs().max() < 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            apply_relation(random_params(0, 4, 2), np.zeros(5))
