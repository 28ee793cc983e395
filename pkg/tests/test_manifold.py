import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from georel.errors import DimensionError, DomainError
from georel.manifold import (
    Signature,
    broken_distance,
    canonical_to_ultra,
    connected,
    diffeo_exp,
    diffeo_log,
    exp_map,
    log_map,
    manhattan_distance,
    parallel_transport,
    perturb_time,
    project_to_manifold,
    pseudo_exp,
    pseudo_inner,
    pseudo_log,
    reference_point,
    sphere_project,
    sphere_unproject,
    ultra_to_canonical,
)

SIGS = [Signature(3, 1, -1.0), Signature(2, 2, -0.5), Signature(4, 2, -2.0), Signature(1, 3, -1.5)]
sig_st = st.sampled_from(SIGS)


def loop_inner(x, y, t_plus):
    total = 0.0
    for i, (a, b) in enumerate(zip(x, y)):
        total += -a * b if i < t_plus else a * b
    return total


def on_manifold(rng, sig, n=None):
    shape = (sig.dim,) if n is None else (n, sig.dim)
    return project_to_manifold(rng.normal(size=shape), sig)


def tangent_at(x, v, sig):
    """Remove the normal component of v at x."""
    return v - np.expand_dims(np.asarray(pseudo_inner(x, v, sig)) / sig.beta, -1) * x


vectors = st.lists(st.floats(-3, 3, allow_nan=False), min_size=6, max_size=6)


class TestPseudoInner:
    def test_time_coordinate(self):
        assert pseudo_inner([1, 0, 0], [1, 0, 0], Signature(2, 1)) == -1

    def test_space_coordinate(self):
        assert pseudo_inner([0, 1, 0], [0, 1, 0], Signature(2, 1)) == 1

    def test_matches_loop(self, rng):
        sig = Signature(3, 3)
        x, y = rng.normal(size=6), rng.normal(size=6)
        assert pseudo_inner(x, y, sig) == pytest.approx(loop_inner(x, y, 3), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            pseudo_inner([1, 0], [1, 0], Signature(2, 1))

    @given(vectors, vectors)
    def test_symmetric_bilinear(self, x, y):
        sig = Signature(3, 3)
        assert pseudo_inner(x, y, sig) == pytest.approx(pseudo_inner(y, x, sig), abs=1e-9)
        assert pseudo_inner(2 * np.array(x), y, sig) == pytest.approx(2 * pseudo_inner(x, y, sig), abs=1e-9)


class TestDiffeomorphism:
    def test_psi_example(self):
        sig = Signature(1, 2, -1.0)
        assert np.allclose(sphere_project([3.0, 4.0, 0.0], sig), [0.6, 0.8, 0.0], atol=1e-15)

    def test_psi_inverse_example(self):
        sig = Signature(1, 2, -1.0)
        x = sphere_unproject([0.6, 0.8, 0.0], sig)
        assert np.allclose(x, [0.6, 0.8, 0.0], atol=1e-15)
        assert pseudo_inner(x, x, sig) == pytest.approx(-1.0, abs=1e-12)

    def test_projection_example(self):
        sig = Signature(1, 2, -1.0)
        x = project_to_manifold([2.0, 0.0, 1.0], sig)
        assert np.allclose(x, [math.sqrt(2), 0.0, 1.0], atol=1e-14)
        assert -2 + 1 == pytest.approx(pseudo_inner(x, x, sig), abs=1e-12)

    def test_zero_time_part(self):
        with pytest.raises(DomainError):
            sphere_project([0.0, 0.0, 1.0], Signature(1, 2))

    def test_unproject_needs_sphere_point(self):
        with pytest.raises(DomainError):
            sphere_unproject([0.5, 0.0, 1.0], Signature(1, 2))

    def test_perturbation_rescues_degenerate_rows(self, gen):
        sig = Signature(2, 2)
        x = perturb_time(torch.tensor([[0.0, 0.0, 1.0, 2.0], [1.0, 0.0, 0.0, 0.0]]), sig, gen)
        assert torch.all(x[0, :2] != 0) and torch.all(x[0, :2].abs() <= 0.02)
        assert torch.equal(x[1], torch.tensor([1.0, 0.0, 0.0, 0.0], dtype=torch.float64))
        project_to_manifold(x, sig)

    @given(sig_st, st.integers(0, 2**31))
    def test_projection_satisfies_constraint(self, sig, seed):
        x = on_manifold(np.random.default_rng(seed), sig, 20)
        assert np.abs(pseudo_inner(x, x, sig) - sig.beta).max() <= 1e-9 * max(1, np.abs(x).max() ** 2)

    @given(sig_st, st.integers(0, 2**31))
    def test_round_trips(self, sig, seed):
        rng = np.random.default_rng(seed)
        x = on_manifold(rng, sig, 20)
        assert np.allclose(sphere_unproject(sphere_project(x, sig), sig), x, atol=1e-9)
        z = sphere_project(x, sig)
        assert np.allclose(sphere_project(sphere_unproject(z, sig), sig), z, atol=1e-9)

    def test_projection_is_idempotent(self, rng):
        sig = SIGS[1]
        x = on_manifold(rng, sig, 10)
        assert np.allclose(project_to_manifold(x, sig), x, atol=1e-12)


class TestTableMaps:
    @pytest.mark.parametrize("kind,x,K", [
        ("euclidean", [0.5, -1.0, 2.0], 1.0),
        ("sphere", [0.0, 0.6, 0.8], 1.0),
        ("hyperboloid", [math.sqrt(2), 1.0, 0.0], -1.0),
    ])
    def test_zero_tangent_and_self_log(self, kind, x, K):
        assert np.allclose(exp_map(kind, x, np.zeros(3), K), x, atol=1e-15)
        assert np.allclose(log_map(kind, x, x, K), 0, atol=1e-7)

    def test_sphere_round_trip(self, rng):
        K = 2.0
        for _ in range(50):
            x = rng.normal(size=4)
            x /= np.linalg.norm(x) * math.sqrt(K)
            v = rng.normal(size=4) * 0.3
            v -= (v @ x) * K * x
            back = log_map("sphere", x, exp_map("sphere", x, v, K), K)
            assert np.linalg.norm(back - v) <= 1e-6 * max(1e-12, np.linalg.norm(v))

    def test_hyperboloid_round_trip(self, rng):
        K = -0.5
        for _ in range(50):
            s = rng.normal(size=3)
            x = np.concatenate([[math.sqrt(1 / -K + s @ s)], s])
            v = rng.normal(size=4) * 0.5
            lor = -x[0] * v[0] + x[1:] @ v[1:]
            v = v - lor * -K * x * -1  # project onto the tangent space <x, v>_L = 0
            assert abs(-x[0] * v[0] + x[1:] @ v[1:]) < 1e-10
            back = log_map("hyperboloid", x, exp_map("hyperboloid", x, v, K), K)
            assert np.linalg.norm(back - v) <= 1e-6 * np.linalg.norm(v)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            exp_map("torus", [1.0], [0.0])

    def test_out_of_domain_log(self):
        with pytest.raises(DomainError):
            log_map("hyperboloid", [1.0, 0.0], [0.5, 0.0], -1.0)


class TestNativeGeometry:
    @given(sig_st, st.integers(0, 2**31))
    def test_log_exp_round_trip(self, sig, seed):
        rng = np.random.default_rng(seed)
        x = on_manifold(rng, sig, 10)
        xi = tangent_at(x, rng.normal(size=x.shape) * 0.4, sig)
        y = pseudo_exp(x, xi, sig)
        assert np.abs(pseudo_inner(y, y, sig) - sig.beta).max() < 1e-8 * max(1, np.abs(y).max() ** 2)
        back = pseudo_log(x, y, sig)
        assert np.linalg.norm(back - xi) <= 1e-6 * max(1.0, np.linalg.norm(xi))

    def test_pseudo_log_rejects_broken_pairs(self, rng):
        sig = SIGS[0]
        x = project_to_manifold([1.0, 0.0, 0.0, 0.0], sig)
        y = project_to_manifold([2.0, 1.0, 0.0, 0.0], sig)
        assert not connected(x, -y, sig)
        with pytest.raises(DomainError):
            pseudo_log(x, -y, sig)

    def test_transport_to_self_is_identity(self, rng):
        sig = SIGS[2]
        x = on_manifold(rng, sig)
        z = tangent_at(x, rng.normal(size=sig.dim), sig)
        assert np.allclose(parallel_transport(x, x, z, sig), z, atol=1e-12)

    @given(sig_st, st.integers(0, 2**31))
    def test_transport_is_an_isometry_and_tangent(self, sig, seed):
        rng = np.random.default_rng(seed)
        x = on_manifold(rng, sig, 10)
        y = on_manifold(rng, sig, 10)
        z1 = tangent_at(x, rng.normal(size=x.shape), sig)
        z2 = tangent_at(x, rng.normal(size=x.shape), sig)
        p1, p2 = parallel_transport(x, y, z1, sig), parallel_transport(x, y, z2, sig)
        before, after = pseudo_inner(z1, z2, sig), pseudo_inner(p1, p2, sig)
        scale = np.maximum(1.0, np.abs(before))
        assert np.all(np.abs(after - before) / scale < 1e-6)
        dest = np.where(connected(x, y, sig)[:, None], y, -y)
        assert np.abs(pseudo_inner(dest, p1, sig)).max() < 1e-8 * max(1.0, np.abs(p1).max() * np.abs(dest).max())

    def test_broken_distance_basics(self, rng):
        sig = Signature(2, 2, -2.0)
        x = on_manifold(rng, sig)
        assert broken_distance(x, x, sig) == pytest.approx(0.0, abs=1e-7)
        assert broken_distance(x, -x, sig) == pytest.approx(math.pi * math.sqrt(2.0), abs=1e-9)

    @given(sig_st, st.integers(0, 2**31))
    def test_broken_distance_symmetric(self, sig, seed):
        rng = np.random.default_rng(seed)
        x, y = on_manifold(rng, sig, 10), on_manifold(rng, sig, 10)
        assert np.allclose(broken_distance(x, y, sig), broken_distance(y, x, sig), atol=1e-8)


class TestDiffeoMaps:
    def test_zero_tangent_at_reference_point(self):
        sig = SIGS[1]
        o = reference_point(sig)
        assert np.allclose(diffeo_exp(o, np.zeros(sig.dim), sig), o, atol=1e-15)

    @given(sig_st, st.integers(0, 2**31))
    def test_round_trip_at_reference_point(self, sig, seed):
        rng = np.random.default_rng(seed)
        o = reference_point(sig)
        v = tangent_at(o, rng.normal(size=sig.dim) * 0.3, sig)
        # tangency at o is exactly "zero first coordinate"
        assert abs(pseudo_inner(o, v, sig)) < 1e-12
        back = diffeo_log(o, diffeo_exp(o, v, sig), sig)
        assert np.linalg.norm(back - v) <= 1e-6 * max(1.0, np.linalg.norm(v))

    def test_pure_time_tangent_matches_native_exp(self, rng):
        sig = Signature(2, 3, -1.5)
        o = reference_point(sig)
        v = np.zeros(sig.dim)
        v[1:3] = rng.normal(size=2) * 0.7
        assert np.allclose(diffeo_exp(o, v, sig), pseudo_exp(o, v, sig), atol=1e-12)


class TestManhattan:
    def test_self_distance_zero(self, rng):
        sig = SIGS[1]
        x = on_manifold(rng, sig)
        assert manhattan_distance(x, x, sig) == pytest.approx(0.0, abs=1e-7)

    @given(sig_st, st.integers(0, 2**31))
    def test_symmetric(self, sig, seed):
        rng = np.random.default_rng(seed)
        x, y = on_manifold(rng, sig, 10), on_manifold(rng, sig, 10)
        assert np.allclose(manhattan_distance(x, y, sig), manhattan_distance(y, x, sig), atol=1e-10)

    def test_fiber_pair_reduces_to_time_leg(self, rng):
        sig = Signature(2, 2, -1.0)
        space = rng.normal(size=2)
        radius = math.sqrt(1 + space @ space)
        a, b = 0.4, 1.9
        x = np.concatenate([radius * np.array([math.cos(a), math.sin(a)]), space])
        y = np.concatenate([radius * np.array([math.cos(b), math.sin(b)]), space])
        assert manhattan_distance(x, y, sig) == pytest.approx(radius * (b - a), rel=1e-12)

    @given(st.integers(0, 2**31))
    def test_identity_of_indiscernibles(self, seed):
        rng = np.random.default_rng(seed)
        sig = SIGS[2]
        x = on_manifold(rng, sig)
        y = on_manifold(rng, sig)
        d = manhattan_distance(x, y, sig)
        assert d > 0 or np.abs(x - y).max() <= 1e-7

    def test_layout_permutation_round_trip(self, rng):
        x = torch.as_tensor(rng.normal(size=(3, 6)))
        assert torch.equal(canonical_to_ultra(ultra_to_canonical(x, 4, 2), 4, 2), x)
        assert torch.equal(ultra_to_canonical(x, 4, 2)[:, :2], x[:, 4:])


def test_signature_validation():
    with pytest.raises(DomainError):
        Signature(2, 0)
    with pytest.raises(DomainError):
        Signature(2, 1, 1.0)
    assert Signature.from_radius(2.0, 4, 2) == Signature(4, 2, -4.0)
