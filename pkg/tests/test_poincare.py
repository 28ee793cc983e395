import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from georel.errors import DomainError
from georel.poincare import (
    EnclosingBall,
    HexGraph,
    ball_distance,
    disjoint_loss,
    ecv,
    enclosing_ball,
    hcv,
    hmi_objective,
    hyperplane_logit,
    inside_loss,
    membership_loss,
    membership_score,
    mobius_add,
    nonmembership_loss,
    project_to_ball,
)


@st.composite
def ball_points(draw, d=3, max_norm=0.95, min_norm=0.0):
    v = np.array(draw(st.lists(st.floats(-1, 1), min_size=d, max_size=d)))
    n = np.linalg.norm(v)
    r = draw(st.floats(min_norm, max_norm))
    return v / n * r if n > 1e-6 else np.full(d, max(min_norm, 1e-3) / math.sqrt(d) + 1e-3)


def mobius_oracle(x, y):
    xy, x2, y2 = float(x @ y), float(x @ x), float(y @ y)
    return ((1 + 2 * xy + y2) * x + (1 - x2) * y) / (1 + 2 * xy + x2 * y2)


class TestMobius:
    def test_zero_is_right_identity(self, rng):
        x = rng.uniform(-0.5, 0.5, 3)
        assert np.array_equal(mobius_add(x, np.zeros(3)), x)

    def test_left_inverse(self, rng):
        x = rng.uniform(-0.5, 0.5, 3)
        assert np.abs(mobius_add(-x, x)).max() < 1e-15

    @given(ball_points(), ball_points())
    def test_matches_formula(self, x, y):
        out = mobius_add(x, y)
        assert np.allclose(out, mobius_oracle(x, y), atol=1e-12)
        assert np.linalg.norm(out) < 1

    @given(ball_points(), ball_points())
    def test_left_cancellation(self, x, y):
        assert np.allclose(mobius_add(-x, mobius_add(x, y)), y, atol=1e-9)


class TestDistance:
    def test_self(self, rng):
        x = rng.uniform(-0.5, 0.5, 2)
        assert ball_distance(x, x) == 0

    def test_closed_form(self):
        assert ball_distance([0.0, 0.0], [0.5, 0.0]) == pytest.approx(math.log(3), abs=1e-14)
        assert math.acosh(5 / 3) == pytest.approx(math.log(3), abs=1e-14)

    @given(ball_points(), ball_points())
    def test_symmetric(self, x, y):
        assert ball_distance(x, y) == pytest.approx(ball_distance(y, x), abs=1e-12)

    def test_projection(self):
        x = project_to_ball(np.array([[2.0, 0.0], [0.3, 0.1]]))
        assert np.linalg.norm(x[0]) == pytest.approx(1 - 1e-5, abs=1e-15)
        assert np.array_equal(x[1], [0.3, 0.1])


class TestEnclosingBall:
    def test_example(self):
        b = enclosing_ball([0.5, 0.0])
        assert np.allclose(b.o, [1.25, 0.0], atol=1e-15) and b.r == pytest.approx(0.75, abs=1e-15)
        assert 1.25**2 == pytest.approx(1 + 0.75**2)

    def test_boundary_limit(self):
        c = np.array([0.0, 1 - 1e-9])
        b = enclosing_ball(c)
        assert b.r < 1e-8 and np.allclose(b.o, c, atol=1e-8)

    @given(ball_points(min_norm=0.05))
    def test_orthogonality_and_nearest_point(self, c):
        b = enclosing_ball(c)
        no = np.linalg.norm(b.o)
        assert abs(no**2 - (1 + b.r**2)) < 1e-8 * max(1.0, no**2)
        assert abs(no - b.r - np.linalg.norm(c)) < 1e-10 * max(1.0, no)

    def test_origin(self):
        with pytest.raises(DomainError):
            enclosing_ball([0.0, 0.0])

    @given(ball_points(min_norm=0.05), st.floats(-1, 1), st.floats(-1, 1))
    def test_hyperplane_lies_on_the_sphere(self, c, a, b):
        # w orthogonal to c gives a point c (+) w of the hyperplane through c
        w = np.array([a, b, 0.0])
        w = w - (w @ c) / (c @ c) * c
        if np.linalg.norm(w) > 0.9:
            w = w / np.linalg.norm(w) * 0.9
        p = mobius_add(c, w)
        ball = enclosing_ball(c)
        assert abs(np.linalg.norm(p - ball.o) - ball.r) < 1e-8 * max(1.0, ball.r)
        assert hyperplane_logit(p, c) < 1e-8


class TestLosses:
    def test_strictly_inside(self):
        assert inside_loss(EnclosingBall(np.array([0.1, 0.0]), 0.2), EnclosingBall(np.zeros(2), 1.0)) == 0

    def test_concentric_disjoint(self):
        b = EnclosingBall(np.array([0.3, 0.4]), 0.25)
        assert disjoint_loss(b, b) == pytest.approx(0.5)

    def test_center_membership(self):
        b = EnclosingBall(np.array([0.3, 0.4]), 0.25)
        assert membership_loss(b.o, b) == 0 and nonmembership_loss(b.o, b) == pytest.approx(0.25)
        assert membership_score(b.o, b) == pytest.approx(1 / (1 + math.exp(-0.25)))

    @given(st.integers(0, 2**31))
    def test_inside_loss_iff_containment(self, seed):
        rng = np.random.default_rng(seed)
        bu = EnclosingBall(rng.normal(size=2), rng.uniform(0.1, 1))
        bw = EnclosingBall(rng.normal(size=2), rng.uniform(0.1, 2))
        pts = bu.o + bu.r * np.sqrt(rng.uniform(0, 1, (400, 1))) * _dirs(rng, 400)
        boundary = bu.o + bu.r * _dirs(rng, 400)
        inside_w = np.linalg.norm(np.vstack([pts, boundary]) - bw.o, axis=1) <= bw.r + 1e-12
        if inside_loss(bu, bw) == 0:
            assert inside_w.all()
        else:
            assert not inside_w[400:].all() or inside_loss(bu, bw) < 1e-2

    @given(st.integers(0, 2**31))
    def test_disjoint_loss_iff_no_overlap(self, seed):
        rng = np.random.default_rng(seed)
        bu = EnclosingBall(rng.normal(size=2), rng.uniform(0.1, 1))
        bw = EnclosingBall(rng.normal(size=2), rng.uniform(0.1, 1))
        pts = bu.o + bu.r * np.sqrt(rng.uniform(0, 1, (2000, 1))) * _dirs(rng, 2000)
        hits = np.linalg.norm(pts - bw.o, axis=1) < bw.r - 1e-12
        if disjoint_loss(bu, bw) == 0:
            assert not hits.any()

    @given(st.integers(0, 2**31))
    def test_transitivity(self, seed):
        rng = np.random.default_rng(seed)
        w = EnclosingBall(rng.normal(size=2), 2.0)
        v = EnclosingBall(w.o + rng.uniform(-0.4, 0.4, 2), 1.0)
        u = EnclosingBall(v.o + rng.uniform(-0.2, 0.2, 2), 0.5)
        a, b = inside_loss(u, v), inside_loss(v, w)
        assert inside_loss(u, w) <= a + b + 1e-12
        if a == 0 and b == 0:
            assert inside_loss(u, w) == 0


def _dirs(rng, n):
    a = rng.uniform(0, 2 * math.pi, n)
    return np.stack([np.cos(a), np.sin(a)], 1)


class TestHyperplaneLogit:
    def test_self(self):
        assert hyperplane_logit([0.3, 0.2], [0.3, 0.2]) == pytest.approx(0.0, abs=1e-15)

    @given(ball_points(d=2), ball_points(d=2, min_norm=0.05))
    def test_nonnegative(self, p, c):
        assert hyperplane_logit(p, c) >= 0


class TestObjective:
    def chain(self):
        return HexGraph.from_edges([("a", "b"), ("b", "c")], [("a", "x")])

    def test_zero_terms(self):
        g = HexGraph.from_edges([("a", "b")])
        pts = np.array([[0.0, 0.8], [0.0, 0.5]])  # a's ball sits inside b's
        assert hmi_objective(pts, [], [], g) == 0.0

    def test_lambda_zero_is_classification_only(self, rng):
        g = self.chain()
        pts = rng.uniform(0.2, 0.6, (4, 2))
        inst = rng.uniform(-0.5, 0.5, (3, 2))
        pos, neg = [(0, "a"), (1, "c")], [(2, "b")]
        balls = enclosing_ball(pts)
        idx = g.index()
        expect = sum(membership_loss(inst[i], EnclosingBall(balls.o[idx[l]], balls.r[idx[l]])) for i, l in pos)
        expect += sum(nonmembership_loss(inst[i], EnclosingBall(balls.o[idx[l]], balls.r[idx[l]])) for i, l in neg)
        assert hmi_objective(pts, pos, neg, g, lam=0.0, instances=inst) == pytest.approx(expect, abs=1e-12)

    def test_hand_summed_chain(self):
        g = self.chain()
        idx = g.index()
        pts = np.zeros((4, 2))
        pts[idx["a"]] = [0.5, 0.0]
        pts[idx["b"]] = [0.0, 0.7]  # violation: a is not inside b
        pts[idx["c"]] = [0.0, 0.4]
        pts[idx["x"]] = [0.55, 0.0]  # overlaps a
        B = enclosing_ball(pts)
        ball = {k: EnclosingBall(B.o[i], B.r[i]) for k, i in idx.items()}
        expect = 2.0 * (inside_loss(ball["a"], ball["b"]) + inside_loss(ball["b"], ball["c"]) + disjoint_loss(ball["a"], ball["x"]))
        assert expect > 0
        assert hmi_objective(pts, [], [], g, lam=2.0) == pytest.approx(expect, abs=1e-12)

    def test_unknown_label(self):
        with pytest.raises(DomainError):
            hmi_objective(np.full((4, 2), 0.3), [(0, "nope")], [], self.chain(), instances=np.zeros((1, 2)))

    def test_negative_lambda(self):
        with pytest.raises(DomainError):
            hmi_objective(np.full((4, 2), 0.3), [], [], self.chain(), lam=-1)


class TestHexGraph:
    def test_cycle_rejected(self):
        with pytest.raises(DomainError):
            HexGraph.from_edges([("a", "b"), ("b", "a")])

    def test_self_exclusion_rejected(self):
        with pytest.raises(DomainError):
            HexGraph.from_edges([], [("a", "a")])


class TestViolationMetrics:
    def test_consistent_scores(self):
        s = np.array([[0.2, 0.9], [0.1, 0.1]])
        assert hcv(s, [(0, 1)]) == 0

    def test_single_violation(self):
        assert hcv(np.array([[0.9, 0.2]]), [(0, 1)]) == 1

    def test_counting_oracle(self, rng):
        s = rng.uniform(size=(30, 5))
        he = [(0, 1), (2, 1), (3, 4)]
        ee = [(0, 2), (1, 4)]
        pred = s > 0.5
        h_expect = np.mean([s[i, c] - s[i, p] > 0 for i in range(30) for c, p in he])
        e_expect = np.mean([pred[i, a] and pred[i, b] for i in range(30) for a, b in ee])
        assert hcv(s, he) == pytest.approx(h_expect) and ecv(s, ee) == pytest.approx(e_expect)
