"""Property suites behind ``georel verify``: geometry, algebra, patterns, soundness, gradients, monotonicity.

Each suite returns a list of :class:`Check` rows.  A check records the worst
measured residual (or violation count) over its random cases and the bound
it has to meet.
"""

import math
import time
from dataclasses import dataclass

import numpy as np
import torch

from .boxes import box_contains, box_intersection, is_empty
from .data import ElAxiom, HyperFact, NestedTriple, Triple
from .errors import InconsistentAxiomError
from .hypercomplex import AlgebraKind, hamilton, hnorm
from .manifold import (
    Signature,
    broken_distance,
    diffeo_exp,
    diffeo_log,
    exp_map,
    log_map,
    parallel_transport,
    project_to_manifold,
    pseudo_exp,
    pseudo_inner,
    pseudo_log,
    sphere_project,
    sphere_unproject,
)
from .models import HMI, BoxEL, NestE, ShrinkE, UltraE
from .models.boxel import satisfies
from .models.neste import nested_transform
from .models.shrinke import box_distance, qualified_box, query_box
from .synthetic import family_hex, family_kb, planted_kg
from .training import SeedStreams
from .transforms import UltraRelParams, apply_relation, dense_relation, givens_block, rotate_pairs, signature_matrix

SUITES = ("geometry", "algebra", "patterns", "soundness", "gradients", "monotonicity")
T = torch.float64


@dataclass
class Check:
    suite: str
    name: str
    measured: float
    bound: float
    cases: int
    detail: str = ""

    @property
    def passed(self):
        return bool(np.isfinite(self.measured)) and self.measured <= self.bound


def _rel(a, b):
    a, b = torch.as_tensor(a, dtype=T), torch.as_tensor(b, dtype=T)
    scale = torch.clamp(torch.abs(b), min=1.0)
    return float((torch.abs(a - b) / scale).max())


def _randn(g, *shape):
    return torch.randn(*shape, generator=g, dtype=T)


def _rand(g, *shape, low=0.0, high=1.0):
    return torch.rand(*shape, generator=g, dtype=T) * (high - low) + low


# ------------------------------------------------------------------ geometry

SIGNATURES = (Signature(3, 1, -1.0), Signature(2, 2, -0.5), Signature(4, 2, -2.0), Signature(1, 3, -1.5))


def _manifold_points(g, sig, n):
    return project_to_manifold(_randn(g, n, sig.dim), sig)


def _tangent(x, v, sig):
    return v - (pseudo_inner(x, v, sig) / sig.beta).unsqueeze(-1) * x


def geometry_suite(g, n=200):
    worst = {k: 0.0 for k in ("psi_inv_psi", "psi_psi_inv", "residual", "exp_log", "log_exp", "diffeo", "tables", "transport", "broken")}
    for sig in SIGNATURES:
        x = _manifold_points(g, sig, n)
        worst["psi_inv_psi"] = max(worst["psi_inv_psi"], _rel(sphere_unproject(sphere_project(x, sig), sig), x))
        u = _randn(g, n, sig.t_plus)
        u = sig.radius * u / torch.linalg.vector_norm(u, dim=-1, keepdim=True)
        z = torch.cat([u, _randn(g, n, sig.s)], -1)
        worst["psi_psi_inv"] = max(worst["psi_psi_inv"], _rel(sphere_project(sphere_unproject(z, sig), sig), z))
        worst["residual"] = max(worst["residual"], float((torch.abs(pseudo_inner(x, x, sig) - sig.beta) / -sig.beta).max()))

        # tangent vectors kept short so log stays on its principal branch
        xi = 0.5 * _tangent(x, _randn(g, n, sig.dim), sig)
        xi = xi / torch.clamp(torch.linalg.vector_norm(xi, dim=-1, keepdim=True), min=1.0)
        y = pseudo_exp(x, xi, sig)
        worst["log_exp"] = max(worst["log_exp"], _rel(pseudo_log(x, y, sig), xi))
        worst["exp_log"] = max(worst["exp_log"], _rel(pseudo_exp(x, pseudo_log(x, y, sig), sig), y))
        worst["diffeo"] = max(worst["diffeo"], _rel(diffeo_exp(x, diffeo_log(x, y, sig), sig), y))

        z1 = _tangent(x, _randn(g, n, sig.dim), sig)
        z2 = _tangent(x, _randn(g, n, sig.dim), sig)
        before = pseudo_inner(z1, z2, sig)
        after = pseudo_inner(parallel_transport(x, y, z1, sig), parallel_transport(x, y, z2, sig), sig)
        worst["transport"] = max(worst["transport"], _rel(after, before))
        worst["broken"] = max(worst["broken"], float(torch.abs(broken_distance(x, -x, sig) - math.pi * sig.radius).max()))

    for K in (0.5, 1.0, 2.0):
        x = _randn(g, n, 4)
        x = x / (math.sqrt(K) * torch.linalg.vector_norm(x, dim=-1, keepdim=True))
        v = _randn(g, n, 4)
        v = v - (v * x).sum(-1, keepdim=True) * K * x
        v = 2.5 * v / (math.sqrt(K) * torch.clamp(torch.linalg.vector_norm(v, dim=-1, keepdim=True), min=1.0))
        worst["tables"] = max(worst["tables"], _rel(log_map("sphere", x, exp_map("sphere", x, v, K), K), v))
        s = _randn(g, n, 3)
        h = torch.cat([torch.sqrt(1 / K + (s * s).sum(-1, keepdim=True)), s], -1)
        w = torch.cat([torch.zeros(n, 1, dtype=T), _randn(g, n, 3)], -1)
        w = w + ((w[:, 1:] * s).sum(-1, keepdim=True) / h[:, :1]) * torch.nn.functional.pad(torch.ones(n, 1, dtype=T), (0, 3))
        w = w / torch.clamp(torch.linalg.vector_norm(w, dim=-1, keepdim=True), min=1.0)
        worst["tables"] = max(worst["tables"], _rel(log_map("hyperboloid", h, exp_map("hyperboloid", h, w, -K), -K), w))

    cases = n * len(SIGNATURES)
    return [
        Check("geometry", "psi^-1 o psi = id", worst["psi_inv_psi"], 1e-9, cases),
        Check("geometry", "psi o psi^-1 = id", worst["psi_psi_inv"], 1e-9, cases),
        Check("geometry", "manifold residual after projection", worst["residual"], 1e-9, cases),
        Check("geometry", "log_x(exp_x xi) = xi", worst["log_exp"], 1e-6, cases),
        Check("geometry", "exp_x(log_x y) = y", worst["exp_log"], 1e-6, cases),
        Check("geometry", "diffeomorphic exp/log round trip", worst["diffeo"], 1e-6, cases),
        Check("geometry", "sphere and hyperboloid exp/log round trip", worst["tables"], 1e-6, n * 6),
        Check("geometry", "parallel transport keeps <.,.>_t", worst["transport"], 1e-6, cases),
        Check("geometry", "broken_distance(x, -x) = pi sqrt|beta|", worst["broken"], 1e-9, cases),
    ]


# ------------------------------------------------------------------- algebra

PQ = ((2, 2), (4, 2), (6, 4), (8, 4))


def algebra_suite(g, n=100):
    j_res, giv, cs, mult_q, mult_s, dist_h = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    for i in range(n):
        p, q = PQ[i % len(PQ)]
        params = UltraRelParams.random(p, q, generator=g)
        F, J = torch.as_tensor(dense_relation(params)), torch.as_tensor(signature_matrix(p, q))
        j_res = max(j_res, float(torch.abs(F.T @ J @ F - J).max()))
        x = _randn(g, p + q)
        j_res = max(j_res, float(torch.abs(apply_relation(params, x) - F @ x).max()))
        mu = params.mu
        cs = max(cs, float(torch.abs(torch.cosh(mu) ** 2 - torch.sinh(mu) ** 2 - 1).max()))
    eye = torch.eye(2, dtype=T)
    for kind in ("rotation", "reflection"):
        G = givens_block(_rand(g, n, low=-math.pi, high=math.pi), kind)
        giv = max(giv, float(torch.abs(G.transpose(-1, -2) @ G - eye).max()))
    a, b, c = (_randn(g, n, 4) for _ in range(3))
    for kind, slot in ((AlgebraKind.QUATERNION, "q"), (AlgebraKind.SPLIT, "s")):
        lhs = hnorm(hamilton(a, b, kind), kind)
        rhs = hnorm(a, kind) * hnorm(b, kind)
        err = _rel(lhs, rhs)
        if slot == "q":
            mult_q = err
        else:
            mult_s = err
    h = AlgebraKind.HYPERBOLIC
    dist_h = max(
        float(torch.abs(hamilton(a, b + c, h) - hamilton(a, b, h) - hamilton(a, c, h)).max()),
        float(torch.abs(hamilton(a + b, c, h) - hamilton(a, c, h) - hamilton(b, c, h)).max()),
    )
    return [
        Check("algebra", "f_r^T J f_r = J", j_res, 1e-9, n),
        Check("algebra", "Givens blocks orthogonal", giv, 1e-12, 2 * n),
        Check("algebra", "C^2 - S^2 = I", cs, 1e-12, n),
        Check("algebra", "quaternion norm multiplicative", mult_q, 1e-9, n),
        Check("algebra", "split-quaternion norm multiplicative", mult_s, 1e-9, n),
        Check("algebra", "hyperbolic-quaternion distributive", dist_h, 1e-10, n),
    ]


# ------------------------------------------------------------------ patterns


def _signed_angle(x):
    return torch.remainder(x + math.pi, 2 * math.pi) - math.pi


def _ultrae_patterns(g, n):
    sym, inv, comp = 0.0, 0.0, 0.0
    for i in range(n):
        p, q = PQ[i % len(PQ)]
        half = (p + q) // 2
        x = _randn(g, p + q)
        choice = torch.rand(half, generator=g) < 0.5
        phi = torch.where(choice, torch.zeros(half, dtype=T), torch.full((half,), -math.pi, dtype=T))
        V = UltraRelParams(None, phi, None, p, q)
        sym = max(sym, float(torch.abs(apply_relation(V, apply_relation(V, x)) - x).max()))
        t1 = _rand(g, half, low=-math.pi, high=math.pi)
        U1, U2 = UltraRelParams(t1, None, None, p, q), UltraRelParams(-t1, None, None, p, q)
        inv = max(inv, float(torch.abs(apply_relation(U2, apply_relation(U1, x)) - x).max()))
        t2, t3 = _rand(g, half, low=-math.pi, high=math.pi), _rand(g, half, low=-math.pi, high=math.pi)
        Uc = UltraRelParams(_signed_angle(t2 + t3), None, None, p, q)
        U2c, U3c = UltraRelParams(t2, None, None, p, q), UltraRelParams(t3, None, None, p, q)
        comp = max(comp, float(torch.abs(apply_relation(Uc, x) - apply_relation(U2c, apply_relation(U3c, x))).max()))
    return [
        Check("patterns", "UltraE symmetry (Phi in {0, -pi}): f(f(x)) = x", sym, 1e-9, n),
        Check("patterns", "UltraE inversion (Theta1 + Theta2 = 0)", inv, 1e-9, n),
        Check("patterns", "UltraE composition (Theta1 = Theta2 + Theta3 mod 2pi)", comp, 1e-9, n),
    ]


def _score(e_h, theta, shift, offset, e_t):
    return -box_distance(e_t, query_box(e_h, theta, shift, offset))


def _shrinke_patterns(g, n, d=8):
    half = d // 2
    zero = torch.zeros(d, dtype=T)
    res = {k: 0.0 for k in ("sym", "anti", "inv", "comp", "impl", "excl", "inter", "qual")}
    for _ in range(n):
        e_h, e_t = _randn(g, d), _randn(g, d)
        # symmetry
        choice = torch.rand(half, generator=g) < 0.5
        th = torch.where(choice, torch.zeros(half, dtype=T), torch.full((half,), -math.pi, dtype=T))
        res["sym"] = max(res["sym"], abs(float(_score(e_h, th, zero, zero, e_t) - _score(e_t, th, zero, zero, e_h))))
        # anti-symmetry: a true triple whose reverse is strictly worse
        th = _rand(g, half, low=0.1, high=math.pi - 0.1) * torch.where(torch.rand(half, generator=g) < 0.5, 1.0, -1.0).to(T)
        tail = rotate_pairs(th, e_h)
        fwd, back = float(_score(e_h, th, zero, zero, tail)), float(_score(tail, th, zero, zero, e_h))
        res["anti"] = max(res["anti"], abs(fwd) + (1.0 if back >= fwd else 0.0))
        # inversion
        t1 = _rand(g, half, low=-math.pi, high=math.pi)
        tail = rotate_pairs(t1, e_h)
        res["inv"] = max(res["inv"], abs(float(_score(tail, -t1, zero, zero, e_h))))
        # composition
        t2, t3 = _rand(g, half, low=-math.pi, high=math.pi), _rand(g, half, low=-math.pi, high=math.pi)
        e2 = rotate_pairs(t2, e_h)
        e3 = rotate_pairs(t3, e2)
        res["comp"] = max(res["comp"], abs(float(_score(e_h, _signed_angle(t2 + t3), zero, zero, e3))))
        # implication: same rotation and shift, delta_1 <= delta_2
        th, b = _rand(g, half, low=-math.pi, high=math.pi), _randn(g, d)
        d1 = _randn(g, d)
        d2 = d1 + _rand(g, d) * (torch.rand(d, generator=g) < 0.7)
        b1, b2 = query_box(e_h, th, b, d1), query_box(e_h, th, b, d2)
        res["impl"] += 0.0 if bool(box_contains(b2, b1)) else 1.0
        # exclusion: shifts placed so the spanned boxes separate along one axis
        k = int(torch.randint(d, (1,), generator=g))
        gap = _rand(g, 1)[0] + 1e-3
        b_excl = b.clone()
        b_excl[k] = b_excl[k] + (b1.M[k] - b1.m[k]) / 2 + (query_box(e_h, th, b, d2).M[k] - query_box(e_h, th, b, d2).m[k]) / 2 + gap
        res["excl"] += 0.0 if bool(is_empty(box_intersection(b1, query_box(e_h, th, b_excl, d2)))) else 1.0
        # intersection: delta_3 >= min(delta_1, delta_2)
        d3 = torch.minimum(d1, d2) + _rand(g, d) * (torch.rand(d, generator=g) < 0.5)
        b3 = query_box(e_h, th, b, d3)
        res["inter"] += 0.0 if bool(box_contains(b3, box_intersection(b1, b2))) else 1.0
        # qualifier implication: a qualifier that shrinks at least as much yields a nested box
        s, S = _randn(g, 1, d), _randn(g, 1, d)
        strong = qualified_box(b1, s + _rand(g, 1, d), S + _rand(g, 1, d))
        weak = qualified_box(b1, s, S)
        res["qual"] += 0.0 if bool(box_contains(weak, strong)) else 1.0
    return [
        Check("patterns", "ShrinkE symmetry: score(h,r,t) = score(t,r,h)", res["sym"], 1e-9, n),
        Check("patterns", "ShrinkE anti-symmetry: true triple scores 0, reverse strictly lower", res["anti"], 1e-9, n),
        Check("patterns", "ShrinkE inversion: inverse triple scores 0", res["inv"], 1e-9, n),
        Check("patterns", "ShrinkE composition: composed triple scores 0", res["comp"], 1e-9, n),
        Check("patterns", "ShrinkE relation implication: box(r1) inside box(r2)", res["impl"], 0, n),
        Check("patterns", "ShrinkE relation exclusion: boxes disjoint", res["excl"], 0, n),
        Check("patterns", "ShrinkE relation intersection: box(r1) & box(r2) inside box(r3)", res["inter"], 0, n),
        Check("patterns", "ShrinkE qualifier implication: stronger shrink nests", res["qual"], 0, n),
    ]


def _grid(entries, d):
    """3x3 hypercomplex grid from a {(i, j): value} dict; unspecified entries are zero."""
    R = torch.zeros(3, 3, d, 4, dtype=T)
    for (i, j), v in entries.items():
        R[i, j] = v
    return R


def neste_pattern_cases(g, d, kind):
    """One random instantiation of every nested pattern: a list of (name, source row, grid, target row) per y.

    Rows are (3, d, 4) tensors ``[head, relation, tail]``; where the pattern
    quantifies over a free entity, several random values of it are drawn and
    each must map to its own target.
    """
    one = torch.zeros(d, 4, dtype=T)
    one[:, 0] = 1.0
    rnd = lambda: _randn(g, d, 4)  # noqa: E731
    mul = lambda a, b: hamilton(a, b, kind)  # noqa: E731
    row = lambda h, r, t: torch.stack([h, r, t])  # noqa: E731
    free = [rnd() for _ in range(3)]
    x1, r1, y1 = rnd(), rnd(), rnd()
    cases = []

    cases.append(("R-symmetry", [(row(x1, r1, y1), row(y1, r1, x1))], _grid({(0, 2): one, (1, 1): one, (2, 0): one}, d)))
    cases.append(
        ("R-inverse", [(row(x1, r1, y1), row(y1, -r1, x1)), (row(y1, -r1, x1), row(x1, r1, y1))], _grid({(0, 2): one, (1, 1): -one, (2, 0): one}, d))
    )
    R22 = rnd()
    cases.append(("R-implication", [(row(x1, r1, y1), row(x1, mul(r1, R22), y1))], _grid({(0, 0): one, (1, 1): R22, (2, 2): one}, d)))
    cases.append(("R-Inv-implication", [(row(x1, r1, y1), row(y1, mul(r1, R22), x1))], _grid({(0, 2): one, (1, 1): R22, (2, 0): one}, d)))

    R11, R21 = rnd(), rnd()
    x2 = mul(x1, R11) + mul(r1, R21)
    grid = _grid({(0, 0): R11, (1, 0): R21, (1, 1): one, (2, 2): one}, d)
    cases.append(("E-implication (head)", [(row(x1, r1, y), row(x2, r1, y)) for y in free], grid))
    R23, R33 = rnd(), rnd()
    y2 = mul(r1, R23) + mul(y1, R33)
    grid = _grid({(0, 0): one, (1, 1): one, (1, 2): R23, (2, 2): R33}, d)
    cases.append(("E-implication (tail)", [(row(x, r1, y1), row(x, r1, y2)) for x in free], grid))

    R13 = rnd()
    grid = _grid({(0, 2): R13, (1, 1): one, (2, 0): one}, d)
    cases.append(("E-inverse implication (head)", [(row(x1, r1, y), row(y, r1, mul(x1, R13))) for y in free], grid))
    R31 = rnd()
    grid = _grid({(0, 2): one, (1, 1): one, (2, 0): R31}, d)
    cases.append(("E-inverse implication (tail)", [(row(x, r1, y1), row(mul(y1, R31), r1, x)) for x in free], grid))

    R12, R22b = rnd(), rnd()
    r2 = mul(x1, R12) + mul(r1, R22b)
    grid = _grid({(0, 0): R11, (1, 0): R21, (0, 1): R12, (1, 1): R22b, (2, 2): one}, d)
    cases.append(("E-R-implication", [(row(x1, r1, y), row(x2, r2, y)) for y in free], grid))
    grid = _grid({(0, 1): R12, (1, 1): R22b, (0, 2): R11, (1, 2): R21, (2, 0): one}, d)
    cases.append(("E-R-Inv-implication", [(row(x1, r1, y), row(y, r2, x2)) for y in free], grid))
    R33b = rnd()
    grid = _grid({(0, 0): R11, (1, 1): one, (2, 2): R33b}, d)
    cases.append(("Dual E-implication", [(row(x1, r1, y1), row(mul(x1, R11), r1, mul(y1, R33b)))], grid))
    return cases


def _neste_patterns(g, n, d=4):
    worst = {}
    zero_b = torch.zeros(3, d, 4, dtype=T)
    for kind in AlgebraKind:
        for _ in range(n):
            for name, pairs, grid in neste_pattern_cases(g, d, kind):
                for src, target in pairs:
                    out = nested_transform(src, zero_b, grid, kind)
                    err = _rel(out, target)
                    worst[name] = max(worst.get(name, 0.0), err)
    return [Check("patterns", f"NestE {name}", err, 1e-9, n * len(AlgebraKind)) for name, err in worst.items()]


def patterns_suite(g, n=100):
    return _ultrae_patterns(g, n) + _shrinke_patterns(g, n) + _neste_patterns(g, n)


# ----------------------------------------------------------------- soundness


def _rbox(g, d):
    m = _rand(g, d, low=-1.0, high=1.0)
    return m, m + _rand(g, d, low=0.05, high=0.8)


def _grow(box, g, d, strict=False):
    lo = 1e-3 if strict else 0.0
    u1 = _rand(g, d, low=lo, high=0.3) * (1.0 if strict else (torch.rand(d, generator=g) < 0.7).to(T))
    u2 = _rand(g, d, low=lo, high=0.3) * (1.0 if strict else (torch.rand(d, generator=g) < 0.7).to(T))
    return box[0] - u1, box[1] + u2


def _role(g, d):
    return torch.exp(_rand(g, d, low=-0.7, high=0.7)), _rand(g, d, low=-0.5, high=0.5)


def satisfying_config(form, g, d=None, eps=0.01):
    """A random BoxEL geometry in which ``form`` holds: (axiom, concepts, individuals, roles)."""
    d = d or int(torch.randint(2, 4, (1,), generator=g))
    concepts, individuals, roles = {}, {}, {}
    nominal = bool(torch.rand(1, generator=g) < 0.3)

    def left(name="C"):
        if nominal:
            x = _rand(g, d, low=-1.0, high=1.0)
            individuals["a"] = x
            return "{a}", (x, x)
        concepts[name] = _rbox(g, d)
        return name, concepts[name]

    if form == "nf1":
        c, cb = left()
        concepts["D"] = _grow(cb, g, d)
        ax = ElAxiom("nf1", c=c, d="D")
    elif form == "nf2":
        c, cb = left()
        concepts["D"] = _rbox(g, d)
        inter = (torch.maximum(cb[0], concepts["D"][0]), torch.minimum(cb[1], concepts["D"][1]))
        concepts["E"] = _grow(inter, g, d)
        ax = ElAxiom("nf2", c=c, d="D", e="E")
    elif form == "nf3":
        c, cb = left()
        scale, shift = _role(g, d)
        roles["r"] = (scale, shift)
        concepts["D"] = _grow((scale * cb[0] + shift, scale * cb[1] + shift), g, d, strict=True)
        ax = ElAxiom("nf3", c=c, r="r", d="D")
    elif form == "nf4":
        c, cb = left()
        scale, shift = _role(g, d)
        roles["r"] = (scale, shift)
        concepts["D"] = _grow(((cb[0] - shift) / scale, (cb[1] - shift) / scale), g, d, strict=True)
        ax = ElAxiom("nf4", r="r", c=c, d="D")
    elif form == "nf1_bot":
        m = _rand(g, d, low=-1.0, high=1.0)
        M = m + _rand(g, d, low=0.05, high=0.8)
        M[0] = m[0] - eps - _rand(g, 1, low=1e-3, high=0.5)[0]
        concepts["C"] = (m, M)
        ax = ElAxiom("nf1_bot", c="C")
    elif form == "nf2_bot":
        c, cb = left()
        k = int(torch.randint(d, (1,), generator=g))
        dm = _rand(g, d, low=-1.0, high=1.0)
        dm[k] = cb[1][k] + eps + _rand(g, 1, low=1e-3, high=0.5)[0]
        concepts["D"] = (dm, dm + _rand(g, d, low=0.05, high=0.8))
        ax = ElAxiom("nf2_bot", c=c, d="D")
    elif form == "concept":
        concepts["C"] = _rbox(g, d)
        lo, hi = concepts["C"]
        individuals["a"] = lo + _rand(g, d) * (hi - lo)
        ax = ElAxiom("concept", c="C", a="a")
    elif form == "role":
        scale, shift = _role(g, d)
        roles["r"] = (scale, shift)
        a = _rand(g, d, low=-1.0, high=1.0)
        individuals["a"] = a
        individuals["b"] = scale * a + shift
        concepts["C"] = _rbox(g, d)
        ax = ElAxiom("role", r="r", a="a", b="b")
    else:
        raise ValueError(form)
    concepts.setdefault("C", _rbox(g, d))
    return ax, concepts, individuals, roles


def _boxel(ax, concepts, individuals, roles, eps=0.01):
    model = BoxEL.from_geometry([ax], concepts, individuals, roles, volume="modified", eps=eps, regularize=False)
    if ax.form == "role":
        # recompute the tail through the stored map so the equality is exact
        scale, shift = model.role_map(ax.r)
        i = model.vocab_.entities[ax.b]
        model.params_["individual"][i] = torch.as_tensor(scale * model.point(ax.a) + shift)
    return model


def soundness_suite(g, n=50):
    out = []
    forms = ("nf1", "nf2", "nf3", "nf4", "nf1_bot", "nf2_bot", "concept", "role")
    for form in forms:
        worst, unsat = 0.0, 0
        for _ in range(n):
            ax, concepts, individuals, roles = satisfying_config(form, g)
            model = _boxel(ax, concepts, individuals, roles)
            worst = max(worst, float(model.axiom_losses([ax])[0]))
            unsat += 0 if satisfies(model, ax) else 1
        out.append(Check("soundness", f"{form}: constructed models give loss 0", worst, 0.0, n))
        out.append(Check("soundness", f"{form}: geometric interpretation holds", float(unsat), 0.0, n))
    # converse direction on unconstrained geometry: a zero loss must never come with a violated predicate
    bad, zeros = 0, 0
    for form in forms:
        for _ in range(n):
            ax, concepts, individuals, roles = satisfying_config(form, g)
            concepts = {k: _rbox(g, len(v[0])) for k, v in concepts.items()}
            individuals = {k: _rand(g, len(v), low=-1.0, high=1.0) for k, v in individuals.items()}
            model = BoxEL.from_geometry([ax], concepts, individuals, roles, volume="modified", regularize=False)
            if float(model.axiom_losses([ax])[0]) == 0.0:
                zeros += 1
                bad += 0 if satisfies(model, ax) else 1
    out.append(Check("soundness", "random geometry: loss 0 implies the predicate", float(bad), 0.0, n * len(forms), f"{zeros} zero-loss cases"))
    raised = 0
    for ax in (ElAxiom("nf1_bot", c="{a}"), ElAxiom("nf2_bot", c="{a}", d="{a}")):
        try:
            BoxEL.from_geometry([ax], {"C": _rbox(g, 2)}, {"a": _rand(g, 2)}, volume="modified")
        except InconsistentAxiomError:
            raised += 1
    out.append(Check("soundness", "inconsistent axioms raise", float(2 - raised), 0.0, 2))
    return out


# ----------------------------------------------------------------- gradients


def gradient_models():
    """A small fitted-at-initialisation instance of every model with its training data."""
    kg, _ = planted_kg(n_entities=24, seed=1)
    hyper = [
        HyperFact(Triple("a", "r", "b"), (("k", "x"), ("q", "y"))),
        HyperFact(Triple("b", "s", "c"), (("k", "y"),)),
        HyperFact(Triple("c", "r", "a")),
        HyperFact(Triple("d", "s", "a"), (("q", "x"),)),
    ]
    t1, t2, t3 = Triple("a", "r", "b"), Triple("b", "r", "a"), Triple("c", "s", "d")
    nested = [t1, t2, t3, Triple("d", "s", "a"), NestedTriple(t1, "implies", t2), NestedTriple(t3, "implies", t1)]
    return [
        ("ultrae", UltraE(dim=8, q=2, neg=3, epochs=0), kg),
        ("shrinke", ShrinkE(dim=4, neg=3, epochs=0), hyper),
        ("neste", NestE(dim=2, neg=2, epochs=0), nested),
        ("neste-h", NestE(dim=2, kind="h", neg=2, epochs=0), nested),
        ("neste-s", NestE(dim=2, kind="s", neg=2, epochs=0), nested),
        ("boxel", BoxEL(dim=2, neg=2, temp=0.1, epochs=0), family_kb() + [ElAxiom("role", r="hasChild", a="Alex", b="Bob")]),
        ("boxel-modified", BoxEL(dim=2, volume="modified", neg=2, epochs=0), family_kb()),
        ("hmi", HMI(epochs=0), family_hex()),
    ]


def gradients_suite(g, n_points=20, n_coords=16):
    rng = np.random.default_rng(int(torch.randint(2**31, (1,), generator=g)))
    out = []
    for name, model, data in gradient_models():
        model.fit(data)
        reports = model.gradient_check(rng, n_points=n_points, n_coords=n_coords)
        worst = max(reports, key=lambda r: r.max_rel_err)
        out.append(Check("gradients", f"{name} loss gradient", worst.max_rel_err, 1e-4, n_points, f"worst coordinate {worst.worst_param_index}"))
    return out


# -------------------------------------------------------------- monotonicity


def monotonicity_cases(g, n=1000, n_entities=12, n_keys=4, max_quals=4, dim=8):
    """(score with a qualifier subset, score with the full set) for ``n`` random ShrinkE facts."""
    ents = [f"e{i}" for i in range(n_entities)]
    keys = [f"k{i}" for i in range(n_keys)]
    rng = np.random.default_rng(int(torch.randint(2**31, (1,), generator=g)))

    def fact():
        h, t, v = rng.choice(ents, 2, replace=False).tolist() + [None]
        k = int(rng.integers(1, max_quals + 1))
        quals = tuple((str(rng.choice(keys)), str(rng.choice(ents))) for _ in range(k))
        return HyperFact(Triple(h, str(rng.choice(["r0", "r1"])), t), quals)

    seed_data = [fact() for _ in range(64)]
    model = ShrinkE(dim=dim, epochs=0, seed=int(rng.integers(2**31)), reciprocals=False)
    model.fit(seed_data + [HyperFact(Triple(e, "r0", e), tuple((k, e) for k in keys)) for e in ents])
    full, part = [], []
    for _ in range(n):
        f = fact()
        keep = rng.random(len(f.qualifiers)) < 0.5
        sub = tuple(q for q, kp in zip(f.qualifiers, keep) if kp)
        full.append(f)
        part.append(HyperFact(f.triple, sub))
    return model.score_samples(part), model.score_samples(full)


def monotonicity_suite(g, n=1000):
    part, full = monotonicity_cases(g, n)
    bad = part < full
    gap = float(np.max(full - part)) if bad.any() else 0.0
    return [Check("monotonicity", "ShrinkE score(T, Q2) >= score(T, Q1) for Q2 in Q1", float(bad.sum()), 0.0, n, f"largest violation {gap:.3g}")]


SUITE_FUNCS = {
    "geometry": geometry_suite,
    "algebra": algebra_suite,
    "patterns": patterns_suite,
    "soundness": soundness_suite,
    "gradients": gradients_suite,
    "monotonicity": monotonicity_suite,
}


def run_suites(names=SUITES, seed=0, inject_failure=False):
    """Run the named suites with a seeded generator each; returns (checks, seconds per suite).

    ``inject_failure`` corrupts the first check of every suite so the failure
    path of the caller can be exercised.
    """
    streams = SeedStreams(seed)
    results, timings = [], {}
    for name in names:
        if name not in SUITE_FUNCS:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
        start = time.perf_counter()
        checks = SUITE_FUNCS[name](streams.torch(f"verify/{name}"))
        if inject_failure and checks:
            first = checks[0]
            first.measured = first.bound + 1.0
            first.detail = "injected failure"
        timings[name] = time.perf_counter() - start
        results += checks
    return results, timings


def format_table(checks):
    width = max((len(c.name) for c in checks), default=10)
    lines = [f"{'suite':<13} {'check':<{width}}  {'measured':>10}  {'bound':>8}  {'cases':>6}  result"]
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        detail = f"  ({c.detail})" if c.detail else ""
        lines.append(f"{c.suite:<13} {c.name:<{width}}  {c.measured:>10.3g}  {c.bound:>8.1g}  {c.cases:>6}  {mark}{detail}")
    return "\n".join(lines)
