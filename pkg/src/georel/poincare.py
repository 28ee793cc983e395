"""Poincare-ball primitives and the ball-containment constraints between label hyperplanes.

Each label is a point ``c`` of the open unit ball; its Poincare hyperplane is
the set of ball points ``p`` with ``<(-c) (+) p, c> = 0``.  That hyperplane lies
on a Euclidean sphere orthogonal to the unit sphere, whose ball ``(o, r)`` is
the region a label claims.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import torch

from ._backend import array_api, tensor
from .errors import DomainError

BALL_EPS = 1e-5


class EnclosingBall(NamedTuple):
    o: object
    r: object


def _dot(a, b):
    return (a * b).sum(-1)


@array_api
def project_to_ball(x, eps=BALL_EPS):
    """Radially pull points with norm >= 1 - eps back to norm 1 - eps."""
    x = tensor(x)
    n = torch.linalg.vector_norm(x, dim=-1, keepdim=True)
    limit = 1 - eps
    return torch.where(n >= limit, x * (limit / torch.clamp(n, min=limit)), x)


@array_api
def mobius_add(x, y):
    """Mobius addition x (+) y on the unit ball."""
    x, y = tensor(x), tensor(y)
    xy = _dot(x, y).unsqueeze(-1)
    x2 = _dot(x, x).unsqueeze(-1)
    y2 = _dot(y, y).unsqueeze(-1)
    num = (1 + 2 * xy + y2) * x + (1 - x2) * y
    return num / (1 + 2 * xy + x2 * y2)


@array_api
def ball_distance(x, y):
    """arccosh(1 + 2|x - y|^2 / ((1 - |x|^2)(1 - |y|^2)))."""
    x, y = tensor(x), tensor(y)
    diff = x - y
    arg = 2 * _dot(diff, diff) / ((1 - _dot(x, x)) * (1 - _dot(y, y)))
    # arccosh(1 + a) written through log1p for accuracy near a = 0
    return torch.log1p(arg + torch.sqrt(arg * (arg + 2)))


@array_api
def enclosing_ball(c):
    """Ball orthogonal to the unit sphere whose boundary carries the hyperplane of c.

    r = (1 - |c|^2) / (2|c|) and o = (1 + |c|^2) / (2|c|) * c/|c|, so that
    |o|^2 = 1 + r^2 and |o| - r = |c|.
    """
    c = tensor(c)
    n = torch.linalg.vector_norm(c, dim=-1)
    if bool((n == 0).any()):
        raise DomainError("the origin does not define a hyperplane")
    if bool((n >= 1).any()):
        raise DomainError("hyperplane point must lie in the open unit ball")
    r = (1 - n * n) / (2 * n)
    o = ((1 + n * n) / (2 * n * n)).unsqueeze(-1) * c
    return EnclosingBall(o, r)


def _center_gap(bu, bw):
    return torch.linalg.vector_norm(tensor(bu.o) - tensor(bw.o), dim=-1)


@array_api
def inside_loss(bu, bw):
    """Zero exactly when ball u lies inside ball w."""
    return torch.relu(_center_gap(bu, bw) + tensor(bu.r) - tensor(bw.r))


@array_api
def disjoint_loss(bu, bw):
    """Zero exactly when the two balls do not overlap."""
    return torch.relu(tensor(bu.r) + tensor(bw.r) - _center_gap(bu, bw))


@array_api
def membership_loss(p, b):
    return torch.relu(torch.linalg.vector_norm(tensor(b.o) - tensor(p), dim=-1) - tensor(b.r))


@array_api
def nonmembership_loss(p, b):
    return torch.relu(tensor(b.r) - torch.linalg.vector_norm(tensor(b.o) - tensor(p), dim=-1))


@array_api
def membership_score(p, b):
    """h = sigmoid(nonmembership - membership) = sigmoid(r - |o - p|)."""
    return torch.sigmoid(nonmembership_loss(p, b) - membership_loss(p, b))


@array_api
def hyperplane_logit(p, c):
    """Hyperbolic distance from p to the Poincare hyperplane through c orthogonal to c."""
    p, c = tensor(p), tensor(c)
    nc = torch.linalg.vector_norm(c, dim=-1)
    if bool((nc == 0).any()):
        raise DomainError("the origin does not define a hyperplane")
    z = mobius_add(-c, p)
    num = 2 * torch.abs(_dot(z, c))
    return torch.asinh(num / ((1 - _dot(z, z)) * nc))


@dataclass
class HexGraph:
    """Labels with hierarchy edges (child, parent) and exclusion edges (a, b)."""

    labels: list
    hierarchy: list = field(default_factory=list)
    exclusion: list = field(default_factory=list)

    def __post_init__(self):
        self.labels = list(dict.fromkeys(self.labels))
        known = set(self.labels)
        for a, b in list(self.hierarchy) + list(self.exclusion):
            for name in (a, b):
                if name not in known:
                    raise DomainError(f"edge references unknown label {name!r}")
        for a, b in self.exclusion:
            if a == b:
                raise DomainError(f"exclusion self loop on {a!r}")
        self._check_acyclic()

    @classmethod
    def from_edges(cls, hierarchy=(), exclusion=()):
        labels = []
        for a, b in list(hierarchy) + list(exclusion):
            labels += [a, b]
        return cls(sorted(set(labels)), list(hierarchy), list(exclusion))

    def index(self):
        return {name: i for i, name in enumerate(self.labels)}

    def _check_acyclic(self):
        children = {}
        for child, parent in self.hierarchy:
            children.setdefault(parent, []).append(child)
        state = {}

        for start in self.labels:
            if state.get(start):
                continue
            stack = [(start, iter(children.get(start, ())))]
            state[start] = 1
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    state[node] = 2
                    stack.pop()
                elif state.get(nxt) == 1:
                    raise DomainError(f"hierarchy edges contain a cycle through {nxt!r}")
                elif not state.get(nxt):
                    state[nxt] = 1
                    stack.append((nxt, iter(children.get(nxt, ()))))


def _edge_ids(graph, edges):
    idx = graph.index()
    try:
        return [(idx[a], idx[b]) for a, b in edges]
    except KeyError as err:
        raise DomainError(f"edge references unknown label {err.args[0]!r}") from None


def constraint_terms(balls, graph):
    """(inside losses over hierarchy edges, disjoint losses over exclusion edges)."""
    o, r = tensor(balls.o), tensor(balls.r)

    def pick(ids, pos):
        ix = torch.tensor([e[pos] for e in ids], dtype=torch.long)
        return EnclosingBall(o[ix], r[ix])

    h_ids, e_ids = _edge_ids(graph, graph.hierarchy), _edge_ids(graph, graph.exclusion)
    empty = torch.zeros(0, dtype=torch.float64)
    ins = inside_loss(pick(h_ids, 0), pick(h_ids, 1)) if h_ids else empty
    dis = disjoint_loss(pick(e_ids, 0), pick(e_ids, 1)) if e_ids else empty
    return ins, dis


def hmi_objective(label_points, positives, negatives, graph, lam=1.0, instances=None):
    """Membership over positives + non-membership over negatives + lam * constraint losses.

    ``label_points`` holds one hyperplane point per label (rows follow
    ``graph.labels``); ``instances`` holds ball points; ``positives`` and
    ``negatives`` are lists of (instance index, label) pairs.
    """
    if lam < 0:
        raise DomainError("penalty weight must be non-negative")
    balls = enclosing_ball(tensor(label_points))
    idx = graph.index()
    total = torch.zeros((), dtype=torch.float64)
    inst = tensor(instances) if instances is not None else None
    for pairs, fn in ((positives, membership_loss), (negatives, nonmembership_loss)):
        for i, label in pairs:
            if label not in idx:
                raise DomainError(f"unknown label {label!r}")
            j = idx[label]
            total = total + fn(inst[i], EnclosingBall(balls.o[j], balls.r[j]))
    ins, dis = constraint_terms(balls, graph)
    total = total + lam * (ins.sum() + dis.sum())
    if isinstance(label_points, torch.Tensor) or isinstance(instances, torch.Tensor):
        return total
    return float(total)


def _edge_array(edges):
    if isinstance(edges, torch.Tensor):
        return edges.to(torch.long).reshape(-1, 2)
    return torch.as_tensor(np.asarray(edges, dtype=np.int64).reshape(-1, 2))


@array_api
def hcv(scores, edges):
    """Fraction of (instance, hierarchy edge) pairs where the child outscores the parent.

    ``scores`` is (n_instances, n_labels); ``edges`` holds (child, parent) column indices.
    """
    s = tensor(scores)
    edges = _edge_array(edges)
    if len(edges) == 0:
        return torch.zeros((), dtype=torch.float64)
    ch, pa = edges[:, 0], edges[:, 1]
    return ((s[:, ch] - s[:, pa]) > 0).to(torch.float64).mean()


@array_api
def ecv(predictions, edges):
    """Fraction of (instance, exclusion edge) pairs with both labels predicted."""
    p = tensor(predictions) > 0.5
    edges = _edge_array(edges)
    if len(edges) == 0:
        return torch.zeros((), dtype=torch.float64)
    a, b = edges[:, 0], edges[:, 1]
    return (p[:, a] & p[:, b]).to(torch.float64).mean()
