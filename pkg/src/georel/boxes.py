"""Axis-aligned boxes: volumes, intersections, affine images and the point-to-box distance.

A box is the corner pair ``(m, M)``.  Empty boxes (some ``m_i >= M_i``) are a
legal state.  Every routine broadcasts over leading axes.
"""

from typing import NamedTuple

import torch

from ._backend import array_api, tensor
from .errors import DimensionError, DomainError

DEFAULT_EPS = 0.01
DEFAULT_TEMP = 1.0


class Box(NamedTuple):
    m: object
    M: object

    @classmethod
    def of(cls, m, M):
        m, M = tensor(m), tensor(M)
        if m.shape[-1] != M.shape[-1]:
            raise DimensionError(f"corner dimensions differ: {m.shape[-1]} vs {M.shape[-1]}")
        return cls(m, M)

    @classmethod
    def point(cls, x):
        x = tensor(x)
        return cls(x, x)

    @property
    def center(self):
        return (tensor(self.m) + tensor(self.M)) / 2


class AffineRoleMap(NamedTuple):
    """Diagonal affine map ``x -> scale * x + shift`` with non-negative scale."""

    scale: object
    shift: object

    @classmethod
    def of(cls, scale, shift):
        scale, shift = tensor(scale), tensor(shift)
        if bool((scale < 0).any()):
            raise DomainError("role map scales must be non-negative")
        return cls(scale, shift)


def _box(b):
    if not isinstance(b, Box):
        b = Box(*b)
    return Box.of(b.m, b.M)


def _softplus(x, temp):
    return temp * torch.logaddexp(x / temp, torch.zeros_like(x))


@array_api
def modified_volume(b, eps=DEFAULT_EPS):
    """prod_i max(0, M_i - m_i + eps); a point box has volume eps^d."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    b = _box(b)
    return torch.clamp(b.M - b.m + eps, min=0).prod(-1)


@array_api
def softplus_volume(b, temp=DEFAULT_TEMP):
    """prod_i t * log(1 + exp((M_i - m_i) / t))."""
    if temp <= 0:
        raise DomainError("temperature must be positive")
    b = _box(b)
    return _softplus(b.M - b.m, temp).prod(-1)


def volume(b, kind="modified", eps=DEFAULT_EPS, temp=DEFAULT_TEMP):
    if kind == "modified":
        return modified_volume(b, eps)
    if kind == "softplus":
        return softplus_volume(b, temp)
    raise ValueError(f"volume kind must be 'modified' or 'softplus', got {kind!r}")


@array_api
def box_intersection(*boxes):
    """Component-wise (max of lower corners, min of upper corners) over any number of boxes."""
    if not boxes:
        raise ValueError("need at least one box")
    bs = [_box(b) for b in boxes]
    dims = {b.m.shape[-1] for b in bs}
    if len(dims) != 1:
        raise DimensionError(f"boxes differ in dimension: {sorted(dims)}")
    m, M = bs[0]
    for b in bs[1:]:
        m = torch.maximum(m, b.m)
        M = torch.minimum(M, b.M)
    return Box(m, M)


@array_api
def disjoint_measure(b1, b2, eps=DEFAULT_EPS, kind="modified", temp=DEFAULT_TEMP):
    """1 - Vol(b1 & b2) / Vol(b1): 0 when b1 is inside b2, 1 when they do not meet."""
    b1, b2 = _box(b1), _box(b2)
    denom = volume(b1, kind, eps, temp)
    if bool((denom == 0).any()):
        raise DomainError("left operand has zero volume")
    return 1 - volume(box_intersection(b1, b2), kind, eps, temp) / denom


@array_api
def affine_map_box(t, b):
    """Image of a box under a non-negative diagonal affine map."""
    t, b = AffineRoleMap.of(*t), _box(b)
    return Box(t.scale * b.m + t.shift, t.scale * b.M + t.shift)


@array_api
def inverse_affine_map_box(t, b):
    """Image under x -> D^{-1} x - D^{-1} b; every scale must be positive."""
    t, b = AffineRoleMap.of(*t), _box(b)
    if bool((t.scale == 0).any()):
        raise DomainError("role map with a zero scale has no inverse")
    return Box((b.m - t.shift) / t.scale, (b.M - t.shift) / t.scale)


@array_api
def affine_map_point(t, x):
    t = AffineRoleMap.of(*t)
    return t.scale * tensor(x) + t.shift


@array_api
def point_to_box_distance(e, b):
    """|e - c|_1 / |w|_1 + (|e - m|_1 + |e - M|_1 - |w|_1)^2 with w = max(0, M - m).

    Grows slowly inside the box and quadratically outside it.
    """
    e, b = tensor(e), _box(b)
    width = torch.clamp(b.M - b.m, min=0).sum(-1)
    if bool((width == 0).any()):
        raise DomainError("point-to-box distance needs a box with positive width")
    c = (b.m + b.M) / 2
    inner = torch.abs(e - c).sum(-1) / width
    outer = torch.abs(e - b.m).sum(-1) + torch.abs(e - b.M).sum(-1) - width
    return inner + outer * outer


@array_api
def span_box(center, delta, temp=DEFAULT_TEMP):
    """Box centred at ``center`` with half-widths softplus_t(delta)."""
    center, delta = tensor(center), tensor(delta)
    half = _softplus(delta, temp)
    return Box(center - half, center + half)


@array_api
def shrink_box(b, s, S):
    """Move the lower corner up by sigmoid(s)*L and the upper corner down by sigmoid(S)*L."""
    b = _box(b)
    s, S = tensor(s), tensor(S)
    L = b.M - b.m
    return Box(b.m + torch.sigmoid(s) * L, b.M - torch.sigmoid(S) * L)


@array_api
def is_empty(b):
    """Sign-based emptiness: some lower corner is not below the upper corner."""
    b = _box(b)
    return (b.m >= b.M).any(-1)


@array_api
def box_contains(outer, inner, tol=0.0):
    """True where ``inner`` lies inside ``outer`` (component-wise corner comparison)."""
    outer, inner = _box(outer), _box(inner)
    return ((outer.m <= inner.m + tol) & (inner.M <= outer.M + tol)).all(-1)


@array_api
def point_in_box(x, b, tol=0.0):
    x, b = tensor(x), _box(b)
    return ((b.m <= x + tol) & (x <= b.M + tol)).all(-1)
