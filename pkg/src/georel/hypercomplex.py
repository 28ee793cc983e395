"""Four-dimensional hypercomplex algebras: quaternions, hyperbolic and split quaternions.

A hypercomplex vector is stored as an array whose last axis holds the four
components ``(s, x, y, z)``; any leading axes (for instance the embedding
dimension) are treated element-wise.  Products are evaluated through a
structure tensor ``G`` with ``(a * b)_k = sum_ij a_i b_j G[i, j, k]``.
"""

from dataclasses import dataclass
from enum import Enum

import torch

from ._backend import array_api, tensor
from .errors import DimensionError, DomainError


class AlgebraKind(str, Enum):
    QUATERNION = "q"
    HYPERBOLIC = "h"
    SPLIT = "s"

    @classmethod
    def coerce(cls, kind):
        if isinstance(kind, cls):
            return kind
        aliases = {
            "quaternion": "q",
            "hyperbolic": "h",
            "hyperbolicquaternion": "h",
            "split": "s",
            "splitquaternion": "s",
        }
        key = str(kind).lower().replace("_", "").replace(" ", "")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown algebra kind {kind!r}") from None


# squares of (i, j, k) and signs of the off-diagonal products ij, jk, ki
# (the reversed products carry the opposite sign in all three algebras)
_TABLES = {
    AlgebraKind.QUATERNION: ((-1, -1, -1), (1, 1, 1)),
    AlgebraKind.HYPERBOLIC: ((1, 1, 1), (1, 1, 1)),
    AlgebraKind.SPLIT: ((-1, 1, 1), (1, -1, 1)),
}

_NORM_SIGNS = {
    AlgebraKind.QUATERNION: (1.0, 1.0, 1.0, 1.0),
    AlgebraKind.HYPERBOLIC: (1.0, -1.0, -1.0, -1.0),
    AlgebraKind.SPLIT: (1.0, 1.0, -1.0, -1.0),
}


def structure_tensor(kind):
    """The 4x4x4 multiplication table of ``kind`` in the basis (1, i, j, k)."""
    kind = AlgebraKind.coerce(kind)
    squares, (s_ij, s_jk, s_ki) = _TABLES[kind]
    G = torch.zeros(4, 4, 4, dtype=torch.float64)
    G[0, 0, 0] = 1.0
    for u in (1, 2, 3):
        G[0, u, u] = 1.0
        G[u, 0, u] = 1.0
        G[u, u, 0] = squares[u - 1]
    for (a, b, c), sign in (((1, 2, 3), s_ij), ((2, 3, 1), s_jk), ((3, 1, 2), s_ki)):
        G[a, b, c] = sign
        G[b, a, c] = -sign
    return G


_G_CACHE = {k: structure_tensor(k) for k in AlgebraKind}


@dataclass(frozen=True)
class HNum:
    """A (vector of) hypercomplex number(s) tagged with its algebra."""

    data: torch.Tensor
    kind: AlgebraKind

    def __post_init__(self):
        object.__setattr__(self, "data", tensor(self.data))
        object.__setattr__(self, "kind", AlgebraKind.coerce(self.kind))
        if self.data.shape[-1:] != (4,):
            raise DimensionError(f"last axis must hold 4 components, got shape {tuple(self.data.shape)}")

    def __add__(self, other):
        _same_kind(self, other)
        return HNum(self.data + other.data, self.kind)

    def __mul__(self, other):
        return hamilton(self, other)

    def norm(self):
        return hnorm(self)


def _same_kind(*items):
    kinds = {i.kind for i in items if isinstance(i, HNum)}
    if len(kinds) > 1:
        raise DomainError(f"algebra kinds differ: {sorted(k.value for k in kinds)}")
    return kinds.pop() if kinds else None


def _unpack(a):
    return a.data if isinstance(a, HNum) else tensor(a)


def _resolve_kind(kind, *items):
    tagged = _same_kind(*items)
    if kind is None:
        if tagged is None:
            raise DomainError("algebra kind is required for untagged arrays")
        return tagged
    kind = AlgebraKind.coerce(kind)
    if tagged is not None and tagged != kind:
        raise DomainError(f"algebra kind {kind.value!r} does not match operand kind {tagged.value!r}")
    return kind


def _wrap(result, kind, *items):
    return HNum(result, kind) if any(isinstance(i, HNum) for i in items) else result


@array_api
def hamilton(a, b, kind=None):
    """Hamilton product ``a (x) b`` under the multiplication table of ``kind``."""
    k = _resolve_kind(kind, a, b)
    A, B = _unpack(a), _unpack(b)
    if A.shape[-1] != 4 or B.shape[-1] != 4:
        raise DimensionError("hypercomplex operands need 4 components in the last axis")
    out = torch.einsum("...i,...j,ijk->...k", A, B, _G_CACHE[k])
    return _wrap(out, k, a, b)


@array_api
def hnorm(a, kind=None):
    """Signed quadratic form: s^2 + x^2 + y^2 + z^2, s^2 - x^2 - y^2 - z^2 or s^2 + x^2 - y^2 - z^2."""
    k = _resolve_kind(kind, a)
    A = _unpack(a)
    signs = torch.tensor(_NORM_SIGNS[k], dtype=torch.float64)
    return (A * A * signs).sum(-1)


@array_api
def hnormalize_rotor(r, eps=0.0):
    """Divide by the Euclidean 4-norm of each hypercomplex entry."""
    R = _unpack(r)
    n = torch.linalg.vector_norm(R, dim=-1, keepdim=True)
    if eps == 0.0 and bool((n == 0).any()):
        raise DomainError("cannot normalise a zero rotor")
    out = R / (n + eps)
    return HNum(out, r.kind) if isinstance(r, HNum) else out


@array_api
def hinner(a, b, trailing=None):
    """Sum of component-wise Euclidean inner products.

    ``trailing`` is the number of last axes reduced; by default 1 for a single
    number and 2 for a (..., d, 4) vector.  Use :func:`hmat_inner` for rows of
    three.
    """
    A, B = _unpack(a), _unpack(b)
    _same_kind(a, b)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {tuple(A.shape)} vs {tuple(B.shape)}")
    if trailing is None:
        trailing = 1 if A.dim() == 1 else 2
    return (A * B).sum(dim=tuple(range(-trailing, 0)))


@array_api
def hmat_inner(A, B):
    """Matrix inner product of two rows of three hypercomplex vectors, (..., 3, d, 4)."""
    return hinner(A, B, trailing=3)


@array_api
def hmat_rotate(T, R, kind=None):
    """Row-times-matrix product: output column j is ``sum_i T_i (x) R_ij``.

    ``T`` has shape (..., 3, d, 4) and ``R`` shape (..., 3, 3, d, 4).
    """
    k = _resolve_kind(kind, T, R)
    Tt, Rt = _unpack(T), _unpack(R)
    if Tt.shape[-3] != 3 or Rt.shape[-4:-2] != (3, 3):
        raise DimensionError("expected a row of 3 and a 3x3 grid of hypercomplex vectors")
    out = torch.einsum("...iea,...ijeb,abc->...jec", Tt, Rt, _G_CACHE[k])
    return _wrap(out, k, T, R)


def real_unit(shape=(), scale=1.0):
    """Hypercomplex ``scale * 1`` broadcast to ``shape + (4,)``."""
    out = torch.zeros(*shape, 4, dtype=torch.float64)
    out[..., 0] = scale
    return out
