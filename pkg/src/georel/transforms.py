"""J-orthogonal relation maps on the ultrahyperbolic manifold.

Coordinates here use the space-first layout ``x = (x_p, x_q)`` with the
signature matrix ``J = diag(I_p, -I_q)``.  A relation is ``f_r = U H V``:
``V`` is a block-diagonal of 2x2 reflections, ``H`` a hyperbolic rotation
mixing the first ``q`` space coordinates with the ``q`` time coordinates, and
``U`` a block-diagonal of 2x2 rotations.  Everything is applied blockwise in
O(d); the dense builders exist for checking.
"""

from dataclasses import dataclass
from typing import Optional

import torch

from ._backend import array_api, tensor
from .errors import DimensionError, DomainError


def check_pq(p, q):
    if p <= 0 or q <= 0 or p % 2 or q % 2:
        raise DomainError(f"p and q must be positive and even, got p={p}, q={q}")
    if q > p:
        raise DomainError(f"hyperbolic CS decomposition requires q <= p, got p={p}, q={q}")


@dataclass
class UltraRelParams:
    """Angles and boosts of one relation; a ``None`` field stands for the identity factor."""

    theta: Optional[torch.Tensor]
    phi: Optional[torch.Tensor]
    mu: Optional[torch.Tensor]
    p: int
    q: int

    def __post_init__(self):
        check_pq(self.p, self.q)
        half = (self.p + self.q) // 2
        for name, n in (("theta", half), ("phi", half), ("mu", self.q)):
            val = getattr(self, name)
            if val is None:
                continue
            val = tensor(val)
            if val.shape[-1] != n:
                raise DimensionError(f"{name} needs {n} entries in its last axis, got {val.shape[-1]}")
            setattr(self, name, val)

    @classmethod
    def random(cls, p, q, generator=None, boost_scale=1.0):
        half = (p + q) // 2
        two_pi = 2 * torch.pi
        theta = (torch.rand(half, generator=generator, dtype=torch.float64) - 0.5) * two_pi
        phi = (torch.rand(half, generator=generator, dtype=torch.float64) - 0.5) * two_pi
        mu = (torch.rand(q, generator=generator, dtype=torch.float64) * 2 - 1) * boost_scale
        return cls(theta, phi, mu, p, q)


@array_api
def givens_block(theta, kind="rotation"):
    """2x2 circular rotation ``[[c,-s],[s,c]]`` or reflection ``[[c,s],[s,-c]]``."""
    t = tensor(theta)
    c, s = torch.cos(t), torch.sin(t)
    if kind == "rotation":
        rows = [torch.stack([c, -s], -1), torch.stack([s, c], -1)]
    elif kind == "reflection":
        rows = [torch.stack([c, s], -1), torch.stack([s, -c], -1)]
    else:
        raise ValueError(f"kind must be 'rotation' or 'reflection', got {kind!r}")
    return torch.stack(rows, -2)


def _block_diag(angles, kind):
    angles = tensor(angles).reshape(-1)
    return torch.block_diag(*[givens_block(a, kind) for a in angles])


def _check_angles(angles, p, q):
    check_pq(p, q)
    angles = tensor(angles)
    if angles.shape[-1] != (p + q) // 2:
        raise DimensionError(f"expected {(p + q) // 2} angles, got {angles.shape[-1]}")
    return angles


@array_api
def build_U(theta, p, q):
    """Dense block-diagonal rotation (p/2 space blocks followed by q/2 time blocks)."""
    return _block_diag(_check_angles(theta, p, q), "rotation")


@array_api
def build_V(phi, p, q):
    """Dense block-diagonal reflection with the same block layout as :func:`build_U`."""
    return _block_diag(_check_angles(phi, p, q), "reflection")


@array_api
def build_H(mu, p, q):
    """Dense hyperbolic rotation ``[[C,0,S],[0,I,0],[S,0,C]]`` with blocks q, p-q, q."""
    check_pq(p, q)
    mu = tensor(mu).reshape(-1)
    if mu.numel() != q:
        raise DimensionError(f"expected {q} boost parameters, got {mu.numel()}")
    H = torch.eye(p + q, dtype=torch.float64)
    idx = torch.arange(q)
    H[idx, idx] = torch.cosh(mu)
    H[p + idx, p + idx] = torch.cosh(mu)
    H[idx, p + idx] = torch.sinh(mu)
    H[p + idx, idx] = torch.sinh(mu)
    return H


@array_api
def signature_matrix(p, q):
    return torch.diag(torch.cat([torch.ones(p), -torch.ones(q)]).to(torch.float64))


@array_api
def dense_relation(params):
    """Assemble f_r = U H V as a dense matrix (test oracle)."""
    p, q = params.p, params.q
    eye = torch.eye(p + q, dtype=torch.float64)
    U = eye if params.theta is None else build_U(params.theta, p, q)
    H = eye if params.mu is None else build_H(params.mu, p, q)
    V = eye if params.phi is None else build_V(params.phi, p, q)
    return U @ H @ V


def _pairs(x):
    return x[..., 0::2], x[..., 1::2]


def _interleave(a, b):
    return torch.stack([a, b], dim=-1).flatten(-2)


def rotate_pairs(angles, x):
    a, b = _pairs(x)
    c, s = torch.cos(angles), torch.sin(angles)
    return _interleave(c * a - s * b, s * a + c * b)


def reflect_pairs(angles, x):
    a, b = _pairs(x)
    c, s = torch.cos(angles), torch.sin(angles)
    return _interleave(c * a + s * b, s * a - c * b)


def boost(mu, x, p, q):
    head, mid, tail = x[..., :q], x[..., q:p], x[..., p:]
    ch, sh = torch.cosh(mu), torch.sinh(mu)
    return torch.cat([ch * head + sh * tail, mid, sh * head + ch * tail], dim=-1)


@array_api
def apply_relation(params, x):
    """Blockwise f_r(x) = U(H(V x)); leading axes of params and x broadcast."""
    x = tensor(x)
    p, q = params.p, params.q
    if x.shape[-1] != p + q:
        raise DimensionError(f"x has dimension {x.shape[-1]}, relation expects {p + q}")
    if params.phi is not None:
        x = reflect_pairs(params.phi, x)
    if params.mu is not None:
        x = boost(params.mu, x, p, q)
    if params.theta is not None:
        x = rotate_pairs(params.theta, x)
    return x
