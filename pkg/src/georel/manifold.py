"""Pseudo-hyperboloid geometry.

Points of Q^{s,t}_beta are stored time-first: the first ``t_plus`` coordinates
carry the negative sign of the scalar product, the remaining ``s`` the
positive sign.  The manifold is ``{x : <x, x>_t = beta}`` with ``beta < 0``;
``R = sqrt(|beta|)`` is used throughout as the radius.

All routines broadcast over leading dimensions; the vector lives in the last
axis.
"""

import math
from dataclasses import dataclass

import torch

from ._backend import array_api, tensor
from .errors import DimensionError, DomainError, NonFiniteError

CLAMP_SLACK = 1e-6
_SERIES_CUTOFF = 1e-4
_NULL_TOL = 1e-13
KINDS = ("euclidean", "sphere", "hyperboloid")


@dataclass(frozen=True)
class Signature:
    """Dimensions and curvature parameter of a pseudo-hyperboloid."""

    s: int
    t_plus: int
    beta: float = -1.0

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 0:
            raise DomainError(f"space dimension must be a non-negative integer, got {self.s}")
        if int(self.t_plus) != self.t_plus or self.t_plus < 1:
            raise DomainError(f"time dimension must be a positive integer, got {self.t_plus}")
        if not math.isfinite(self.beta) or self.beta >= 0:
            raise DomainError(f"beta must be negative, got {self.beta}")

    @classmethod
    def from_radius(cls, alpha, p, q):
        """Signature of UltraE's U^{p,q} with radius ``alpha`` (beta = -alpha^2)."""
        return cls(s=p, t_plus=q, beta=-float(alpha) ** 2)

    @property
    def dim(self):
        return self.s + self.t_plus

    @property
    def radius(self):
        return math.sqrt(-self.beta)


def _check_dim(x, sig, name="x"):
    if x.shape[-1] != sig.dim:
        raise DimensionError(f"{name} has trailing dimension {x.shape[-1]}, signature expects {sig.dim}")


def _split(x, sig):
    return x[..., : sig.t_plus], x[..., sig.t_plus :]


def _dot(a, b):
    return (a * b).sum(-1)


def _safe_sqrt(v):
    """sqrt with a zero (rather than infinite) derivative at 0."""
    pos = v > 0
    return torch.where(pos, torch.sqrt(torch.where(pos, v, torch.ones_like(v))), torch.zeros_like(v))


def _norm(v):
    return _safe_sqrt(_dot(v, v))


def _clamp(z, lo, hi, what):
    bad = (z < lo - CLAMP_SLACK) | (z > hi + CLAMP_SLACK)
    if bool(bad.any()):
        worst = z[bad].flatten()[0].item()
        raise DomainError(f"{what} argument {worst!r} is outside [{lo}, {hi}]")
    return z.clamp(lo, hi)


def _inner(x, y, t_plus):
    return -_dot(x[..., :t_plus], y[..., :t_plus]) + _dot(x[..., t_plus:], y[..., t_plus:])


@array_api
def pseudo_inner(x, y, sig):
    """<x, y>_t: minus the time products plus the space products."""
    x, y = tensor(x), tensor(y)
    _check_dim(x, sig)
    _check_dim(y, sig, "y")
    return _inner(x, y, sig.t_plus)


@array_api
def reference_point(sig):
    """The time-axis point (R, 0, ..., 0) with zero space part."""
    o = torch.zeros(sig.dim, dtype=torch.float64)
    o[0] = sig.radius
    return o


# ---------------------------------------------------------------- diffeomorphism


@array_api
def sphere_project(x, sig):
    """psi: Q -> S x R^s.  Rescales the time part onto the sphere of radius R."""
    x = tensor(x)
    _check_dim(x, sig)
    t, s = _split(x, sig)
    nt = torch.linalg.vector_norm(t, dim=-1, keepdim=True)
    if not bool(torch.isfinite(nt).all()):
        raise NonFiniteError("time part has a non-finite norm")
    if bool((nt == 0).any()):
        raise DomainError("time part is zero; perturb it before projecting")
    return torch.cat([sig.radius * t / nt, s], dim=-1)


@array_api
def sphere_unproject(z, sig):
    """psi^{-1}: S x R^s -> Q."""
    z = tensor(z)
    _check_dim(z, sig, "z")
    u, v = _split(z, sig)
    R = sig.radius
    nu = torch.linalg.vector_norm(u, dim=-1)
    if bool((torch.abs(nu - R) > 1e-9 * max(1.0, R)).any()):
        raise DomainError("time part of z is not on the sphere of radius sqrt(|beta|)")
    scale = torch.sqrt(R * R + _dot(v, v)) / R
    return torch.cat([scale.unsqueeze(-1) * u, v], dim=-1)


@array_api
def project_to_manifold(x, sig):
    """phi = psi^{-1} o psi, the double projection onto Q."""
    return sphere_unproject(sphere_project(tensor(x), sig), sig)


def perturb_time(x, sig, generator=None, eps=0.02, only_degenerate=True):
    """Add U(-eps, eps) noise to the time coordinates.

    With ``only_degenerate`` (default) only rows whose time part is exactly zero
    are touched.
    """
    x = tensor(x).clone()
    t = x[..., : sig.t_plus]
    noise = (torch.rand(t.shape, generator=generator, dtype=torch.float64) * 2 - 1) * eps
    if only_degenerate:
        mask = (torch.linalg.vector_norm(t, dim=-1, keepdim=True) == 0).to(x.dtype)
        noise = noise * mask
    x[..., : sig.t_plus] = t + noise
    return x


def dpsi(x, xi, sig):
    """Pushforward of psi at x."""
    t, _ = _split(x, sig)
    xt, xs = _split(xi, sig)
    nt2 = _dot(t, t).unsqueeze(-1)
    ut = (sig.radius / torch.sqrt(nt2)) * (xt - (_dot(t, xt).unsqueeze(-1) / nt2) * t)
    return torch.cat([ut, xs], dim=-1)


def dpsi_inv(z, eta, sig):
    """Pushforward of psi^{-1} at z in S x R^s."""
    u, v = _split(z, sig)
    eu, ev = _split(eta, sig)
    R = sig.radius
    root = torch.sqrt(R * R + _dot(v, v)).unsqueeze(-1)
    xt = (root / R) * eu + (_dot(v, ev).unsqueeze(-1) / (R * root)) * u
    return torch.cat([xt, ev], dim=-1)


# ----------------------------------------------------------------- table maps


def _lorentz(x, y):
    return _inner(x, y, 1)


@array_api
def exp_map(kind, x, v, curvature=1.0):
    """Exponential map on R^n, the sphere S_K or the hyperboloid H_K.

    The sphere has ``<x, x> = 1/K`` (K > 0); the hyperboloid uses the Lorentz
    product with one leading time coordinate and ``<x, x>_L = 1/K`` (K < 0).
    """
    x, v = tensor(x), tensor(v)
    if x.shape[-1] != v.shape[-1]:
        raise DimensionError("x and v differ in dimension")
    if kind == "euclidean":
        return x + v
    rk = math.sqrt(abs(curvature))
    if kind == "sphere":
        n = rk * _norm(v)
        c, sc = torch.cos(n), _sinc(n * n, sign=-1)
    elif kind == "hyperboloid":
        n = rk * _safe_sqrt(_lorentz(v, v).clamp(min=0))
        c, sc = torch.cosh(n), _sinc(n * n, sign=1)
    else:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {KINDS}")
    return c.unsqueeze(-1) * x + sc.unsqueeze(-1) * v


@array_api
def log_map(kind, x, y, curvature=1.0):
    """Logarithmic map, inverse of :func:`exp_map`."""
    x, y = tensor(x), tensor(y)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionError("x and y differ in dimension")
    if kind == "euclidean":
        return y - x
    K = float(curvature)
    rk = math.sqrt(abs(K))
    if kind == "sphere":
        z = _clamp(K * _dot(x, y), -1.0, 1.0, "arccos")
        w = y - z.unsqueeze(-1) * x
        nw = rk * _norm(w)
        if bool(((nw == 0) & (z < 0)).any()):
            raise DomainError("antipodal points have no unique logarithm")
        theta = torch.atan2(nw, z)
    elif kind == "hyperboloid":
        z = K * _lorentz(x, y)
        _clamp(z, 1.0, math.inf, "arccosh")
        w = y - z.unsqueeze(-1) * x
        nw = rk * _safe_sqrt(_lorentz(w, w).clamp(min=0))
        theta = torch.asinh(nw)
    else:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {KINDS}")
    ratio = torch.where(nw > 0, theta / torch.where(nw > 0, nw, torch.ones_like(nw)), torch.ones_like(nw))
    return ratio.unsqueeze(-1) * w


def _sinc(u, sign):
    """sin(sqrt u)/sqrt u for sign=-1 and sinh(sqrt u)/sqrt u for sign=+1, u >= 0."""
    small = u < _SERIES_CUTOFF
    us = torch.where(small, torch.ones_like(u), u)
    r = torch.sqrt(us)
    exact = (torch.sinh(r) if sign > 0 else torch.sin(r)) / r
    series = 1 + sign * u / 6 + u * u / 120
    return torch.where(small, series, exact)


# ------------------------------------------------------------ native Q geometry


def _coeffs(u):
    """Analytic coefficients in the signed squared length ``u = <xi,xi>/|beta|``.

    Returns (C, A, B) with C = cosh sqrt(u), A = sinh sqrt(u)/sqrt(u),
    B = (cosh sqrt(u) - 1)/u for u > 0, and the circular counterparts for
    u < 0.  All three are entire functions of u, so the null case u = 0 is
    the common limit (1, 1, 1/2).
    """
    small = torch.abs(u) < _SERIES_CUTOFF
    us = torch.where(small, torch.ones_like(u), u)
    r = torch.sqrt(torch.abs(us))
    pos = us > 0
    C = torch.where(pos, torch.cosh(r), torch.cos(r))
    A = torch.where(pos, torch.sinh(r), torch.sin(r)) / r
    B = (C - 1) / us
    Cs = 1 + u / 2 + u * u / 24 + u**3 / 720
    As = 1 + u / 6 + u * u / 120 + u**3 / 5040
    Bs = 0.5 + u / 24 + u * u / 720 + u**3 / 40320
    return torch.where(small, Cs, C), torch.where(small, As, A), torch.where(small, Bs, B)


@array_api
def pseudo_exp(x, xi, sig):
    """Geodesic exponential map of Q (space-like, time-like and null cases)."""
    x, xi = tensor(x), tensor(xi)
    _check_dim(x, sig)
    _check_dim(xi, sig, "xi")
    u = _inner(xi, xi, sig.t_plus) / (-sig.beta)
    C, A, _ = _coeffs(u)
    return C.unsqueeze(-1) * x + A.unsqueeze(-1) * xi


def _log_parts(x, y, sig):
    """Unchecked logarithm: returns (log vector, angle a) with geodesic length R*a."""
    R = sig.radius
    z = _inner(x, y, sig.t_plus) / sig.beta
    w = y - z.unsqueeze(-1) * x
    qw = _inner(w, w, sig.t_plus)
    nw = _safe_sqrt(torch.abs(qw)) / R
    a = torch.where(z >= 1, torch.asinh(nw), torch.atan2(nw, z))
    ratio = torch.where(nw > 0, a / torch.where(nw > 0, nw, torch.ones_like(nw)), torch.ones_like(nw))
    return ratio.unsqueeze(-1) * w, a


@array_api
def connected(x, y, sig):
    """True where a geodesic joins x and y, i.e. <x, y>_t < |beta|."""
    return _inner(tensor(x), tensor(y), sig.t_plus) < -sig.beta


@array_api
def pseudo_log(x, y, sig):
    """Geodesic logarithm of Q; requires x and y to be geodesically connected."""
    x, y = tensor(x), tensor(y)
    _check_dim(x, sig)
    _check_dim(y, sig, "y")
    if not bool(connected(x, y, sig).all()):
        raise DomainError("points are not connected by a geodesic (<x,y>_t >= |beta|)")
    return _log_parts(x, y, sig)[0]


@array_api
def geodesic_distance(x, y, sig):
    """Length sqrt|<log_x y, log_x y>| of the geodesic between connected points."""
    x, y = tensor(x), tensor(y)
    if not bool(connected(x, y, sig).all()):
        raise DomainError("points are not connected by a geodesic (<x,y>_t >= |beta|)")
    return sig.radius * _log_parts(x, y, sig)[1]


@array_api
def broken_distance(x, y, sig):
    """Geodesic distance, or pi*R plus the distance to -y for broken pairs."""
    x, y = tensor(x), tensor(y)
    _check_dim(x, sig)
    _check_dim(y, sig, "y")
    R = sig.radius
    direct = R * _log_parts(x, y, sig)[1]
    detour = math.pi * R + R * _log_parts(x, -y, sig)[1]
    return torch.where(connected(x, y, sig), direct, detour)


@array_api
def parallel_transport(x, y, zeta, sig):
    """Transport a tangent vector at x along the geodesic to y.

    When y is not connected to x the vector is carried to -y, whose tangent
    space coincides with that of y.
    """
    x, y, zeta = tensor(x), tensor(y), tensor(zeta)
    for v, n in ((x, "x"), (y, "y"), (zeta, "zeta")):
        _check_dim(v, sig, n)
    dest = torch.where(connected(x, y, sig).unsqueeze(-1), y, -y)
    xi = _log_parts(x, dest, sig)[0]
    absb = -sig.beta
    u = _inner(xi, xi, sig.t_plus) / absb
    _, A, B = _coeffs(u)
    c = (_inner(zeta, xi, sig.t_plus) / absb).unsqueeze(-1)
    return zeta + c * (A.unsqueeze(-1) * x + B.unsqueeze(-1) * xi)


# ------------------------------------------------------ diffeomorphic exp / log


@array_api
def diffeo_log(x, y, sig):
    """Logarithm taken on S x R^s through psi and pulled back to T_x Q."""
    x, y = tensor(x), tensor(y)
    _check_dim(x, sig)
    _check_dim(y, sig, "y")
    zx, zy = sphere_project(x, sig), sphere_project(y, sig)
    ux, vx = _split(zx, sig)
    uy, vy = _split(zy, sig)
    eta = torch.cat([log_map("sphere", ux, uy, 1.0 / -sig.beta), vy - vx], dim=-1)
    return dpsi_inv(zx, eta, sig)


@array_api
def diffeo_exp(x, v, sig):
    """Inverse of :func:`diffeo_log`."""
    x, v = tensor(x), tensor(v)
    _check_dim(x, sig)
    _check_dim(v, sig, "v")
    zx = sphere_project(x, sig)
    eta = dpsi(x, v, sig)
    ux, vx = _split(zx, sig)
    eu, ev = _split(eta, sig)
    u_new = exp_map("sphere", ux, eu, 1.0 / -sig.beta)
    # renormalise away rounding so the unprojection precondition holds
    u_new = sig.radius * u_new / torch.linalg.vector_norm(u_new, dim=-1, keepdim=True)
    return sphere_unproject(torch.cat([u_new, vx + ev], dim=-1), sig)


# ------------------------------------------------------ Manhattan-like distance


def ultra_to_canonical(x, p, q):
    """Reorder space-first (p, q) coordinates into the time-first layout."""
    x = tensor(x)
    return torch.cat([x[..., p : p + q], x[..., :p]], dim=-1)


def canonical_to_ultra(x, p, q):
    x = tensor(x)
    return torch.cat([x[..., q : q + p], x[..., :q]], dim=-1)


def _angle(a, b):
    """Angle between two vectors, accurate near 0 and pi."""
    na = _norm(a).unsqueeze(-1)
    nb = _norm(b).unsqueeze(-1)
    ah = a / torch.where(na > 0, na, torch.ones_like(na))
    bh = b / torch.where(nb > 0, nb, torch.ones_like(nb))
    return 2 * torch.atan2(_norm(ah - bh), _norm(ah + bh))


@array_api
def manhattan_distance(x, y, sig):
    """Composite time-leg plus space-leg distance on U^{p,q} (time-first layout).

    The projection rho_x(y) keeps the space part of x and moves y's time part
    onto the radius-sqrt(alpha^2 + |x_p|^2) sphere along its own direction, so
    rho_x(y) stays on the manifold.  The time leg from x to rho_x(y) is a
    great-circle arc; the space leg from rho_x(y) to y runs in the hyperbolic
    sheet spanned by y's time direction.  The minimum over both orderings is
    returned.
    """
    x, y = tensor(x), tensor(y)
    _check_dim(x, sig)
    _check_dim(y, sig, "y")
    alpha2 = -sig.beta
    alpha = sig.radius
    xq, xp = _split(x, sig)
    yq, yp = _split(y, sig)
    rx = torch.sqrt(alpha2 + _dot(xp, xp))
    ry = torch.sqrt(alpha2 + _dot(yp, yp))
    d_s = torch.minimum(rx, ry) * _angle(xq, yq)
    diff = xp - yp
    gap = _dot(diff, xp + yp) / (rx + ry)
    lorentz_sq = (_dot(diff, diff) - gap * gap).clamp(min=0)
    d_h = 2 * alpha * torch.asinh(_safe_sqrt(lorentz_sq) / (2 * alpha))
    return d_s + d_h
