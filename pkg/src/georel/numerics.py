"""Finite-difference gradient oracle and the autograd bridge.

Model gradients come from torch's reverse-mode autograd in float64.  The
central-difference routines here are a plain numpy implementation with no
dependency on that tape, which is what makes them usable as a check on it.
"""

from dataclasses import dataclass

import numpy as np
import torch

from ._backend import DTYPE
from .errors import NonFiniteError
from .validation import as_vec, check_positive

DEFAULT_STEP = 1e-5


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    worst_param_index: int
    tol: float

    @property
    def passed(self):
        return self.max_rel_err <= self.tol


def _eval(loss, p, index):
    val = float(loss(p))
    if not np.isfinite(val):
        raise NonFiniteError(f"loss is not finite when perturbing parameter {index}", index=index)
    return val


def finite_diff_grad(loss, params, h=DEFAULT_STEP):
    """Central-difference gradient; the step for coordinate i is ``h * max(1, |p_i|)``."""
    p = as_vec(params, "params")
    check_positive(h, "h")
    grad = np.zeros_like(p)
    for i in range(p.size):
        step = h * max(1.0, abs(p[i]))
        up = p.copy()
        dn = p.copy()
        up[i] += step
        dn[i] -= step
        grad[i] = (_eval(loss, up, i) - _eval(loss, dn, i)) / (2.0 * step)
    return grad


def check_gradients(loss, analytic_grad, params, h=DEFAULT_STEP, tol=1e-4):
    """Compare ``analytic_grad(params)`` against central differences of ``loss``.

    The error per coordinate is ``|a - f| / max(1, |a|, |f|)``.
    """
    check_positive(tol, "tol")
    p = as_vec(params, "params")
    fd = finite_diff_grad(loss, p, h)
    an = np.asarray(analytic_grad(p), dtype=np.float64).reshape(-1)
    if an.shape != fd.shape:
        raise ValueError(f"analytic gradient has {an.size} entries, expected {fd.size}")
    rel = np.abs(an - fd) / np.maximum(1.0, np.maximum(np.abs(an), np.abs(fd)))
    worst = int(np.argmax(rel))
    return GradCheckReport(max_rel_err=float(rel[worst]), worst_param_index=worst, tol=tol)


def autograd_loss(fn):
    """Wrap a torch function of a flat parameter tensor into numpy ``(loss, grad)`` callables."""

    def loss(p):
        with torch.no_grad():
            return float(fn(torch.as_tensor(p, dtype=DTYPE)))

    def grad(p):
        t = torch.tensor(np.asarray(p, dtype=np.float64), dtype=DTYPE, requires_grad=True)
        out = fn(t)
        (g,) = torch.autograd.grad(out, t, allow_unused=True)
        return np.zeros(t.numel()) if g is None else g.detach().numpy().copy()

    return loss, grad
