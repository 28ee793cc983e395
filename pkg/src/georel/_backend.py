"""Array plumbing: every geometric routine runs on float64 torch tensors.

Public functions accept numpy arrays, lists or tensors.  When no tensor is
passed in, results are handed back as numpy arrays (or Python floats for
scalars), so the same code path serves both the autograd-based models and
plain numeric callers.
"""

import functools
import os

import numpy as np
import torch

DTYPE = torch.float64


def set_threads(n=None):
    """Cap intra-op threads; defaults to ``GEORE_THREADS`` or 1."""
    if n is None:
        n = int(os.environ.get("GEORE_THREADS", "1"))
    torch.set_num_threads(max(1, int(n)))


def tensor(x):
    if isinstance(x, torch.Tensor):
        return x if x.dtype == DTYPE else x.to(DTYPE)
    return torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=DTYPE)


def to_numpy(x):
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
        if x.ndim == 0:
            return bool(x) if x.dtype == np.bool_ else float(x)
        return x
    return x


def _is_arraylike(v):
    return isinstance(v, (np.ndarray, list)) or (
        isinstance(v, tuple) and len(v) > 0 and all(isinstance(e, (int, float)) for e in v)
    )


def _has_tensor(v):
    if isinstance(v, torch.Tensor):
        return True
    if isinstance(v, tuple):
        return any(isinstance(e, torch.Tensor) for e in v)
    return False


def array_api(fn):
    """Convert array-like arguments to tensors and numpy-ify outputs when appropriate."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        torch_in = any(_has_tensor(a) for a in args) or any(_has_tensor(v) for v in kwargs.values())
        args = tuple(tensor(a) if _is_arraylike(a) else a for a in args)
        kwargs = {k: tensor(v) if _is_arraylike(v) else v for k, v in kwargs.items()}
        out = fn(*args, **kwargs)
        if torch_in:
            return out
        return _unwrap(out)

    return wrapper


def _unwrap(out):
    if isinstance(out, torch.Tensor):
        return to_numpy(out)
    if isinstance(out, tuple):
        items = [_unwrap(o) for o in out]
        return type(out)(*items) if hasattr(out, "_fields") else tuple(items)
    return out
