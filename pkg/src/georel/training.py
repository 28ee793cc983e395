"""Losses, the Adam update, seeding, checkpoints and the shared epoch loop."""

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from ._backend import DTYPE, array_api, tensor
from .errors import CheckpointError, DimensionError, DomainError, NonFiniteError

PROB_FLOOR = 1e-12


# ------------------------------------------------------------------ seeding


class SeedStreams:
    """Derive independent, reproducible random streams from one seed by name."""

    def __init__(self, seed):
        self.seed = int(seed)

    def _entropy(self, name):
        digest = hashlib.sha256(name.encode("utf-8")).digest()
        return [self.seed, int.from_bytes(digest[:8], "little")]

    def numpy(self, name):
        return np.random.default_rng(np.random.SeedSequence(self._entropy(name)))

    def torch(self, name):
        seq = np.random.SeedSequence(self._entropy(name))
        return torch.Generator().manual_seed(int(seq.generate_state(1, np.uint64)[0] >> np.uint64(1)))


# ------------------------------------------------------------------- losses


@array_api
def bce_loss(pos_probs, neg_probs, smoothing=0.0):
    """-(1/N) sum_i (log p_i + sum_j log(1 - p~_ij)), probabilities clamped at 1e-12.

    ``neg_probs`` is (N, k).  With ``smoothing`` > 0 the targets become
    1 - smoothing/2 and smoothing/2.
    """
    p = tensor(pos_probs).reshape(-1)
    q = tensor(neg_probs).reshape(p.shape[0], -1)
    lo, hi = PROB_FLOOR, 1 - PROB_FLOOR
    yp, yn = 1 - smoothing / 2, smoothing / 2
    pos = yp * torch.log(p.clamp(lo, hi)) + (1 - yp) * torch.log((1 - p).clamp(lo, hi))
    neg = yn * torch.log(q.clamp(lo, hi)) + (1 - yn) * torch.log((1 - q).clamp(lo, hi))
    return -(pos + neg.sum(-1)).mean()


def bce_from_scores(pos_scores, neg_scores, smoothing=0.0):
    """Same loss as :func:`bce_loss` evaluated from logits with log-sigmoid (no clamping)."""
    yp, yn = 1 - smoothing / 2, smoothing / 2
    ls = torch.nn.functional.logsigmoid
    pos = yp * ls(pos_scores) + (1 - yp) * ls(-pos_scores)
    neg = yn * ls(neg_scores) + (1 - yn) * ls(-neg_scores)
    return -(pos + neg.sum(-1)).mean()


def softplus_pairs(pos_scores, neg_scores):
    """sum g(-phi) over positives + sum g(phi) over negatives with g(x) = log(1 + e^x)."""
    sp = torch.nn.functional.softplus
    return sp(-pos_scores).sum() + sp(neg_scores).sum()


# -------------------------------------------------------------------- Adam


@dataclass
class AdamState:
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update, applied in place; returns ``params``."""
    if len(params) != len(grads):
        raise DimensionError("params and grads differ in length")
    if not state.m:
        state.m = [torch.zeros_like(p) for p in params]
        state.v = [torch.zeros_like(p) for p in params]
    state.step += 1
    c1 = 1 - beta1**state.step
    c2 = 1 - beta2**state.step
    with torch.no_grad():
        for p, g, m, v in zip(params, grads, state.m, state.v):
            if g is None:
                continue
            if g.shape != p.shape:
                raise DimensionError(f"gradient shape {tuple(g.shape)} != parameter shape {tuple(p.shape)}")
            m.mul_(beta1).add_(g, alpha=1 - beta1)
            v.mul_(beta2).addcmul_(g, g, value=1 - beta2)
            p.sub_(lr * (m / c1) / (torch.sqrt(v / c2) + eps))
    return params


# ---------------------------------------------------------------- config


@dataclass
class TrainConfig:
    model: str
    dim: int = 32
    lr: float = 1e-3
    epochs: int = 100
    batch_size: int = 128
    neg: int = 50
    seed: int = 0
    smoothing: float = 0.0
    patience: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("dim", "batch_size"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be positive")
        if self.epochs < 0 or self.neg < 0 or self.patience < 0:
            raise DomainError("epochs, neg and patience must be non-negative")
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise DomainError("lr must be a positive finite number")
        if not 0 <= self.smoothing < 1:
            raise DomainError("smoothing must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)


# ----------------------------------------------------------- checkpointing


def _encode_tensor(t):
    arr = t.detach().cpu().numpy().astype(np.float64)
    return {"shape": list(arr.shape), "data": [float(v) for v in arr.reshape(-1)]}


def dumps_checkpoint(model):
    """Serialise a fitted estimator: model tag, hyperparameters, vocabulary and flat arrays."""
    payload = {
        "model": model.model_tag,
        "hyperparameters": model.get_params(deep=False),
        "vocab": model.vocab_.to_dict() if getattr(model, "vocab_", None) is not None else None,
        "params": {name: _encode_tensor(t) for name, t in sorted(model.params_.items())},
    }
    extra = getattr(model, "_extra_state", None)
    if extra is not None:
        payload["extra"] = extra()
    return json.dumps(payload, sort_keys=True, indent=1)


def save_checkpoint(model, path):
    text = dumps_checkpoint(model)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def load_checkpoint(path, expected_model=None):
    """Rebuild the estimator stored at ``path``."""
    from .data import Vocab
    from .models import MODEL_REGISTRY

    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}") from None
    except (OSError, json.JSONDecodeError) as err:
        raise CheckpointError(f"cannot read checkpoint {path}: {err}") from None
    tag = payload.get("model")
    if expected_model is not None and tag != expected_model:
        raise CheckpointError(f"checkpoint holds model {tag!r}, expected {expected_model!r}")
    if tag not in MODEL_REGISTRY:
        raise CheckpointError(f"unknown model tag {tag!r}")
    model = MODEL_REGISTRY[tag](**payload["hyperparameters"])
    if payload.get("vocab") is not None:
        model.vocab_ = Vocab.from_dict(payload["vocab"])
    model.params_ = {
        name: torch.tensor(entry["data"], dtype=DTYPE).reshape(entry["shape"])
        for name, entry in payload["params"].items()
    }
    if "extra" in payload and hasattr(model, "_load_extra_state"):
        model._load_extra_state(payload["extra"])
    model._restore()
    return model


# --------------------------------------------------------------- the loop


@dataclass
class TrainResult:
    curve: list
    best_epoch: int

    def curve_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "val_loss"])
        for epoch, loss, val in self.curve:
            w.writerow([epoch, repr(loss), "" if val is None else repr(val)])
        return buf.getvalue()


def train(model, data, epochs, lr, batch_size, seed, val_data=None, patience=0, gradcheck=False, lr_end=None):
    """Optimise ``model.params_`` with Adam over shuffled mini-batches.

    The model supplies ``_prepare(data)`` (returns the number of training
    units), ``_batch_loss(units, rng)`` and optionally ``_after_step()`` and
    ``_validation_loss(val_data)``.  When validation data is given the
    parameters with the lowest validation loss are kept.  With ``lr_end``
    the step size decays geometrically from ``lr`` to ``lr_end`` over the
    epochs.
    """
    streams = SeedStreams(seed)
    n_units = model._prepare(data)
    params = list(model.params_.values())
    if gradcheck:
        model._self_check(streams.numpy("gradcheck"))
    state = AdamState()
    order_rng = streams.numpy("shuffle")
    neg_rng = streams.numpy("negatives")
    curve = []
    best = (math.inf, 0, None)
    stale = 0
    for epoch in range(1, epochs + 1):
        step_lr = lr if not lr_end or epochs < 2 else lr * (lr_end / lr) ** ((epoch - 1) / (epochs - 1))
        order = order_rng.permutation(n_units) if n_units else np.zeros(0, dtype=int)
        total, count = 0.0, 0
        batches = [order[i : i + batch_size] for i in range(0, max(n_units, 1), batch_size)] if n_units else [order]
        for b, units in enumerate(batches):
            for p in params:
                p.requires_grad_(True)
                p.grad = None
            loss = model._batch_loss(units, neg_rng)
            if not torch.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch}, batch {b}", epoch=epoch, batch=b)
            loss.backward()
            adam_step(params, [p.grad for p in params], state, lr=step_lr)
            if not all(bool(torch.isfinite(p).all()) for p in params):
                raise NonFiniteError(f"non-finite parameters after epoch {epoch}, batch {b}", epoch=epoch, batch=b)
            with torch.no_grad():
                model._after_step()
            total += float(loss.detach()) * max(len(units), 1)
            count += max(len(units), 1)
        for p in params:
            p.requires_grad_(False)
            p.grad = None
        epoch_loss = total / max(count, 1)
        val = None
        if val_data is not None:
            with torch.no_grad():
                val = float(model._validation_loss(val_data))
            if val < best[0]:
                best = (val, epoch, {k: v.detach().clone() for k, v in model.params_.items()})
                stale = 0
            else:
                stale += 1
        curve.append((epoch, epoch_loss, val))
        if patience and val_data is not None and stale >= patience:
            break
    if best[2] is not None:
        for k, v in best[2].items():
            model.params_[k].copy_(v)
    for p in params:
        p.requires_grad_(False)
    return TrainResult(curve=curve, best_epoch=best[1] if best[2] is not None else len(curve))
