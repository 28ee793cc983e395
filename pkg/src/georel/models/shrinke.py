"""ShrinkE: a primal triple spans a query box, every qualifier shrinks it."""

import math

import numpy as np
import torch

from ..boxes import Box, box_intersection, shrink_box, span_box
from ..data import HyperFact, Triple, Vocab, add_reciprocals
from ..errors import DomainError
from ..training import bce_from_scores
from ..transforms import rotate_pairs
from .base import GeoModel, other_ids, uniform

WIDTH_FLOOR = 1e-6


def query_box(e_h, theta, shift, offset, temp=1.0):
    """Span ``Theta e_h + b`` into a box with half-widths softplus_t(offset)."""
    return span_box(rotate_pairs(theta, e_h) + shift, offset, temp)


def qualified_box(base, s, S, mask=None):
    """Intersection of ``shrink(base, s_j, S_j)`` over the qualifier axis -2 of ``s`` and ``S``.

    Padded qualifier slots (``mask`` False) contribute the unshrunk box, which
    leaves the intersection unchanged.  With no qualifier axis entries the
    base box is returned.
    """
    if s.shape[-2] == 0:
        return base
    m, M = base.m.unsqueeze(-2), base.M.unsqueeze(-2)
    sm, sM = shrink_box(Box(m, M), s, S)
    if mask is not None:
        keep = mask.unsqueeze(-1)
        sm = torch.where(keep, sm, m.expand_as(sm))
        sM = torch.where(keep, sM, M.expand_as(sM))
    return Box(sm.max(-2).values, sM.min(-2).values)


def box_distance(e, box):
    """Point-to-box distance with the width in the inner term floored to stay finite on empty boxes."""
    width = torch.clamp(box.M - box.m, min=0).sum(-1)
    c = (box.m + box.M) / 2
    inner = torch.abs(e - c).sum(-1) / torch.clamp(width, min=WIDTH_FLOOR)
    outer = torch.abs(e - box.m).sum(-1) + torch.abs(e - box.M).sum(-1) - width
    return inner + outer * outer


class ShrinkE(GeoModel):
    """Hyper-relational fact scoring ``-D(e_t, box_Q)``.

    The probability fed to the cross-entropy loss is
    ``sigmoid(margin - D)``; ``margin`` only calibrates the loss since the
    score itself is never positive.
    """

    model_tag = "shrinke"
    param_rows = {"entity": "entities", "relation": "relations", "theta": "relations", "shift": "relations", "offset": "relations"}

    def __init__(
        self,
        dim=32,
        temp=1.0,
        margin=2.0,
        lr=1e-3,
        epochs=100,
        batch_size=128,
        neg=10,
        smoothing=0.1,
        reciprocals=True,
        seed=0,
        patience=0,
        self_check=False,
    ):
        self.dim = dim
        self.temp = temp
        self.margin = margin
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.neg = neg
        self.smoothing = smoothing
        self.reciprocals = reciprocals
        self.seed = seed
        self.patience = patience
        self.self_check = self_check

    def _augment(self, data):
        facts = [f if isinstance(f, HyperFact) else HyperFact(f) for f in data]
        return add_reciprocals(facts) if self.reciprocals else facts

    def _build_vocab(self, data):
        return Vocab.build(self._augment(data))

    def _init_params(self, gen):
        if self.dim % 2:
            raise DomainError("ShrinkE needs an even dimension for its 2x2 rotation blocks")
        n_e, n_r, d = len(self.vocab_.entities), len(self.vocab_.relations), self.dim
        bound = 1.0 / math.sqrt(d)
        yield "entity", uniform(gen, (n_e, d), -bound, bound)
        yield "relation", uniform(gen, (n_r, d), -bound, bound)
        yield "theta", uniform(gen, (n_r, d // 2), -math.pi, math.pi)
        yield "shift", uniform(gen, (n_r, d), -bound, bound)
        yield "offset", uniform(gen, (n_r, d), -1.0, 0.0)
        lim1, lim2 = math.sqrt(6 / (5 * d)), math.sqrt(6 / (4 * d))
        yield "mlp_w1", uniform(gen, (3 * d, 2 * d), -lim1, lim1)
        yield "mlp_b1", torch.zeros(2 * d, dtype=torch.float64)
        yield "mlp_w2", uniform(gen, (2 * d, 2 * d), -lim2, lim2)
        # start with mild shrinking: sigmoid(-3) ~ 0.05 of the side length per corner
        yield "mlp_b2", torch.full((2 * d,), -3.0, dtype=torch.float64)

    # -- encoding -------------------------------------------------------------

    def encode(self, facts):
        """Facts to (h, r, t) ids (B, 3) plus padded key/value ids and a mask (B, Q)."""
        v = self.vocab_
        facts = [f if isinstance(f, HyperFact) else HyperFact(f) for f in facts]
        ids = np.array([[v.entities[f.triple.h], v.relations[f.triple.r], v.entities[f.triple.t]] for f in facts])
        ids = ids.reshape(-1, 3).astype(np.int64)
        q = max((len(f.qualifiers) for f in facts), default=0)
        keys = np.zeros((len(facts), q), dtype=np.int64)
        vals = np.zeros((len(facts), q), dtype=np.int64)
        mask = np.zeros((len(facts), q), dtype=bool)
        for i, f in enumerate(facts):
            for j, (k, val) in enumerate(f.qualifiers):
                keys[i, j], vals[i, j], mask[i, j] = v.relations[k], v.entities[val], True
        return ids, keys, vals, mask

    def shrink_vectors(self, r, keys, vals):
        """(s, S) from the one-hidden-layer map of concat(r, k, v); shapes (..., Q, d)."""
        P = self.params_
        r = torch.as_tensor(r)
        rk = P["relation"][r].unsqueeze(-2).expand(*keys.shape, self.dim)
        x = torch.cat([rk, P["relation"][keys], P["entity"][vals]], dim=-1)
        hidden = torch.tanh(x @ P["mlp_w1"] + P["mlp_b1"])
        out = hidden @ P["mlp_w2"] + P["mlp_b2"]
        return out[..., : self.dim], out[..., self.dim :]

    def boxes_for(self, h, r, keys, vals, mask):
        """Qualified query boxes; ``h`` may carry an extra candidate axis."""
        P = self.params_
        h, r = torch.as_tensor(h), torch.as_tensor(r)
        keys, vals, mask = torch.as_tensor(keys), torch.as_tensor(vals), torch.as_tensor(mask)
        s, S = self.shrink_vectors(r, keys, vals)
        extra = h.dim() - r.dim()
        for _ in range(extra):
            r = r.unsqueeze(-1)
            s, S, mask = s.unsqueeze(-3), S.unsqueeze(-3), mask.unsqueeze(-2)
        base = query_box(P["entity"][h], P["theta"][r], P["shift"][r], P["offset"][r], self.temp)
        return qualified_box(base, s, S, mask)

    def distance_ids(self, ids, keys, vals, mask):
        box = self.boxes_for(ids[:, 0], ids[:, 1], keys, vals, mask)
        return box_distance(self.params_["entity"][torch.as_tensor(ids[:, 2])], box)

    # -- public scoring -----------------------------------------------------

    def score_samples(self, X):
        """Scores ``-D`` of hyper-relational facts (plain triples are accepted too)."""
        self._check_fitted()
        with torch.no_grad():
            return (-self.distance_ids(*self.encode(X))).numpy().copy()

    def score_fact(self, fact):
        return float(self.score_samples([fact])[0])

    def predict_proba(self, X):
        return 1.0 / (1.0 + np.exp(-(self.margin + self.score_samples(X))))

    def predict(self, X, threshold=0.5):
        return self.predict_proba(X) >= threshold

    # -- training -------------------------------------------------------------

    def _index(self, data):
        self._units = self.encode(self._augment(data))
        self._n_units = len(self._units[0])
        return self._n_units

    def _validation_loss(self, val_data):
        saved = self._units
        self._units = self.encode(val_data)
        try:
            return self._batch_loss(np.arange(len(self._units[0])), np.random.default_rng(0))
        finally:
            self._units = saved

    def _batch_loss(self, units, rng):
        ids, keys, vals, mask = (a[units] for a in self._units)
        pos = self.margin - self.distance_ids(ids, keys, vals, mask)
        k, B = self.neg, len(units)
        if k == 0:
            return bce_from_scores(pos, torch.zeros(B, 0, dtype=torch.float64), self.smoothing)
        n_e = len(self.vocab_.entities)
        h = np.repeat(ids[:, :1], k, 1)
        t = np.repeat(ids[:, 2:], k, 1)
        head_side = rng.random((B, k)) < 0.5
        h = np.where(head_side, other_ids(rng, n_e, h), h)
        t = np.where(head_side, t, other_ids(rng, n_e, t))
        box = self.boxes_for(torch.as_tensor(h), ids[:, 1], keys, vals, mask)
        neg = self.margin - box_distance(self.params_["entity"][torch.as_tensor(t)], box)
        return bce_from_scores(pos, neg, self.smoothing)

    # -- ranking protocol -----------------------------------------------------

    def query_keys(self, records, side):
        ids, keys, vals, mask = self.encode(records)
        quals = [tuple(sorted(zip(k[m].tolist(), v[m].tolist()))) for k, v, m in zip(keys, vals, mask)]
        if side == "tail":
            return [(("t", int(h), int(r), q), int(t)) for (h, r, t), q in zip(ids, quals)]
        return [(("h", int(r), int(t), q), int(h)) for (h, r, t), q in zip(ids, quals)]

    def candidate_scores_for(self, records, side):
        ids, keys, vals, mask = self.encode(records)
        n_e = len(self.vocab_.entities)
        E = self.params_["entity"]
        with torch.no_grad():
            if side == "tail":
                box = self.boxes_for(ids[:, 0], ids[:, 1], keys, vals, mask)
                box = Box(box.m.unsqueeze(1), box.M.unsqueeze(1))
                return (-box_distance(E.unsqueeze(0), box)).numpy()
            if side == "head":
                heads = torch.arange(n_e).expand(len(ids), n_e)
                box = self.boxes_for(heads, ids[:, 1], keys, vals, mask)
                return (-box_distance(E[torch.as_tensor(ids[:, 2])].unsqueeze(1), box)).numpy()
        raise DomainError(f"side must be 'head' or 'tail', got {side!r}")

    def record_relation(self, record):
        return record.triple.r if isinstance(record, HyperFact) else record.r


def shrinke_score(model, fact):
    """``-D(e_t, box_Q)`` for one fact (a ``HyperFact`` or a plain ``Triple``)."""
    if isinstance(fact, Triple):
        fact = HyperFact(fact)
    return model.score_fact(fact)


__all__ = ["ShrinkE", "box_distance", "box_intersection", "qualified_box", "query_box", "shrinke_score"]
