"""UltraE: entities on an ultrahyperbolic manifold, relations as J-orthogonal maps."""

import math

import numpy as np
import torch

from ..data import Triple, Vocab
from ..errors import DomainError
from ..manifold import Signature, canonical_to_ultra, manhattan_distance, project_to_manifold, ultra_to_canonical
from ..training import bce_from_scores
from ..transforms import UltraRelParams, apply_relation, check_pq
from .base import GeoModel, other_ids, uniform
from .kg import KGScorer


class UltraE(KGScorer, GeoModel):
    """Score ``-d(f_r(e_h), e_t)^2 + b_h + b_t + delta`` on U^{p,q} with radius ``alpha``.

    ``dim`` = p + q; both parts must be even and ``q <= dim / 2``.  Entities
    are stored as unconstrained vectors in the space-first layout and
    projected onto the manifold whenever they are scored.
    """

    model_tag = "ultrae"
    param_rows = {"entity": "entities", "bias_head": "entities", "bias_tail": "entities", "theta": "relations", "phi": "relations", "mu": "relations"}

    def __init__(
        self,
        dim=16,
        q=4,
        alpha=1.0,
        lr=1e-2,
        epochs=100,
        batch_size=128,
        neg=50,
        smoothing=0.0,
        init_scale=1.0,
        seed=0,
        patience=0,
        self_check=False,
    ):
        self.dim = dim
        self.q = q
        self.alpha = alpha
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.neg = neg
        self.smoothing = smoothing
        self.init_scale = init_scale
        self.seed = seed
        self.patience = patience
        self.self_check = self_check

    @property
    def p(self):
        return self.dim - self.q

    @property
    def signature(self):
        return Signature.from_radius(self.alpha, self.p, self.q)

    def _build_vocab(self, data):
        return Vocab.build(data)

    def _init_params(self, gen):
        check_pq(self.p, self.q)
        n_e, n_r, d = len(self.vocab_.entities), len(self.vocab_.relations), self.dim
        bound = self.init_scale / math.sqrt(d)
        half = d // 2
        yield "entity", uniform(gen, (n_e, d), -bound, bound)
        yield "bias_head", torch.zeros(n_e, dtype=torch.float64)
        yield "bias_tail", torch.zeros(n_e, dtype=torch.float64)
        yield "theta", uniform(gen, (n_r, half), -math.pi, math.pi)
        yield "phi", uniform(gen, (n_r, half), -math.pi, math.pi)
        yield "mu", uniform(gen, (n_r, self.q), -0.1, 0.1)
        yield "delta", torch.zeros((), dtype=torch.float64)

    # -- geometry -----------------------------------------------------------

    def points(self, ids=None):
        """Entities projected onto the manifold, space-first layout."""
        raw = self.params_["entity"] if ids is None else self.params_["entity"][ids]
        sig = self.signature
        on = project_to_manifold(ultra_to_canonical(raw, self.p, self.q), sig)
        return canonical_to_ultra(on, self.p, self.q)

    def relation(self, r_ids):
        P = self.params_
        return UltraRelParams(P["theta"][r_ids], P["phi"][r_ids], P["mu"][r_ids], self.p, self.q)

    def _dist(self, a, b):
        return manhattan_distance(
            ultra_to_canonical(a, self.p, self.q), ultra_to_canonical(b, self.p, self.q), self.signature
        )

    def score_ids(self, h, r, t):
        """Scores of id triples; the arrays broadcast against each other."""
        h, r, t = (torch.as_tensor(np.asarray(a)) for a in (h, r, t))
        h, r, t = torch.broadcast_tensors(h, r, t)
        fx = apply_relation(self.relation(r), self.points(h))
        d = self._dist(fx, self.points(t))
        P = self.params_
        return -d * d + P["bias_head"][h] + P["bias_tail"][t] + P["delta"]

    def candidate_scores(self, h, r, t, side):
        """(B, n_entities) scores with the ``side`` slot ('head' or 'tail') replaced by every entity."""
        h, r, t = (torch.as_tensor(np.asarray(a)).reshape(-1) for a in (h, r, t))
        P = self.params_
        allp = self.points()
        if side == "tail":
            fx = apply_relation(self.relation(r), self.points(h))
            d = self._dist(fx.unsqueeze(1), allp.unsqueeze(0))
            return -d * d + P["bias_head"][h].unsqueeze(1) + P["bias_tail"].unsqueeze(0) + P["delta"]
        if side == "head":
            rel = self.relation(r.unsqueeze(1))
            fx = apply_relation(rel, allp.unsqueeze(0))
            d = self._dist(fx, self.points(t).unsqueeze(1))
            return -d * d + P["bias_head"].unsqueeze(0) + P["bias_tail"][t].unsqueeze(1) + P["delta"]
        raise DomainError(f"side must be 'head' or 'tail', got {side!r}")

    # -- training -------------------------------------------------------------

    def _batch_loss(self, units, rng):
        ids = self._train_ids[units]
        h, r, t = ids[:, 0], ids[:, 1], ids[:, 2]
        k = self.neg
        pos = self.score_ids(h, r, t)
        if k == 0:
            return bce_from_scores(pos, torch.zeros(len(units), 0, dtype=torch.float64), self.smoothing)
        n_e = len(self.vocab_.entities)
        hh = np.repeat(h[:, None], k, 1)
        tt = np.repeat(t[:, None], k, 1)
        head_side = rng.random((len(units), k)) < 0.5
        hh = np.where(head_side, other_ids(rng, n_e, hh), hh)
        tt = np.where(head_side, tt, other_ids(rng, n_e, tt))
        neg = self.score_ids(hh, r[:, None], tt)
        return bce_from_scores(pos, neg, self.smoothing)


def ultrae_score(model, h, r, t):
    """Score of one triple given by names or ids."""
    return model.score_triple(Triple(h, r, t) if isinstance(h, str) else (h, r, t))
