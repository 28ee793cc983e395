"""NestE: atomic and nested facts embedded with hypercomplex rotations."""

import math

import numpy as np
import torch

from ..data import NestedTriple, Triple, Vocab
from ..errors import DomainError
from ..hypercomplex import AlgebraKind, hamilton, hinner, hmat_inner, hmat_rotate, hnormalize_rotor
from ..training import softplus_pairs
from .base import GeoModel, other_ids, uniform
from .kg import KGScorer


def atomic_transform(h, r_b, r_theta, kind):
    """``(h + r_b) (x) normalize(r_theta)`` over (..., d, 4) arrays."""
    return hamilton(h + r_b, hnormalize_rotor(r_theta), kind)


def nested_transform(T, r_b, R, kind):
    """``(T + r_b) (x)_3x3 R`` for a row of three (..., 3, d, 4) and a (..., 3, 3, d, 4) grid.

    The grid is used as given: its pattern solutions contain exact zeros,
    which row normalisation would not preserve.
    """
    return hmat_rotate(T + r_b, R, kind)


class NestE(KGScorer, GeoModel):
    """Fit on a list mixing atomic ``Triple`` records and ``NestedTriple`` records."""

    model_tag = "neste"
    param_rows = {
        "entity": "entities",
        "relation": "relations",
        "rotor": "relations",
        "translation": "relations",
        "nested_rotor": "nested_relations",
        "nested_translation": "nested_relations",
    }

    def __init__(
        self,
        dim=16,
        kind="q",
        lam1=0.5,
        lam2=0.0,
        lr=1e-2,
        epochs=100,
        batch_size=128,
        neg=10,
        seed=0,
        patience=0,
        self_check=False,
    ):
        self.dim = dim
        self.kind = kind
        self.lam1 = lam1
        self.lam2 = lam2
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.neg = neg
        self.seed = seed
        self.patience = patience
        self.self_check = self_check

    @property
    def algebra(self):
        return AlgebraKind.coerce(self.kind)

    @staticmethod
    def _split(data):
        atomic = [r for r in data if isinstance(r, Triple)]
        nested = [r for r in data if isinstance(r, NestedTriple)]
        if len(atomic) + len(nested) != len(data):
            raise TypeError("NestE data must contain only Triple and NestedTriple records")
        return atomic, nested

    def _build_vocab(self, data):
        return Vocab.build(data)

    def _init_params(self, gen):
        if self.lam1 < 0 or self.lam2 < 0:
            raise DomainError("loss weights must be non-negative")
        self.algebra  # validates the kind
        v, d = self.vocab_, self.dim
        n_e, n_r, n_n = len(v.entities), len(v.relations), len(v.nested_relations)
        b = 1.0 / math.sqrt(d)
        yield "entity", uniform(gen, (n_e, d, 4), -b, b)
        yield "relation", uniform(gen, (n_r, d, 4), -b, b)
        yield "rotor", uniform(gen, (n_r, d, 4), -1.0, 1.0)
        yield "translation", uniform(gen, (n_r, d, 4), -b, b)
        yield "nested_rotor", uniform(gen, (n_n, 3, 3, d, 4), -b, b)
        yield "nested_translation", uniform(gen, (n_n, 3, d, 4), -b, b)

    # -- scoring --------------------------------------------------------------

    def score_ids(self, h, r, t):
        P = self.params_
        h, r, t = (torch.as_tensor(np.asarray(a)) for a in (h, r, t))
        hp = atomic_transform(P["entity"][h], P["translation"][r], P["rotor"][r], self.algebra)
        return hinner(hp, P["entity"][t].expand_as(hp), trailing=2)

    def candidate_scores(self, h, r, t, side):
        h, r, t = (torch.as_tensor(np.asarray(a)).reshape(-1) for a in (h, r, t))
        E = self.params_["entity"]
        if side == "tail":
            hp = atomic_transform(E[h], self.params_["translation"][r], self.params_["rotor"][r], self.algebra)
            return torch.einsum("bda,nda->bn", hp, E)
        if side == "head":
            return self.score_ids(torch.arange(len(E)).unsqueeze(0), r.unsqueeze(1), t.unsqueeze(1))
        raise DomainError(f"side must be 'head' or 'tail', got {side!r}")

    def fact_rows(self, triple_ids):
        """Rows ``[h, r, t]`` of hypercomplex vectors, (..., 3, d, 4)."""
        P = self.params_
        ids = torch.as_tensor(np.asarray(triple_ids))
        return torch.stack([P["entity"][ids[..., 0]], P["relation"][ids[..., 1]], P["entity"][ids[..., 2]]], dim=-3)

    def nested_score_ids(self, head_ids, nr, tail_ids):
        P = self.params_
        nr = torch.as_tensor(np.asarray(nr))
        Tp = nested_transform(self.fact_rows(head_ids), P["nested_translation"][nr], P["nested_rotor"][nr], self.algebra)
        Tj = self.fact_rows(tail_ids)
        return hmat_inner(Tp, Tj.expand_as(Tp))

    def nested_ids(self, records):
        v = self.vocab_
        tid = lambda t: [v.entities[t.h], v.relations[t.r], v.entities[t.t]]  # noqa: E731
        heads = np.array([tid(n.head) for n in records], dtype=np.int64).reshape(-1, 3)
        tails = np.array([tid(n.tail) for n in records], dtype=np.int64).reshape(-1, 3)
        rels = np.array([v.nested_relations[n.rel] for n in records], dtype=np.int64)
        return heads, rels, tails

    def score_samples(self, X):
        """Scores for a list of atomic triples or of nested facts."""
        self._check_fitted()
        atomic, nested = self._split(X)
        if atomic and nested:
            raise DomainError("score atomic and nested facts in separate calls")
        if nested:
            with torch.no_grad():
                return self.nested_score_ids(*self.nested_ids(nested)).numpy().copy()
        return KGScorer.score_samples(self, atomic)

    # -- training -------------------------------------------------------------

    def _index(self, data):
        atomic, nested = self._split(data)
        self._train_ids = self.triple_ids(atomic)
        self._nested = self.nested_ids(nested)
        pool = list(dict.fromkeys(atomic + [t for n in nested for t in (n.head, n.tail)]))
        self._pool = self.triple_ids(pool)
        self._pool_index = {tuple(row): i for i, row in enumerate(self._pool.tolist())}
        self._n_atomic = len(atomic)
        self._n_units = len(atomic) + len(nested)
        return self._n_units

    def _validation_loss(self, val_data):
        saved = (self._train_ids, self._nested, self._n_atomic)
        atomic, nested = self._split(val_data)
        self._train_ids, self._nested, self._n_atomic = self.triple_ids(atomic), self.nested_ids(nested), len(atomic)
        try:
            return self._batch_loss(np.arange(len(atomic) + len(nested)), np.random.default_rng(0))
        finally:
            self._train_ids, self._nested, self._n_atomic = saved

    def _batch_loss(self, units, rng):
        units = np.asarray(units)
        a_units = units[units < self._n_atomic]
        n_units = units[units >= self._n_atomic] - self._n_atomic
        k = self.neg
        zero = torch.zeros((), dtype=torch.float64)
        loss = zero
        if len(a_units):
            ids = self._train_ids[a_units]
            h, r, t = ids[:, 0], ids[:, 1], ids[:, 2]
            pos = self.score_ids(h, r, t)
            neg = torch.zeros(0, dtype=torch.float64)
            if k:
                n_e = len(self.vocab_.entities)
                hh, tt = np.repeat(h[:, None], k, 1), np.repeat(t[:, None], k, 1)
                side = rng.random(hh.shape) < 0.5
                hh = np.where(side, other_ids(rng, n_e, hh), hh)
                tt = np.where(side, tt, other_ids(rng, n_e, tt))
                neg = self.score_ids(hh, r[:, None], tt)
            loss = loss + softplus_pairs(pos, neg)
        if len(n_units) and self.lam1 > 0:
            heads, rels, tails = (a[n_units] for a in self._nested)
            pos = self.nested_score_ids(heads, rels, tails)
            neg = torch.zeros(0, dtype=torch.float64)
            n_pool = len(self._pool)
            if k and n_pool > 1:
                B = len(n_units)
                hi = np.array([self._pool_index[tuple(x)] for x in heads.tolist()])
                ti = np.array([self._pool_index[tuple(x)] for x in tails.tolist()])
                hh, tt = np.repeat(hi[:, None], k, 1), np.repeat(ti[:, None], k, 1)
                side = rng.random((B, k)) < 0.5
                hh = np.where(side, other_ids(rng, n_pool, hh), hh)
                tt = np.where(side, tt, other_ids(rng, n_pool, tt))
                neg = self.nested_score_ids(self._pool[hh], rels[:, None], self._pool[tt])
            loss = loss + self.lam1 * softplus_pairs(pos, neg)
        return loss


def _check_kind(model, kind):
    if kind is not None and AlgebraKind.coerce(kind) != model.algebra:
        raise DomainError(f"model uses algebra {model.algebra.value!r}, not {AlgebraKind.coerce(kind).value!r}")


def neste_atomic_score(model, h, r, t, kind=None):
    _check_kind(model, kind)
    return model.score_triple(Triple(h, r, t) if isinstance(h, str) else (h, r, t))


def neste_nested_score(model, head, rel, tail, kind=None):
    """Score of ``(head, rel, tail)`` where head and tail are ``Triple`` records."""
    _check_kind(model, kind)
    return float(model.score_samples([NestedTriple(head, rel, tail)])[0])


def neste_total_loss(pos_atomic, neg_atomic, pos_nested, neg_nested, lam1=0.5):
    """``sum g(-phi+) + sum g(phi-)`` over atomic scores plus ``lam1`` times the same over nested scores."""
    if lam1 < 0:
        raise DomainError("lam1 must be non-negative")
    t = torch.as_tensor
    return softplus_pairs(t(pos_atomic, dtype=torch.float64), t(neg_atomic, dtype=torch.float64)) + lam1 * softplus_pairs(
        t(pos_nested, dtype=torch.float64), t(neg_nested, dtype=torch.float64)
    )
