"""Plumbing shared by the triple-scoring models (UltraE, NestE atomic facts)."""

import numpy as np
import torch

from ..data import Triple


class KGScorer:
    """Mixin for models that score ``Triple`` records via ``score_ids``."""

    def triple_ids(self, triples):
        v = self.vocab_
        return np.array(
            [[v.entities[t.h], v.relations[t.r], v.entities[t.t]] for t in triples], dtype=np.int64
        ).reshape(-1, 3)

    def _index(self, data):
        self._train_ids = self.triple_ids(data)
        self._n_units = len(self._train_ids)
        return self._n_units

    def _validation_loss(self, val_data):
        saved = self._train_ids
        self._train_ids = self.triple_ids(val_data)
        try:
            return self._batch_loss(np.arange(len(self._train_ids)), np.random.default_rng(0))
        finally:
            self._train_ids = saved

    def score_triple(self, triple):
        """Score of one triple, given as a ``Triple`` of names or an (h, r, t) id tuple."""
        self._check_fitted()
        ids = self.triple_ids([triple])[0] if isinstance(triple, Triple) else np.asarray(triple)
        with torch.no_grad():
            return float(self.score_ids(ids[0], ids[1], ids[2]))

    def score_samples(self, X):
        """Raw scores of a list of triples."""
        self._check_fitted()
        ids = self.triple_ids(X)
        with torch.no_grad():
            return self.score_ids(ids[:, 0], ids[:, 1], ids[:, 2]).numpy().copy()

    def predict_proba(self, X):
        return 1.0 / (1.0 + np.exp(-self.score_samples(X)))

    def predict(self, X, threshold=0.5):
        return self.predict_proba(X) >= threshold

    # -- ranking protocol used by georel.eval -------------------------------

    def query_keys(self, records, side):
        """(query key, answer id) per record: the key drops the slot being ranked."""
        ids = self.triple_ids(records)
        if side == "tail":
            return [(("t", int(h), int(r)), int(t)) for h, r, t in ids]
        return [(("h", int(r), int(t)), int(h)) for h, r, t in ids]

    def candidate_scores_for(self, records, side):
        ids = self.triple_ids(records)
        with torch.no_grad():
            return self.candidate_scores(ids[:, 0], ids[:, 1], ids[:, 2], side).numpy()

    def record_relation(self, record):
        return record.r
