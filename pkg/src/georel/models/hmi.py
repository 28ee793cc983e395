"""HMI: one Poincare hyperplane per label, constrained by a HEX graph."""

import numpy as np
import torch

from ..data import Vocab
from ..errors import DomainError
from ..poincare import EnclosingBall, HexGraph, constraint_terms, enclosing_ball, hmi_objective, membership_score, project_to_ball
from .base import GeoModel, uniform

MIN_NORM = 1e-3


class HMI(GeoModel):
    """Label hyperplanes fitted to the hierarchy and exclusion edges of a ``HexGraph``.

    Training minimises the constraint hinges tightened by ``margin``, so that
    a zero training loss leaves strict slack; ``constraint_losses`` reports
    the untightened hinges.  Label points are projected back into the open
    ball (and away from the origin) after every step.
    """

    model_tag = "hmi"
    param_rows = {"label": "concepts"}

    def __init__(self, dim=2, lam=1.0, margin=0.02, lr=1e-2, lr_end=None, epochs=2000, batch_size=4096, seed=0, patience=0, self_check=False):
        self.dim = dim
        self.lam = lam
        self.margin = margin
        self.lr = lr
        self.lr_end = lr_end
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.patience = patience
        self.self_check = self_check

    def _build_vocab(self, data):
        if not isinstance(data, HexGraph):
            raise TypeError("HMI is fitted on a HexGraph")
        return Vocab(concepts=data.labels)

    def _init_params(self, gen):
        if self.lam < 0 or self.margin < 0:
            raise DomainError("lam and margin must be non-negative")
        n, d = len(self.vocab_.concepts), self.dim
        dirs = torch.randn(n, d, generator=gen, dtype=torch.float64)
        dirs = dirs / torch.linalg.vector_norm(dirs, dim=-1, keepdim=True)
        yield "label", dirs * uniform(gen, (n, 1), 0.3, 0.7)

    def _index(self, data):
        self.graph_ = data
        self._n_h = len(data.hierarchy)
        self._n_units = self._n_h + len(data.exclusion)
        return self._n_units

    def _extra_state(self):
        g = getattr(self, "graph_", None)
        return None if g is None else {"hierarchy": [list(e) for e in g.hierarchy], "exclusion": [list(e) for e in g.exclusion]}

    def _load_extra_state(self, state):
        if state is not None:
            labels = list(self.vocab_.concepts.names)
            self._index(HexGraph(labels, [tuple(e) for e in state["hierarchy"]], [tuple(e) for e in state["exclusion"]]))

    def balls(self):
        return enclosing_ball(self.params_["label"])

    def _batch_loss(self, units, rng):
        units = np.asarray(units, dtype=np.int64)
        g = self.graph_
        idx = g.index()
        b = self.balls()
        loss = torch.zeros((), dtype=torch.float64)
        h_units, e_units = units[units < self._n_h], units[units >= self._n_h] - self._n_h
        if len(h_units):
            ch = torch.tensor([idx[g.hierarchy[i][0]] for i in h_units])
            pa = torch.tensor([idx[g.hierarchy[i][1]] for i in h_units])
            gap = torch.linalg.vector_norm(b.o[ch] - b.o[pa], dim=-1)
            loss = loss + torch.relu(gap + b.r[ch] - b.r[pa] + self.margin).sum()
        if len(e_units):
            x = torch.tensor([idx[g.exclusion[i][0]] for i in e_units])
            y = torch.tensor([idx[g.exclusion[i][1]] for i in e_units])
            gap = torch.linalg.vector_norm(b.o[x] - b.o[y], dim=-1)
            loss = loss + torch.relu(b.r[x] + b.r[y] - gap + self.margin).sum()
        return self.lam * loss

    def _after_step(self):
        c = project_to_ball(self.params_["label"])
        n = torch.linalg.vector_norm(c, dim=-1, keepdim=True)
        self.params_["label"].copy_(torch.where(n < MIN_NORM, c * (MIN_NORM / torch.clamp(n, min=1e-300)), c))

    def _validation_loss(self, val_data):
        return torch.as_tensor(self.constraint_loss())

    # -- outputs --------------------------------------------------------------

    @property
    def labels(self):
        return list(self.vocab_.concepts.names)

    def constraint_losses(self):
        """Exact hinge values ``(inside per hierarchy edge, disjoint per exclusion edge)``."""
        self._check_fitted()
        with torch.no_grad():
            ins, dis = constraint_terms(self.balls(), self.graph_)
        return ins.numpy().copy(), dis.numpy().copy()

    def constraint_loss(self):
        ins, dis = self.constraint_losses()
        return float(ins.sum() + dis.sum())

    def decision_function(self, points):
        """Membership scores ``sigmoid(r - |o - p|)`` with shape (n_points, n_labels)."""
        self._check_fitted()
        p = torch.as_tensor(np.asarray(points, dtype=np.float64))
        b = self.balls()
        with torch.no_grad():
            s = membership_score(p.unsqueeze(-2), EnclosingBall(b.o, b.r))
        return s.numpy().copy()

    def predict(self, points):
        return self.decision_function(points) >= 0.5

    def objective(self, instances, positives, negatives):
        """HMI objective including instance membership terms; instances are ball points."""
        self._check_fitted()
        with torch.no_grad():
            return float(hmi_objective(self.params_["label"], positives, negatives, self.graph_, self.lam, instances))

    def edge_ids(self, kind="hierarchy"):
        idx = self.graph_.index()
        return [(idx[a], idx[b]) for a, b in getattr(self.graph_, kind)]
