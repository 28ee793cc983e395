"""Shared estimator machinery: parameter stores, fitting, gradient self-checks."""

import numpy as np
import torch
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .._backend import DTYPE
from ..errors import GeoRelError
from ..numerics import autograd_loss, check_gradients
from ..training import SeedStreams, train


def uniform(gen, shape, low, high):
    return torch.rand(*shape, generator=gen, dtype=DTYPE) * (high - low) + low


def other_ids(rng, n, current):
    """Vectorised uniform draw from range(n) excluding ``current`` entry-wise."""
    current = np.asarray(current)
    j = rng.integers(n - 1, size=current.shape)
    return j + (j >= current)


class GeoModel(BaseEstimator):
    """Base class: subclasses define ``model_tag``, ``_init_params`` and ``_batch_loss``.

    Fitted state lives in ``vocab_`` (names to ids) and ``params_`` (an
    ordered dict of float64 tensors, the unit that checkpoints serialise).
    """

    model_tag = None
    param_rows = {}

    # -- estimator API ------------------------------------------------------

    def fit(self, X, y=None, val_data=None):
        """Fit on parsed records; ``y`` is ignored."""
        self.history_ = train(
            self,
            X,
            epochs=self.epochs,
            lr=self.lr,
            batch_size=self.batch_size,
            seed=self.seed,
            val_data=val_data,
            patience=getattr(self, "patience", 0),
            gradcheck=getattr(self, "self_check", False),
            lr_end=getattr(self, "lr_end", None),
        )
        return self

    def _check_fitted(self):
        if getattr(self, "params_", None) is None:
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    # -- training hooks -----------------------------------------------------

    def _prepare(self, data):
        """Build the vocabulary, initialise parameters, index the data; return unit count."""
        self.vocab_ = self._build_vocab(data)
        gen = SeedStreams(self.seed).torch("init")
        self.params_ = dict(self._init_params(gen))
        self._restore()
        return self._index(data)

    def _after_step(self):
        pass

    def _restore(self):
        """Recompute derived, non-serialised state after params_ or vocab_ change."""

    def _validation_loss(self, val_data):
        units = self._index_eval(val_data)
        return self._batch_loss(units, np.random.default_rng(0))

    # -- gradient self-test -------------------------------------------------

    def loss_closure(self, units=None, neg_seed=0):
        """``(flat, fn)``: current parameters flattened and a torch loss of a flat vector.

        Negatives are redrawn from the same seed on every call so ``fn`` is a
        deterministic function of its argument.
        """
        self._check_fitted()
        if units is None:
            units = np.arange(min(self._n_units, 32))
        names = list(self.params_)
        shapes = [self.params_[n].shape for n in names]
        sizes = [int(np.prod(s)) for s in shapes]
        flat = torch.cat([self.params_[n].detach().reshape(-1) for n in names])

        def fn(vec):
            saved = self.params_
            pieces = torch.split(vec, sizes)
            self.params_ = {n: p.reshape(s) for n, p, s in zip(names, pieces, shapes)}
            try:
                self._restore()
                return self._batch_loss(units, np.random.default_rng(neg_seed))
            finally:
                self.params_ = saved
                self._restore()

        return flat, fn

    def gradient_check(self, rng, n_points=20, n_coords=12, noise=0.05, tol=1e-4, units=None):
        """Check autograd against central differences at ``n_points`` perturbed parameter points.

        Each point checks a random subset of ``n_coords`` coordinates (all of
        them when ``n_coords`` is None); returns the list of reports.
        """
        flat, fn = self.loss_closure(units)
        reports = []
        for _ in range(n_points):
            point = flat + torch.as_tensor(rng.normal(0, noise, flat.shape), dtype=DTYPE)
            if n_coords is None or n_coords >= flat.numel():
                idx = torch.arange(flat.numel())
            else:
                idx = torch.as_tensor(np.sort(rng.choice(flat.numel(), n_coords, replace=False)))

            def sub(v, point=point, idx=idx):
                full = point.clone()
                full[idx] = v
                return fn(full)

            loss, grad = autograd_loss(sub)
            reports.append(check_gradients(loss, grad, point[idx].numpy(), tol=tol))
        return reports

    def _self_check(self, rng):
        for rep in self.gradient_check(rng, n_points=20, n_coords=8):
            if not rep.passed:
                raise GeoRelError(
                    f"{self.model_tag} gradient self-check failed: relative error "
                    f"{rep.max_rel_err:.3g} at coordinate {rep.worst_param_index}"
                )
