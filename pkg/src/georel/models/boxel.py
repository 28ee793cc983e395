"""BoxEL: concepts as boxes, individuals as points, roles as diagonal affine maps."""

import math

import numpy as np
import torch

from ..boxes import Box, box_intersection, volume
from ..data import EL_FORMS, ElAxiom, Vocab, nominal_name
from ..errors import DomainError, InconsistentAxiomError
from .base import GeoModel, other_ids, uniform

CONCEPT_SLOTS = ("c", "d", "e")


# --------------------------------------------------------------- loss terms


def _vol(b, kind, eps, temp):
    return volume(b, kind, eps, temp)


def containment_loss(b1, b2, kind="modified", eps=0.01, temp=1.0):
    """``1 - Vol(b1 & b2) / Vol(b1)``; an empty (zero-volume) ``b1`` is contained in anything."""
    v1 = _vol(b1, kind, eps, temp)
    vi = _vol(box_intersection(b1, b2), kind, eps, temp)
    safe = torch.where(v1 > 0, v1, torch.ones_like(v1))
    return torch.where(v1 > 0, 1 - vi / safe, torch.zeros_like(v1))


def disjointness_loss(b1, b2, kind="modified", eps=0.01, temp=1.0):
    """``Vol(b1 & b2) / (Vol(b1) + Vol(b2))``."""
    num = _vol(box_intersection(b1, b2), kind, eps, temp)
    den = _vol(b1, kind, eps, temp) + _vol(b2, kind, eps, temp)
    safe = torch.where(den > 0, den, torch.ones_like(den))
    return torch.where(den > 0, num / safe, torch.zeros_like(den))


def bottom_loss(b, eps=0.01):
    """``max(0, M_0 - m_0 + eps)``: zero once the first side is inverted by eps."""
    return torch.relu(b.M[..., 0] - b.m[..., 0] + eps)


def map_box(scale, shift, b):
    return Box(scale * b.m + shift, scale * b.M + shift)


def unmap_box(scale, shift, b):
    return Box((b.m - shift) / scale, (b.M - shift) / scale)


def assertion_loss(point, b):
    """Sum over dimensions of ``|max(0, a - M)| + |max(0, m - a)|``."""
    return (torch.relu(point - b.M) + torch.relu(b.m - point)).sum(-1)


def role_loss(scale, shift, a, b):
    return torch.linalg.vector_norm(scale * a + shift - b, dim=-1)


def role_negative_loss(scale, shift, a, b, gamma=1.0):
    return torch.relu(gamma - role_loss(scale, shift, a, b))


def unit_box_regularizer(b, eps=0.01):
    """Sum of ``max(0, M_i - 1 + eps) + max(0, -m_i - eps)`` over boxes that are not sign-empty."""
    per = (torch.relu(b.M - 1 + eps) + torch.relu(-b.m - eps)).sum(-1)
    nonempty = (b.m < b.M).all(-1)
    return torch.where(nonempty, per, torch.zeros_like(per)).sum()


# ------------------------------------------------------------------ estimator


class BoxEL(GeoModel):
    """Fit on a list of ``ElAxiom`` records.

    ``volume`` picks the volume used inside every containment and
    disjointness term: ``softplus`` (temperature ``temp``) for training
    signal or ``modified`` (offset ``eps``) for exact zero losses.
    """

    model_tag = "boxel"
    param_rows = {
        "concept_min": "concepts",
        "concept_max": "concepts",
        "individual": "entities",
        "role_log_scale": "roles",
        "role_shift": "roles",
    }

    def __init__(
        self,
        dim=2,
        volume="softplus",
        temp=0.01,
        eps=0.01,
        phi=0.05,
        gamma=1.0,
        neg=1,
        regularize=True,
        lr=1e-2,
        lr_end=1e-6,
        epochs=3000,
        batch_size=4096,
        seed=0,
        patience=0,
        self_check=False,
    ):
        self.dim = dim
        self.volume = volume
        self.temp = temp
        self.eps = eps
        self.phi = phi
        self.gamma = gamma
        self.neg = neg
        self.regularize = regularize
        self.lr = lr
        self.lr_end = lr_end
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.patience = patience
        self.self_check = self_check

    def _build_vocab(self, data):
        return Vocab.build(data)

    def _init_params(self, gen):
        if not 0 <= self.phi <= 1:
            raise DomainError("phi must lie in [0, 1]")
        v, d = self.vocab_, self.dim
        n_c, n_i, n_r = len(v.concepts), len(v.entities), len(v.roles)
        lo = uniform(gen, (n_c, d), 0.0, 0.4)
        yield "concept_min", lo
        yield "concept_max", lo + uniform(gen, (n_c, d), 0.2, 0.5)
        yield "individual", uniform(gen, (n_i, d), 0.0, 1.0)
        yield "role_log_scale", uniform(gen, (n_r, d), -0.1 / math.sqrt(d), 0.1 / math.sqrt(d))
        yield "role_shift", uniform(gen, (n_r, d), -0.1 / math.sqrt(d), 0.1 / math.sqrt(d))

    @classmethod
    def from_geometry(cls, axioms, concepts, individuals=None, roles=None, **params):
        """Estimator with hand-placed geometry instead of trained parameters.

        ``concepts`` maps names to ``(m, M)`` corner pairs, ``individuals``
        names to points and ``roles`` names to ``(scale, shift)``; every name
        the axioms use must be given.
        """
        model = cls(**params)
        model.vocab_ = Vocab.build(axioms, extra={
            "concepts": list(concepts), "entities": list(individuals or {}), "roles": list(roles or {})
        })
        v = model.vocab_
        dim = len(next(iter(concepts.values()))[0]) if concepts else model.dim
        model.dim = dim

        def table(names, lookup, default):
            rows = []
            for name in names:
                if name not in lookup:
                    raise DomainError(f"no geometry given for {name!r}")
                rows.append(torch.as_tensor(np.asarray(default(lookup[name]), dtype=np.float64)))
            return torch.stack(rows) if rows else torch.zeros(0, dim, dtype=torch.float64)

        roles = roles or {}
        model.params_ = {
            "concept_min": table(v.concepts.names, concepts, lambda b: b[0]),
            "concept_max": table(v.concepts.names, concepts, lambda b: b[1]),
            "individual": table(v.entities.names, individuals or {}, lambda x: x),
            "role_log_scale": table(v.roles.names, roles, lambda t: np.log(np.asarray(t[0], dtype=np.float64))),
            "role_shift": table(v.roles.names, roles, lambda t: t[1]),
        }
        model._index(list(axioms))
        return model

    # -- lookups --------------------------------------------------------------

    def _slot(self, name):
        nom = nominal_name(name)
        if nom is None:
            return False, self.vocab_.concepts[name]
        return True, self.vocab_.entities[nom]

    def _boxes(self, nominal, ids):
        P = self.params_
        nominal = torch.as_tensor(nominal).unsqueeze(-1)
        ids = torch.as_tensor(ids)
        n_c = len(self.vocab_.concepts)
        cid = ids.clamp(max=max(n_c - 1, 0))
        pts = P["individual"][ids.clamp(max=len(self.vocab_.entities) - 1)] if len(self.vocab_.entities) else None
        if n_c == 0:
            return Box(pts, pts)
        if pts is None:
            return Box(P["concept_min"][cid], P["concept_max"][cid])
        return Box(
            torch.where(nominal, pts, P["concept_min"][cid]),
            torch.where(nominal, pts, P["concept_max"][cid]),
        )

    def box(self, name):
        """Box of a concept name (or of a nominal ``{a}``) as numpy corners."""
        self._check_fitted()
        nom, i = self._slot(name)
        with torch.no_grad():
            b = self._boxes([nom], [i])
        return Box(b.m[0].numpy().copy(), b.M[0].numpy().copy())

    def point(self, individual):
        self._check_fitted()
        return self.params_["individual"][self.vocab_.entities[individual]].detach().numpy().copy()

    def role_map(self, role):
        self._check_fitted()
        j = self.vocab_.roles[role]
        P = self.params_
        return torch.exp(P["role_log_scale"][j]).detach().numpy(), P["role_shift"][j].detach().numpy().copy()

    # -- encoding -------------------------------------------------------------

    def encode(self, axioms):
        """Per-form index arrays: concept slots as (nominal flag, id), roles and individuals as ids."""
        v = self.vocab_
        groups = {}
        for ax in axioms:
            check_consistent(ax)
            groups.setdefault(ax.form, []).append(ax)
        enc = {}
        for form, items in groups.items():
            cols = {}
            for key in EL_FORMS[form]:
                vals = [getattr(ax, key) for ax in items]
                if key in CONCEPT_SLOTS:
                    slots = [self._slot(x) for x in vals]
                    cols[key] = (np.array([s[0] for s in slots]), np.array([s[1] for s in slots], dtype=np.int64))
                elif key == "r":
                    cols[key] = np.array([v.roles[x] for x in vals], dtype=np.int64)
                else:
                    cols[key] = np.array([v.entities[x] for x in vals], dtype=np.int64)
            enc[form] = cols
        return enc

    def _terms(self, enc):
        """Loss tensor per form (one entry per axiom)."""
        P = self.params_
        kw = dict(kind=self.volume, eps=self.eps, temp=self.temp)
        out = {}
        for form, cols in enc.items():
            box = lambda key: self._boxes(*cols[key])  # noqa: E731
            if "r" in cols:
                scale, shift = torch.exp(P["role_log_scale"][cols["r"]]), P["role_shift"][cols["r"]]
            if form == "nf1":
                out[form] = containment_loss(box("c"), box("d"), **kw)
            elif form == "nf2":
                out[form] = containment_loss(box_intersection(box("c"), box("d")), box("e"), **kw)
            elif form == "nf3":
                out[form] = containment_loss(map_box(scale, shift, box("c")), box("d"), **kw)
            elif form == "nf4":
                out[form] = containment_loss(unmap_box(scale, shift, box("c")), box("d"), **kw)
            elif form == "nf1_bot":
                out[form] = bottom_loss(box("c"), self.eps)
            elif form == "nf2_bot":
                out[form] = disjointness_loss(box("c"), box("d"), **kw)
            elif form == "concept":
                out[form] = assertion_loss(P["individual"][cols["a"]], box("c"))
            elif form == "role":
                out[form] = role_loss(scale, shift, P["individual"][cols["a"]], P["individual"][cols["b"]])
        return out

    def axiom_losses(self, axioms):
        """Numpy array of per-axiom losses in input order."""
        self._check_fitted()
        with torch.no_grad():
            terms = self._terms(self.encode(axioms))
        pos = {f: 0 for f in terms}
        out = []
        for ax in axioms:
            out.append(float(terms[ax.form][pos[ax.form]]))
            pos[ax.form] += 1
        return np.array(out)

    def regularizer(self):
        P = self.params_
        return unit_box_regularizer(Box(P["concept_min"], P["concept_max"]), self.eps)

    # -- negatives ------------------------------------------------------------

    def _negatives(self, enc, rng):
        """Non-subsumption pairs from atomic NF1 axioms and corrupted role assertions."""
        P = self.params_
        kw = dict(kind=self.volume, eps=self.eps, temp=self.temp)
        total = torch.zeros((), dtype=torch.float64)
        k = self.neg
        n_c, n_i = len(self.vocab_.concepts), len(self.vocab_.entities)
        if k and self.phi > 0 and "nf1" in enc and n_c > 1:
            (cn, cid), (dn, did) = enc["nf1"]["c"], enc["nf1"]["d"]
            atomic = ~cn & ~dn
            cid, did = np.repeat(cid[atomic, None], k, 1), np.repeat(did[atomic, None], k, 1)
            if cid.size:
                left = rng.random(cid.shape) < 0.5
                cid2 = np.where(left, other_ids(rng, n_c, cid), cid)
                did2 = np.where(left, did, other_ids(rng, n_c, did))
                no = np.zeros(cid.shape, dtype=bool)
                L = containment_loss(self._boxes(no, cid2), self._boxes(no, did2), **kw)
                total = total + self.phi * (1 - L).sum()
        if k and "role" in enc and n_i > 1:
            r = np.repeat(enc["role"]["r"][:, None], k, 1)
            a = np.repeat(enc["role"]["a"][:, None], k, 1)
            b = np.repeat(enc["role"]["b"][:, None], k, 1)
            left = rng.random(a.shape) < 0.5
            a2 = np.where(left, other_ids(rng, n_i, a), a)
            b2 = np.where(left, b, other_ids(rng, n_i, b))
            scale, shift = torch.exp(P["role_log_scale"][r]), P["role_shift"][r]
            ind = P["individual"]
            total = total + role_negative_loss(scale, shift, ind[a2], ind[b2], self.gamma).sum()
        return total

    # -- training -------------------------------------------------------------

    def _index(self, data):
        self._axioms = list(data)
        self._enc_all = self.encode(self._axioms)
        self._n_units = len(self._axioms)
        self._forms = np.array([ax.form for ax in self._axioms])
        return self._n_units

    def _validation_loss(self, val_data):
        return self.total_loss(val_data, rng=np.random.default_rng(0))

    def _batch_loss(self, units, rng):
        units = np.asarray(units)
        if len(units) == self._n_units:
            enc = self._enc_all
        else:
            enc = self.encode([self._axioms[i] for i in np.sort(units)])
        loss = sum(t.sum() for t in self._terms(enc).values())
        loss = loss + self._negatives(enc, rng)
        if self.regularize:
            loss = loss + self.regularizer()
        return loss

    def total_loss(self, axioms, negatives=None, rng=None):
        """Axiom terms + regularizer + either the given negatives or freshly sampled ones.

        ``negatives`` holds ``nf1`` records read as non-subsumptions and
        ``role`` records read as false role assertions.
        """
        self._check_fitted()
        enc = self.encode(axioms)
        loss = sum((t.sum() for t in self._terms(enc).values()), torch.zeros((), dtype=torch.float64))
        if self.regularize:
            loss = loss + self.regularizer()
        if negatives is None:
            if rng is not None:
                loss = loss + self._negatives(enc, rng)
        elif negatives:
            loss = loss + self.negative_loss(negatives)
        return loss

    def negative_loss(self, negatives):
        P = self.params_
        kw = dict(kind=self.volume, eps=self.eps, temp=self.temp)
        total = torch.zeros((), dtype=torch.float64)
        enc = self.encode(negatives)
        for form, cols in enc.items():
            if form == "nf1":
                L = containment_loss(self._boxes(*cols["c"]), self._boxes(*cols["d"]), **kw)
                total = total + self.phi * (1 - L).sum()
            elif form == "role":
                scale, shift = torch.exp(P["role_log_scale"][cols["r"]]), P["role_shift"][cols["r"]]
                ind = P["individual"]
                total = total + role_negative_loss(scale, shift, ind[cols["a"]], ind[cols["b"]], self.gamma).sum()
            else:
                raise DomainError(f"negatives must be nf1 or role records, got {form!r}")
        return total

    def _after_step(self):
        pass

    # -- subsumption -------------------------------------------------------

    def subsumption_scores(self, c):
        """``MVol(C & D) / MVol(C)`` against every concept D (vocabulary order); zeros if MVol(C) = 0."""
        self._check_fitted()
        b = self.box(c)
        P = self.params_
        with torch.no_grad():
            allb = Box(P["concept_min"], P["concept_max"])
            mine = Box(torch.as_tensor(b.m), torch.as_tensor(b.M))
            v1 = volume(mine, "modified", self.eps)
            if float(v1) == 0:
                return np.zeros(len(self.vocab_.concepts))
            return (volume(box_intersection(allb, mine), "modified", self.eps) / v1).numpy().copy()

    def subsumption_score(self, c, d):
        """``MVol(C & D) / MVol(C)`` with the modified volume."""
        b1, b2 = self.box(c), self.box(d)
        v1 = float(volume(b1, "modified", self.eps))
        if v1 == 0:
            raise DomainError(f"box of {c!r} has zero modified volume")
        return float(volume(box_intersection(b1, b2), "modified", self.eps)) / v1


def check_consistent(axiom):
    """Raise for the two axiom shapes no geometric interpretation satisfies."""
    if axiom.form == "nf1_bot" and nominal_name(axiom.c) is not None:
        raise InconsistentAxiomError(f"nominal {axiom.c} cannot be subsumed by bottom")
    if axiom.form == "nf2_bot" and nominal_name(axiom.c) is not None and axiom.c == axiom.d:
        raise InconsistentAxiomError(f"{axiom.c} and {axiom.d} cannot be disjoint")


def _strictly_empty(b):
    return bool(np.any(b.m > b.M))


def _inside(outer, inner, tol):
    return bool(np.all(outer.m <= inner.m + tol) and np.all(inner.M <= outer.M + tol))


def satisfies(model, axiom, tol=0.0):
    """True when the fitted geometry is a model of ``axiom``: the box, point and map predicates.

    A box is empty only when some lower corner lies strictly above its upper
    corner, so single points count as non-empty.
    """
    check_consistent(axiom)
    f = axiom.fields()
    box = model.box
    if "r" in f:
        scale, shift = model.role_map(f["r"])
    form = axiom.form
    if form == "nf1":
        c = box(f["c"])
        return _strictly_empty(c) or _inside(box(f["d"]), c, tol)
    if form == "nf2":
        cd = Box(np.maximum(box(f["c"]).m, box(f["d"]).m), np.minimum(box(f["c"]).M, box(f["d"]).M))
        return _strictly_empty(cd) or _inside(box(f["e"]), cd, tol)
    if form == "nf3":
        c = box(f["c"])
        return _strictly_empty(c) or _inside(box(f["d"]), Box(scale * c.m + shift, scale * c.M + shift), tol)
    if form == "nf4":
        c = box(f["c"])
        if _strictly_empty(c):
            return True
        if np.any(scale == 0):
            raise DomainError("role map with a zero scale has no inverse")
        return _inside(box(f["d"]), Box((c.m - shift) / scale, (c.M - shift) / scale), tol)
    if form == "nf1_bot":
        return _strictly_empty(box(f["c"]))
    if form == "nf2_bot":
        c, d = box(f["c"]), box(f["d"])
        return _strictly_empty(Box(np.maximum(c.m, d.m), np.minimum(c.M, d.M)))
    if form == "concept":
        c, a = box(f["c"]), model.point(f["a"])
        return bool(np.all(c.m <= a + tol) and np.all(a <= c.M + tol))
    if form == "role":
        return bool(np.all(np.abs(scale * model.point(f["a"]) + shift - model.point(f["b"])) <= tol))
    raise DomainError(f"unknown axiom form {form!r}")


def boxel_axiom_loss(model, axiom):
    return float(model.axiom_losses([axiom])[0])


def boxel_total_loss(model, kb, neg_samples=()):
    with torch.no_grad():
        return float(model.total_loss(kb, list(neg_samples)))


def subsumption_score(model, c, d):
    return model.subsumption_score(c, d)


__all__ = [
    "BoxEL",
    "ElAxiom",
    "assertion_loss",
    "boxel_axiom_loss",
    "boxel_total_loss",
    "containment_loss",
    "disjointness_loss",
    "satisfies",
    "subsumption_score",
]
