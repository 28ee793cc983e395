"""Ranking metrics, filtered link prediction and box-containment accuracy."""

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import roc_auc_score

from .boxes import box_contains
from .errors import DomainError

SIDES = ("head", "tail")


@dataclass(frozen=True)
class RankResult:
    query: int
    relation: str
    side: str
    raw: int
    filtered: int


def filtered_rank(scores, true_id, known_true=()):
    """``1 + #{c != true_id, c not in known_true : score_c >= score_true}``.

    Ties count against the true candidate.  Pass an empty ``known_true`` for
    the raw rank.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    true_id = int(true_id)
    if not 0 <= true_id < s.size:
        raise DomainError(f"true_id {true_id} is not a candidate index")
    beat = s >= s[true_id]
    beat[true_id] = False
    known = [k for k in known_true if k != true_id]
    if known:
        beat[np.asarray(known, dtype=np.int64)] = False
    return 1 + int(beat.sum())


def _ranks(ranks):
    r = np.asarray(ranks, dtype=np.float64).reshape(-1)
    if r.size == 0:
        raise DomainError("no ranks given")
    if np.any(r < 1):
        raise DomainError("ranks must be >= 1")
    return r


def mrr(ranks):
    return float(np.mean(1.0 / _ranks(ranks)))


def mean_rank(ranks):
    return float(np.mean(_ranks(ranks)))


def hits_at(ranks, k):
    if k < 1:
        raise DomainError("k must be >= 1")
    return float(np.mean(_ranks(ranks) <= k))


def auc(pos_scores, neg_scores):
    """Area under the ROC curve (the normalised Mann-Whitney rank-sum statistic)."""
    pos = np.asarray(pos_scores, dtype=np.float64).reshape(-1)
    neg = np.asarray(neg_scores, dtype=np.float64).reshape(-1)
    if pos.size == 0 or neg.size == 0:
        raise DomainError("AUC needs at least one positive and one negative score")
    y = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    return float(roc_auc_score(y, np.concatenate([pos, neg])))


def containment_accuracy(model, pairs):
    """Fraction of (sub, super) concept pairs whose boxes nest exactly."""
    if not pairs:
        raise DomainError("no pairs given")
    hits = [bool(box_contains(model.box(sup), model.box(sub))) for sub, sup in pairs]
    return float(np.mean(hits))


# ---------------------------------------------------------------- ranking


def _known_answers(model, records):
    known = {side: defaultdict(set) for side in SIDES}
    for side in SIDES:
        for key, ans in model.query_keys(records, side):
            known[side][key].add(ans)
    return known


def rank_records(model, records, filter_records=(), batch=256):
    """Raw and filtered head and tail ranks for every test record.

    Candidates known to be true in ``filter_records`` or in ``records`` are
    removed in the filtered setting.
    """
    known = _known_answers(model, list(filter_records) + list(records))
    out = []
    for side in SIDES:
        keys = model.query_keys(records, side)
        for start in range(0, len(records), batch):
            chunk = records[start : start + batch]
            scores = model.candidate_scores_for(chunk, side)
            for j, row in enumerate(scores):
                i = start + j
                key, ans = keys[i]
                out.append(
                    RankResult(
                        query=i,
                        relation=model.record_relation(records[i]),
                        side=side,
                        raw=filtered_rank(row, ans),
                        filtered=filtered_rank(row, ans, known[side][key]),
                    )
                )
    return out


def summarize(results, ks=(1, 3, 10)):
    filt = [r.filtered for r in results]
    raw = [r.raw for r in results]
    m = {"mrr": mrr(filt), "mr": mean_rank(filt), "raw_mrr": mrr(raw), "raw_mr": mean_rank(raw)}
    for k in ks:
        m[f"hits@{k}"] = hits_at(filt, k)
        m[f"raw_hits@{k}"] = hits_at(raw, k)
    m["n_queries"] = len(results)
    return m


def per_relation(results, ks=(1, 3, 10)):
    groups = defaultdict(list)
    for r in results:
        groups[r.relation].append(r)
    return {rel: summarize(rs, ks) for rel, rs in sorted(groups.items())}


def evaluate_ranking(model, records, filter_records=(), ks=(1, 3, 10)):
    """``(metrics, per-relation metrics)`` for link prediction on ``records``."""
    results = rank_records(model, records, filter_records)
    return summarize(results, ks), per_relation(results, ks)


def metrics_json(metrics):
    return json.dumps(metrics, sort_keys=True, indent=1) + "\n"


def per_relation_csv(table):
    buf = io.StringIO()
    if not table:
        return ""
    cols = sorted(next(iter(table.values())))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["relation"] + cols)
    for rel, row in table.items():
        w.writerow([rel] + [repr(row[c]) if isinstance(row[c], float) else row[c] for c in cols])
    return buf.getvalue()


# ------------------------------------------------------------ subsumption


def subsumption_ranking(model, test_axioms, filter_axioms=()):
    """Filtered ranks of the true superclass for each ``C ⊑ D`` test axiom over all concepts.

    Candidates are scored by ``MVol(C & D') / MVol(C)``; superclasses known
    from ``filter_axioms`` (and the other test axioms) are filtered out.
    """
    pairs = [(ax.c, ax.d) for ax in test_axioms if ax.form == "nf1" and "{" not in ax.c + ax.d]
    if not pairs:
        raise DomainError("no atomic C ⊑ D axioms to rank")
    idx = model.vocab_.concepts
    known = defaultdict(set)
    for ax in list(filter_axioms) + list(test_axioms):
        if ax.form == "nf1" and "{" not in ax.c + ax.d:
            known[ax.c].add(idx[ax.d])
    out = []
    for i, (c, d) in enumerate(pairs):
        scores = model.subsumption_scores(c)
        true_id = idx[d]
        out.append(RankResult(query=i, relation="subsumption", side="tail", raw=filtered_rank(scores, true_id), filtered=filtered_rank(scores, true_id, known[c])))
    return out


def subsumption_auc(model, test_axioms, rng, n_neg=1):
    """AUC of true test subsumptions against pairs with a random replacement superclass."""
    names = list(model.vocab_.concepts.names)
    pos, neg = [], []
    truth = {(ax.c, ax.d) for ax in test_axioms if ax.form == "nf1"}
    for ax in test_axioms:
        if ax.form != "nf1" or "{" in ax.c + ax.d:
            continue
        scores = model.subsumption_scores(ax.c)
        pos.append(scores[model.vocab_.concepts[ax.d]])
        for _ in range(n_neg):
            j = int(rng.integers(len(names)))
            if (ax.c, names[j]) not in truth and names[j] != ax.c:
                neg.append(scores[j])
    return auc(pos, neg)


def geometric_accuracy(model, axioms, tol=0.0):
    """Fraction of axioms whose geometric interpretation holds in the fitted model."""
    from .models.boxel import satisfies

    if not axioms:
        raise DomainError("no axioms given")
    return float(np.mean([satisfies(model, ax, tol) for ax in axioms]))
