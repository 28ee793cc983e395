"""Record types, the five text formats, vocabularies and sampling helpers.

Formats (UTF-8, tab separated, ``#`` comment lines and blank lines skipped):

* triples: ``h<TAB>r<TAB>t``
* hyper-relational facts: a triple followed by ``key<TAB>value`` pairs
* nested facts: ``h1,r1,t1<TAB>rel<TAB>h2,r2,t2``
* EL axioms: one JSON object per line with a ``form`` tag
* HEX graph: ``h<TAB>child<TAB>parent`` or ``e<TAB>a<TAB>b``
"""

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import DataFormatError, DomainError
from .poincare import HexGraph

INVERSE_SUFFIX = "__inv"


@dataclass(frozen=True)
class Triple:
    h: str
    r: str
    t: str
    line: Optional[int] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class HyperFact:
    triple: Triple
    qualifiers: tuple = ()
    line: Optional[int] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NestedTriple:
    head: Triple
    rel: str
    tail: Triple
    line: Optional[int] = field(default=None, compare=False, repr=False)


EL_FORMS = {
    "nf1": ("c", "d"),
    "nf2": ("c", "d", "e"),
    "nf3": ("c", "r", "d"),
    "nf4": ("r", "c", "d"),
    "nf1_bot": ("c",),
    "nf2_bot": ("c", "d"),
    "concept": ("c", "a"),
    "role": ("r", "a", "b"),
}


@dataclass(frozen=True)
class ElAxiom:
    """A normalised EL axiom.

    ``nf1`` C <= D, ``nf2`` C & D <= E, ``nf3`` C <= exists r.D, ``nf4``
    exists r.C <= D, ``nf1_bot`` C <= bottom, ``nf2_bot`` C & D <= bottom,
    ``concept`` C(a) and ``role`` r(a, b).  Nominals are written ``{a}``.
    """

    form: str
    c: Optional[str] = None
    d: Optional[str] = None
    e: Optional[str] = None
    r: Optional[str] = None
    a: Optional[str] = None
    b: Optional[str] = None
    line: Optional[int] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.form not in EL_FORMS:
            raise DomainError(f"unknown EL form {self.form!r}")
        for key in EL_FORMS[self.form]:
            val = getattr(self, key)
            if not isinstance(val, str) or not val:
                raise DomainError(f"EL form {self.form!r} requires a non-empty {key!r}")

    def fields(self):
        return {k: getattr(self, k) for k in EL_FORMS[self.form]}


@dataclass(frozen=True)
class HexEdge:
    kind: str
    a: str
    b: str
    line: Optional[int] = field(default=None, compare=False, repr=False)


def nominal_name(concept):
    """Return the individual inside a ``{a}`` nominal, or None."""
    if concept.startswith("{") and concept.endswith("}") and len(concept) > 2:
        return concept[1:-1]
    return None


# ------------------------------------------------------------------- reading


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield no, line


def _names(tokens, path, no):
    for tok in tokens:
        if not tok:
            raise DataFormatError("empty name", path, no)
    return tokens


def parse_triples(path):
    out = []
    for no, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataFormatError(f"expected 3 tab-separated fields, found {len(parts)}", path, no)
        out.append(Triple(*_names(parts, path, no), line=no))
    return out


def parse_hyper(path):
    out = []
    for no, line in _lines(path):
        parts = _names(line.split("\t"), path, no)
        if len(parts) < 3:
            raise DataFormatError(f"expected at least 3 fields, found {len(parts)}", path, no)
        rest = parts[3:]
        if len(rest) % 2:
            raise DataFormatError("odd number of qualifier tokens", path, no)
        quals = tuple((rest[i], rest[i + 1]) for i in range(0, len(rest), 2))
        out.append(HyperFact(Triple(*parts[:3]), quals, line=no))
    return out


def _inner_triple(text, path, no):
    parts = text.split(",")
    if len(parts) != 3:
        raise DataFormatError(f"inner triple {text!r} must have exactly 3 comma-separated names", path, no)
    return Triple(*_names(parts, path, no))


def parse_nested(path):
    out = []
    for no, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataFormatError(f"expected 3 tab-separated fields, found {len(parts)}", path, no)
        head, rel, tail = parts
        _names([rel], path, no)
        out.append(NestedTriple(_inner_triple(head, path, no), rel, _inner_triple(tail, path, no), line=no))
    return out


def parse_el_jsonl(path):
    out = []
    for no, line in _lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise DataFormatError(f"invalid JSON: {err.msg}", path, no) from None
        if not isinstance(obj, dict) or "form" not in obj:
            raise DataFormatError("record must be an object with a 'form' key", path, no)
        form = str(obj["form"]).lower()
        if form not in EL_FORMS:
            raise DataFormatError(f"unknown EL form {obj['form']!r}", path, no)
        extra = set(obj) - {"form"} - set(EL_FORMS[form])
        if extra:
            raise DataFormatError(f"unexpected keys for {form}: {sorted(extra)}", path, no)
        try:
            out.append(ElAxiom(form, **{k: obj.get(k) for k in EL_FORMS[form]}, line=no))
        except DomainError as err:
            raise DataFormatError(str(err), path, no) from None
    return out


def parse_hex_edges(path):
    out = []
    for no, line in _lines(path):
        parts = line.split("\t")
        if len(parts) != 3 or parts[0] not in ("h", "e"):
            raise DataFormatError("expected 'h<TAB>child<TAB>parent' or 'e<TAB>a<TAB>b'", path, no)
        _names(parts[1:], path, no)
        out.append(HexEdge(*parts, line=no))
    return out


def parse_hex(path):
    edges = parse_hex_edges(path)
    try:
        return HexGraph.from_edges(
            [(e.a, e.b) for e in edges if e.kind == "h"], [(e.a, e.b) for e in edges if e.kind == "e"]
        )
    except DomainError as err:
        raise DataFormatError(str(err), path) from None


# ------------------------------------------------------------------- writing


def _check_name(name, forbidden=("\t", "\n")):
    if not name or any(ch in name for ch in forbidden):
        raise DomainError(f"name {name!r} cannot be written in this format")
    return name


def write_triples(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for t in records:
            fh.write("\t".join(_check_name(x) for x in (t.h, t.r, t.t)) + "\n")


def write_hyper(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for f in records:
            toks = [f.triple.h, f.triple.r, f.triple.t] + [x for kv in f.qualifiers for x in kv]
            fh.write("\t".join(_check_name(x) for x in toks) + "\n")


def write_nested(records, path):
    bad = ("\t", "\n", ",")
    with open(path, "w", encoding="utf-8") as fh:
        for n in records:
            head = ",".join(_check_name(x, bad) for x in (n.head.h, n.head.r, n.head.t))
            tail = ",".join(_check_name(x, bad) for x in (n.tail.h, n.tail.r, n.tail.t))
            fh.write(f"{head}\t{_check_name(n.rel)}\t{tail}\n")


def write_el_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ax in records:
            fh.write(json.dumps({"form": ax.form, **ax.fields()}, sort_keys=True) + "\n")


def write_hex(graph, path):
    with open(path, "w", encoding="utf-8") as fh:
        for child, parent in graph.hierarchy:
            fh.write(f"h\t{_check_name(child)}\t{_check_name(parent)}\n")
        for a, b in graph.exclusion:
            fh.write(f"e\t{_check_name(a)}\t{_check_name(b)}\n")


# --------------------------------------------------------------- vocabulary


class Index:
    """A dense bijection between names and ids 0..n-1."""

    def __init__(self, names=()):
        self.names = []
        self.ids = {}
        for n in names:
            self.add(n)

    def add(self, name):
        if name not in self.ids:
            self.ids[name] = len(self.names)
            self.names.append(name)
        return self.ids[name]

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self.ids

    def __getitem__(self, name):
        try:
            return self.ids[name]
        except KeyError:
            raise KeyError(f"unknown name {name!r}") from None


NAMESPACES = ("entities", "relations", "nested_relations", "concepts", "roles")


class Vocab:
    """Name-to-id maps for every namespace used by the models."""

    def __init__(self, **namespaces):
        for ns in NAMESPACES:
            setattr(self, ns, Index(namespaces.get(ns, ())))

    @classmethod
    def build(cls, records, sort=True, extra=None):
        """Collect names from records; ``sort`` makes ids independent of record order."""
        buckets = {ns: [] for ns in NAMESPACES}

        def triple(t):
            buckets["entities"] += [t.h, t.t]
            buckets["relations"].append(t.r)

        for rec in records:
            if isinstance(rec, Triple):
                triple(rec)
            elif isinstance(rec, HyperFact):
                triple(rec.triple)
                for k, v in rec.qualifiers:
                    buckets["relations"].append(k)
                    buckets["entities"].append(v)
            elif isinstance(rec, NestedTriple):
                triple(rec.head)
                triple(rec.tail)
                buckets["nested_relations"].append(rec.rel)
            elif isinstance(rec, ElAxiom):
                f = rec.fields()
                for key in ("c", "d", "e"):
                    if key in f:
                        nom = nominal_name(f[key])
                        if nom is None:
                            buckets["concepts"].append(f[key])
                        else:
                            buckets["entities"].append(nom)
                if "r" in f:
                    buckets["roles"].append(f["r"])
                for key in ("a", "b"):
                    if key in f:
                        buckets["entities"].append(f[key])
            elif isinstance(rec, HexEdge):
                buckets["concepts"] += [rec.a, rec.b]
            else:
                raise TypeError(f"unsupported record type {type(rec).__name__}")
        for ns, names in (extra or {}).items():
            buckets[ns] += list(names)
        made = {}
        for ns, names in buckets.items():
            uniq = list(dict.fromkeys(names))
            made[ns] = sorted(uniq) if sort else uniq
        return cls(**made)

    def to_dict(self):
        return {ns: list(getattr(self, ns).names) for ns in NAMESPACES}

    @classmethod
    def from_dict(cls, d):
        return cls(**{ns: d.get(ns, []) for ns in NAMESPACES})


# ------------------------------------------------------------- augmentation


def inverse_relation(r):
    return r[: -len(INVERSE_SUFFIX)] if r.endswith(INVERSE_SUFFIX) else r + INVERSE_SUFFIX


def add_reciprocals(records):
    """Append ``(t, r__inv, h)`` for every triple (qualifiers are carried over)."""
    out = list(records)
    for rec in records:
        if isinstance(rec, Triple):
            out.append(Triple(rec.t, inverse_relation(rec.r), rec.h))
        elif isinstance(rec, HyperFact):
            t = rec.triple
            out.append(HyperFact(Triple(t.t, inverse_relation(t.r), t.h), rec.qualifiers))
        else:
            raise TypeError(f"reciprocals are defined for triples and hyper facts, not {type(rec).__name__}")
    return out


def _pick_other(rng, pool_size, current):
    """Uniform draw from range(pool_size) excluding ``current``."""
    j = int(rng.integers(pool_size - 1))
    return j + 1 if j >= current else j


def negative_sample(fact, vocab, n, rng, pool=None):
    """``n`` copies of ``fact`` with the head or the tail replaced by a different candidate.

    Triples and hyper facts draw from ``vocab.entities``; nested facts draw
    replacement triples from ``pool``; role assertions draw individuals.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if n == 0:
        return []
    if isinstance(fact, NestedTriple):
        cands = list(pool or [])
        index = {t: i for i, t in enumerate(cands)}
        if len(cands) < 2:
            raise DomainError("need at least two candidate triples to corrupt a nested fact")
        out = []
        for _ in range(n):
            if rng.random() < 0.5:
                new = cands[_pick_other(rng, len(cands), index.get(fact.head, -1))]
                out.append(NestedTriple(new, fact.rel, fact.tail))
            else:
                new = cands[_pick_other(rng, len(cands), index.get(fact.tail, -1))]
                out.append(NestedTriple(fact.head, fact.rel, new))
        return out
    ents = vocab.entities
    if len(ents) < 2:
        raise DomainError("need at least two entities to corrupt a fact")

    def other(name):
        return ents.names[_pick_other(rng, len(ents), ents.ids.get(name, -1))]

    out = []
    for _ in range(n):
        head_side = rng.random() < 0.5
        if isinstance(fact, Triple):
            out.append(Triple(other(fact.h), fact.r, fact.t) if head_side else Triple(fact.h, fact.r, other(fact.t)))
        elif isinstance(fact, HyperFact):
            t = fact.triple
            new = Triple(other(t.h), t.r, t.t) if head_side else Triple(t.h, t.r, other(t.t))
            out.append(HyperFact(new, fact.qualifiers))
        elif isinstance(fact, ElAxiom) and fact.form == "role":
            if head_side:
                out.append(ElAxiom("role", r=fact.r, a=other(fact.a), b=fact.b))
            else:
                out.append(ElAxiom("role", r=fact.r, a=fact.a, b=other(fact.b)))
        else:
            raise TypeError(f"cannot corrupt {type(fact).__name__}")
    return out
