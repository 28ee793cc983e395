import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from georel.data import (
    ElAxiom,
    HyperFact,
    NestedTriple,
    Triple,
    Vocab,
    add_reciprocals,
    negative_sample,
    parse_el_jsonl,
    parse_hex,
    parse_hyper,
    parse_nested,
    parse_triples,
    write_el_jsonl,
    write_hex,
    write_hyper,
    write_nested,
    write_triples,
)
from georel.errors import DataFormatError
from georel.synthetic import family_hex, family_kb

names = st.text(alphabet="abcdefgXYZ_019", min_size=1, max_size=6)
triples = st.builds(Triple, names, names, names)


def _write(tmp_path, text, name="f.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestParsing:
    def test_triple_line(self, tmp_path):
        (t,) = parse_triples(_write(tmp_path, "Einstein\teducated_at\tUZH\n"))
        assert t == Triple("Einstein", "educated_at", "UZH") and t.line == 1

    def test_hyper_line(self, tmp_path):
        (f,) = parse_hyper(_write(tmp_path, "Einstein\teducated_at\tUZH\tdegree\tPhD\tmajor\tphysics\n"))
        assert f.triple == Triple("Einstein", "educated_at", "UZH")
        assert f.qualifiers == (("degree", "PhD"), ("major", "physics"))

    def test_el_line(self, tmp_path):
        (ax,) = parse_el_jsonl(_write(tmp_path, '{"form":"nf3","c":"Parent","r":"hasChild","d":"Person"}\n'))
        assert ax == ElAxiom("nf3", c="Parent", r="hasChild", d="Person")

    def test_nested_line(self, tmp_path):
        (n,) = parse_nested(_write(tmp_path, "a,r,b\timplies\tb,r,a\n"))
        assert n == NestedTriple(Triple("a", "r", "b"), "implies", Triple("b", "r", "a"))

    def test_comments_and_blanks(self, tmp_path):
        out = parse_triples(_write(tmp_path, "# header\n\na\tr\tb\n  \nc\tr\td\n"))
        assert [t.line for t in out] == [3, 5]

    @pytest.mark.parametrize(
        "parser,text,line",
        [
            (parse_triples, "a\tr\tb\na\tr\n", 2),
            (parse_triples, "a\t\tb\n", 1),
            (parse_hyper, "a\tr\tb\tk\n", 1),
            (parse_nested, "a,r\tn\tb,r,a\n", 1),
            (parse_el_jsonl, '{"form":"nf9","c":"A"}\n', 1),
            (parse_el_jsonl, '{"form":"nf1","c":"A"}\n', 1),
            (parse_el_jsonl, '\n{"form":"nf1","c":"A","d":"B","x":1}\n', 2),
            (parse_el_jsonl, "{not json\n", 1),
            (parse_hex, "h\ta\tb\nx\ta\tb\n", 2),
        ],
    )
    def test_errors_carry_line(self, tmp_path, parser, text, line):
        with pytest.raises(DataFormatError) as err:
            parser(_write(tmp_path, text))
        assert err.value.line == line
        assert f":{line}" in str(err.value)

    def test_hex_cycle(self, tmp_path):
        with pytest.raises(DataFormatError):
            parse_hex(_write(tmp_path, "h\ta\tb\nh\tb\ta\n"))


class TestRoundTrips:
    @given(st.lists(triples, max_size=8))
    def test_triples(self, tmp_path_factory, recs):
        p = tmp_path_factory.mktemp("t") / "t.tsv"
        write_triples(recs, p)
        assert parse_triples(p) == recs

    @given(st.lists(st.builds(HyperFact, triples, st.lists(st.tuples(names, names), max_size=3).map(tuple)), max_size=6))
    def test_hyper(self, tmp_path_factory, recs):
        p = tmp_path_factory.mktemp("h") / "h.tsv"
        write_hyper(recs, p)
        assert parse_hyper(p) == recs

    @given(st.lists(st.builds(NestedTriple, triples, names, triples), max_size=6))
    def test_nested(self, tmp_path_factory, recs):
        p = tmp_path_factory.mktemp("n") / "n.tsv"
        write_nested(recs, p)
        assert parse_nested(p) == recs

    def test_el(self, tmp_path):
        recs = family_kb() + [ElAxiom("role", r="hasChild", a="Alex", b="Bob"), ElAxiom("nf1_bot", c="C")]
        write_el_jsonl(recs, tmp_path / "kb.jsonl")
        assert parse_el_jsonl(tmp_path / "kb.jsonl") == recs
        first = json.loads((tmp_path / "kb.jsonl").read_text().splitlines()[0])
        assert first == {"form": "nf1", "c": "Male", "d": "Person"}

    def test_hex(self, tmp_path):
        g = family_hex()
        write_hex(g, tmp_path / "g.tsv")
        again = parse_hex(tmp_path / "g.tsv")
        assert again.hierarchy == g.hierarchy and again.exclusion == g.exclusion and sorted(again.labels) == sorted(g.labels)


class TestReciprocals:
    def test_empty(self):
        assert add_reciprocals([]) == []

    def test_single(self):
        out = add_reciprocals([Triple("a", "r", "b")])
        assert out == [Triple("a", "r", "b"), Triple("b", "r__inv", "a")]

    @given(st.lists(triples, unique=True, max_size=10))
    def test_duplicate_free(self, recs):
        recs = [t for t in recs if not t.r.endswith("__inv")]
        out = add_reciprocals(recs)
        assert len(set(out)) == len(out) == 2 * len(recs)


class TestNegatives:
    def vocab(self):
        return Vocab.build([Triple(f"e{i}", "r", f"e{i + 1}") for i in range(10)])

    def test_zero(self):
        assert negative_sample(Triple("e0", "r", "e1"), self.vocab(), 0, np.random.default_rng(0)) == []

    def test_corrupts_one_side(self):
        fact = Triple("e0", "r", "e1")
        for neg in negative_sample(fact, self.vocab(), 50, np.random.default_rng(3)):
            assert neg.r == "r" and (neg.h == "e0") != (neg.t == "e1")

    def test_deterministic(self):
        f = HyperFact(Triple("e0", "r", "e1"), (("k", "e3"),))
        a = negative_sample(f, self.vocab(), 20, np.random.default_rng(7))
        b = negative_sample(f, self.vocab(), 20, np.random.default_rng(7))
        assert repr(a) == repr(b)

    def test_nested_pool(self):
        pool = [Triple("a", "r", "b"), Triple("b", "r", "a"), Triple("c", "r", "a")]
        fact = NestedTriple(pool[0], "n", pool[1])
        for neg in negative_sample(fact, None, 20, np.random.default_rng(1), pool=pool):
            assert (neg.head != fact.head) != (neg.tail != fact.tail)


class TestVocab:
    @given(st.lists(triples, min_size=1, max_size=10), st.randoms(use_true_random=False))
    def test_order_independent(self, recs, rnd):
        shuffled = list(recs)
        rnd.shuffle(shuffled)
        assert Vocab.build(recs).to_dict() == Vocab.build(shuffled).to_dict()

    @given(st.lists(triples, max_size=10))
    def test_dense_bijection(self, recs):
        v = Vocab.build(recs)
        for ns in ("entities", "relations"):
            idx = getattr(v, ns)
            assert sorted(idx.ids.values()) == list(range(len(idx)))
            assert all(idx.names[i] == n for n, i in idx.ids.items())

    def test_el_namespaces(self):
        v = Vocab.build([ElAxiom("nf3", c="{a}", r="r", d="D"), ElAxiom("concept", c="C", a="b")])
        assert v.entities.names == ["a", "b"] and v.concepts.names == ["C", "D"] and v.roles.names == ["r"]

    def test_dict_round_trip(self):
        v = Vocab.build(family_kb())
        assert Vocab.from_dict(v.to_dict()).to_dict() == v.to_dict()
