import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from hypersetdb.bisim import (
    BisimHelpers, BisimulationError, FactStore, OracleValue, Status,
    bisimilar, derive_round, naive_bisimulation, naive_equal, pair_key,
    strongly_extensional,
)
from hypersetdb.names import Element, EquationSystem, SetName
from hypersetdb.store import MemoryFetcher, SessionStore

from conftest import bibdb_f1_text, bibdb_f2_text, random_closed_system

F1 = "mem://BibDB-f1.xml"
F2 = "mem://BibDB-f2.xml"


def closed_session(system: EquationSystem) -> SessionStore:
    store = SessionStore(MemoryFetcher({}))
    store.system.merge(system)
    return store


def simple_system(url="mem://s.xml", **equations) -> EquationSystem:
    """equations: name -> list of (label, name) pairs."""
    system = EquationSystem()
    for name, elements in equations.items():
        system.define(SetName(url, name),
                      [Element(l, SetName(url, m)) for l, m in elements])
    return system


# -- the worked example: x={y,z}, x'={z,y,z}, z={}, y={x}, y'={x'} ------------

def example_24() -> EquationSystem:
    return simple_system(
        x=[("null", "y"), ("null", "z")],
        xp=[("null", "z"), ("null", "y"), ("null", "z")],
        z=[],
        y=[("null", "x")],
        yp=[("null", "xp")],
    )


def test_order_and_repetition_are_ignored():
    system = example_24()
    store = closed_session(system)
    facts = FactStore()
    url = "mem://s.xml"
    assert bisimilar(SetName(url, "x"), SetName(url, "xp"), store, facts)
    assert bisimilar(SetName(url, "y"), SetName(url, "yp"), store, facts)
    assert not bisimilar(SetName(url, "x"), SetName(url, "z"), store, facts)


def test_naive_oracle_blocks_on_example():
    blocks = naive_bisimulation(example_24())
    url = "mem://s.xml"
    assert blocks[SetName(url, "x")] == blocks[SetName(url, "xp")]
    assert blocks[SetName(url, "y")] == blocks[SetName(url, "yp")]
    assert len(set(blocks.values())) == 3  # {x,x'}, {y,y'}, {z}


def test_empty_vs_nonempty_is_negative():
    system = simple_system(omega=[("null", "omega")], e=[])
    store = closed_session(system)
    assert not bisimilar(SetName("mem://s.xml", "omega"), SetName("mem://s.xml", "e"),
                         store, FactStore())


def test_cyclic_selfsets_are_postulated_equal():
    system = simple_system(o1=[("null", "o1")], o2=[("null", "o2")])
    store = closed_session(system)
    assert bisimilar(SetName("mem://s.xml", "o1"), SetName("mem://s.xml", "o2"),
                     store, FactStore())


# -- derive_round -------------------------------------------------------------

def test_derive_round_base_cases():
    system = simple_system(a=[], b=[], c=[("l", "a")], d=[("m", "a")])
    url = "mem://s.xml"
    facts = FactStore()
    facts.ask_question(SetName(url, "a"), SetName(url, "b"))
    facts.ask_question(SetName(url, "c"), SetName(url, "d"))
    assert derive_round(facts, system)
    assert facts.get(SetName(url, "a"), SetName(url, "b")) is Status.YES
    # label mismatch: negative
    assert facts.get(SetName(url, "c"), SetName(url, "d")) is Status.NO


def test_derive_round_transitivity():
    system = simple_system(a=[], b=[], c=[])
    url = "mem://s.xml"
    a, b, c = (SetName(url, n) for n in "abc")
    facts = FactStore()
    facts.ask_question(a, c)
    facts.resolve(a, b, True)
    facts.resolve(b, c, True)
    assert derive_round(facts, system)
    assert facts.get(a, c) is Status.YES


def test_facts_are_monotone():
    facts = FactStore()
    url = "mem://s.xml"
    a, b = SetName(url, "a"), SetName(url, "b")
    facts.ask_question(a, b)
    facts.resolve(a, b, True)
    with pytest.raises(BisimulationError):
        facts.resolve(a, b, False)
    assert facts.get(b, a) is Status.YES  # symmetric by representation


# -- BibDB ground truth ---------------------------------------------------------

@pytest.fixture
def bibdb_store():
    fetcher = MemoryFetcher({F1: bibdb_f1_text(F1, F2), F2: bibdb_f2_text(F1, F2)})
    return SessionStore(fetcher), fetcher


def bibdb_names():
    return [SetName(F1, "BibDB"), SetName(F1, "b1"), SetName(F1, "b2"),
            SetName(F2, "p1"), SetName(F2, "p2"), SetName(F2, "p3")]


def test_bibdb_only_positive_pair_is_b2_p3(bibdb_store):
    store, _ = bibdb_store
    facts = FactStore()
    names = bibdb_names()
    positive = [(x, y) for x, y in itertools.combinations(names, 2)
                if bisimilar(x, y, store, facts)]
    assert positive == [(SetName(F1, "b2"), SetName(F2, "p3"))]
    assert len(list(itertools.combinations(names, 2))) == 15


def test_bisimilar_is_lazy_about_fetching(bibdb_store):
    store, fetcher = bibdb_store
    facts = FactStore()
    # p2 ? p3 touches only file 2
    assert not bisimilar(SetName(F2, "p2"), SetName(F2, "p3"), store, facts)
    assert set(fetcher.fetched) == {F2}


def test_resolved_facts_persist_for_the_session(bibdb_store):
    store, fetcher = bibdb_store
    facts = FactStore()
    assert bisimilar(SetName(F1, "b2"), SetName(F2, "p3"), store, facts)
    count = fetcher.fetch_count
    assert bisimilar(SetName(F1, "b2"), SetName(F2, "p3"), store, facts)
    assert fetcher.fetch_count == count


# -- oracle integration -----------------------------------------------------------

def test_oracle_answer_skips_downloads(bibdb_store):
    store, fetcher = bibdb_store

    def oracle(x, y):
        return OracleValue.YES if {x.simple, y.simple} == {"b2", "p3"} \
            else OracleValue.UNKNOWN

    facts = FactStore()
    helpers = BisimHelpers(oracle=oracle)
    assert bisimilar(SetName(F1, "b2"), SetName(F2, "p3"), store, facts, helpers)
    assert fetcher.fetch_count == 0


def test_helper_disagreement_with_local_facts_is_a_hard_error(bibdb_store):
    store, _ = bibdb_store
    facts = FactStore()
    # resolve b2 = p3 locally first ...
    assert bisimilar(SetName(F1, "b2"), SetName(F2, "p3"), store, facts)

    # ... then feed a contradicting "approximation" fact during a later call
    def lying_reader(url):
        return [(SetName(F1, "b2"), SetName(F2, "p3"), False)]

    helpers = BisimHelpers(approx_reader=lying_reader)
    with pytest.raises(BisimulationError):
        bisimilar(SetName(F1, "BibDB"), SetName(F2, "p1"), store, facts, helpers)


# -- agreement with the brute-force oracle -----------------------------------------

def test_bisimilar_agrees_with_naive_on_random_systems():
    rng = random.Random(42)
    for trial in range(60):
        system = random_closed_system(rng, max_names=12)
        blocks = naive_bisimulation(system)
        store = closed_session(system)
        facts = FactStore()
        names = list(system.equations)
        for x, y in itertools.combinations(names, 2):
            assert bisimilar(x, y, store, facts) == (blocks[x] == blocks[y]), \
                "disagreement on trial %d: %s ? %s" % (trial, x.full, y.full)


def test_strongly_extensional_systems_have_singleton_blocks():
    system = simple_system(a=[], b=[("l", "a")], c=[("m", "a")])
    assert strongly_extensional(system)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 9))
def test_yes_facts_form_an_equivalence_after_saturation(seed):
    rng = random.Random(seed)
    system = random_closed_system(rng, max_names=10)
    store = closed_session(system)
    facts = FactStore()
    names = list(system.equations)
    for x, y in itertools.combinations(names, 2):
        bisimilar(x, y, store, facts)
    yes = {p for p, s in facts.status.items() if s is Status.YES}
    members = {n for p in yes for n in p}
    for a, b in yes:
        assert pair_key(b, a) in yes  # symmetric by construction
    for a in members:
        for b in members:
            for c in members:
                if a == b or b == c or a == c:
                    continue
                if pair_key(a, b) in yes and pair_key(b, c) in yes:
                    assert pair_key(a, c) in yes
