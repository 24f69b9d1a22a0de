import itertools
import random

import pytest

from hypersetdb.analysis import analyze, expand_library
from hypersetdb.bisim import FactStore, naive_bisimulation
from hypersetdb.evaluator import Evaluator, QueryResult, postprocess
from hypersetdb.library import PREDEFINED_DECLARATIONS
from hypersetdb.names import Element, EquationSystem, SetName
from hypersetdb.parser import parse
from hypersetdb.store import MemoryFetcher, SessionStore

from conftest import bibdb_f1_text, bibdb_f2_text

F1 = "mem://BibDB-f1.xml"
F2 = "mem://BibDB-f2.xml"


def make_evaluator(documents=None) -> Evaluator:
    store = SessionStore(MemoryFetcher(documents or {}))
    return Evaluator(store, library_sources=PREDEFINED_DECLARATIONS)


def run(evaluator: Evaluator, source: str) -> QueryResult:
    expanded = expand_library(source, PREDEFINED_DECLARATIONS)
    tree = analyze(parse(expanded))
    return evaluator.eval_query(tree)


def bibdb_evaluator() -> Evaluator:
    return make_evaluator({F1: bibdb_f1_text(F1, F2), F2: bibdb_f2_text(F1, F2)})


def elements_of(evaluator: Evaluator, result: QueryResult):
    return evaluator.store.system[result.root]


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

def test_empty_set_query():
    ev = make_evaluator()
    result = run(ev, "set query {} ;")
    assert elements_of(ev, result) == []


def test_enumeration_and_atoms():
    ev = make_evaluator()
    result = run(ev, 'set query { \'name\':"Jack", \'null\':{} };')
    elements = elements_of(ev, result)
    assert [el.label for el in elements] == ["name", "null"]
    atom = ev.store.system[elements[0].member]
    assert len(atom) == 1 and atom[0].label == "Jack"
    assert ev.store.system[atom[0].member] == []


def test_atoms_are_reused_within_the_session():
    ev = make_evaluator()
    first = run(ev, 'set query { \'a\':"X" };')
    second = run(ev, 'set query { \'b\':"X" };')
    a = elements_of(ev, first)[0].member
    b = elements_of(ev, second)[0].member
    assert a == b


def test_union_law_union_of_singleton_is_identity():
    ev = make_evaluator()
    result = run(ev, "set query let set constant s = { 'a':{}, 'b':{} } in "
                     "union { 'l':s } endlet;")
    rhs = elements_of(ev, result)
    assert sorted(el.label for el in rhs) == ["a", "b"]


def test_multiple_union_concatenates_right_hand_sides():
    ev = make_evaluator()
    result = run(ev, "set query ( { 'a':{} } U { 'b':{} } U { 'c':{} } );")
    assert sorted(el.label for el in elements_of(ev, result)) == ["a", "b", "c"]


def test_if_else_term_evaluates_selected_branch_only():
    ev = make_evaluator()
    result = run(ev, "set query if true then { 'a':{} } else "
                     "http://nowhere/missing.xml#x fi;")
    assert [el.label for el in elements_of(ev, result)] == ["a"]
    # the dead branch would have required a fetch of a missing document
    assert ev.store.fetcher.fetch_count == 0


def test_declarations_bind_in_order():
    ev = make_evaluator()
    result = run(ev, "set query let set constant a = { 'x':{} }, "
                     "set constant b = a in b endlet;")
    assert [el.label for el in elements_of(ev, result)] == ["x"]


def test_query_call_binds_parameters():
    ev = make_evaluator()
    result = run(ev, "set query call Pair({ 'a':{} }, {});")
    labels = sorted(el.label for el in elements_of(ev, result))
    assert labels == ["fst", "snd"]


# ---------------------------------------------------------------------------
# Label relations
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("query,expected", [
    ("boolean query 'Robert' = 'Rob*';", True),
    ("boolean query 'Robert' = 'Rob';", False),
    ("boolean query 'Databases' = '*base*';", True),
    ("boolean query '*base*' = 'Databases';", True),
    ("boolean query 'Jones' = '*s';", True),
    ("boolean query 'Jones' = '*x';", False),
    ("boolean query 'book' < 'paper';", True),
    ("boolean query 'paper' < 'book';", False),
    ("boolean query 'a' <= 'a';", True),
    ("boolean query 'b' >= 'c';", False),
])
def test_label_relations(query, expected):
    ev = make_evaluator()
    assert run(ev, query).boolean is expected


def test_wildcard_substring_agrees_with_independent_search():
    ev = make_evaluator()
    rng = random.Random(3)
    alphabet = "abc"
    for _ in range(40):
        hay = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 6)))
        needle = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 3)))
        result = run(ev, "boolean query '%s' = '*%s*';" % (hay, needle))
        # independent check: brute-force window scan
        found = any(hay[i:i + len(needle)] == needle
                    for i in range(len(hay) - len(needle) + 1))
        assert result.boolean is found


def test_label_variable_wildcard():
    ev = make_evaluator()
    assert run(ev, "boolean query let label constant l='Rob' in "
                   "'Robert' = l* endlet;").boolean is True


# ---------------------------------------------------------------------------
# Connectives and quantifiers
# ---------------------------------------------------------------------------

def test_conjunction_short_circuits():
    ev = bibdb_evaluator()
    # false and <fetching formula>: must not fetch
    assert run(ev, "boolean query (false and "
                   "'l':{} in http://nowhere/x.xml#y);").boolean is False
    assert ev.store.fetcher.fetch_count == 0


def test_disjunction_negation_duality():
    ev = make_evaluator()
    for a in ("true", "false"):
        for b in ("true", "false"):
            direct = run(ev, "boolean query (%s or %s);" % (a, b)).boolean
            rewritten = run(ev, "boolean query not (not %s and not %s);"
                            % (a, b)).boolean
            assert direct == rewritten


def test_quasi_implication_chain_is_left_associative():
    ev = make_evaluator()
    # (false => false <=> true) reads ((false => false) <=> true) = true
    assert run(ev, "boolean query (false => false <=> true);").boolean is True
    # right-associative reading would be (false => (false <=> true)) = true,
    # distinguish with a different chain:
    # (true <=> false => false): left = ((true <=> false) => false) = true
    assert run(ev, "boolean query (true <=> false => false);").boolean is True


def test_quantifier_duality():
    ev = make_evaluator()
    source_exists = ("boolean query let set constant s = { 'a':{}, 'b':{} } in "
                     "exists l:x in s . l='a' endlet;")
    source_forall = ("boolean query let set constant s = { 'a':{}, 'b':{} } in "
                     "not forall l:x in s . not l='a' endlet;")
    assert run(ev, source_exists).boolean is run(ev, source_forall).boolean is True


def test_membership_uses_bisimulation(bibdb=None):
    ev = bibdb_evaluator()
    # 'refers-to':b2 in p2 holds because p3 = b2
    source = ("boolean query 'refers-to':%s#b2 in %s#p2;" % (F1, F2))
    assert run(ev, source).boolean is True
    assert run(ev, "boolean query 'l':{} in {};").boolean is False


def test_membership_invariant_under_duplication():
    ev = make_evaluator()
    base = "boolean query 'l':{ 'a':{} } in { 'l':{ 'a':{} }, 'm':{} };"
    dup = ("boolean query 'l':{ 'a':{} } in "
           "{ 'm':{}, 'l':{ 'a':{} }, 'l':{ 'a':{} }, 'm':{} };")
    assert run(ev, base).boolean is run(ev, dup).boolean is True


# ---------------------------------------------------------------------------
# Separation / collection / recursion / TC
# ---------------------------------------------------------------------------

def test_separate_keeps_passing_elements_verbatim():
    ev = bibdb_evaluator()
    source = ("set query separate { pub:p in %s#BibDB where pub='book' };" % F1)
    result = run(ev, source)
    elements = elements_of(ev, result)
    assert [el.label for el in elements] == ["book", "book"]
    assert {el.member.simple for el in elements} == {"b1", "b2"}


def test_separate_false_and_true_conditions():
    ev = make_evaluator()
    empty = run(ev, "set query let set constant t = { 'a':{}, 'b':{} } in "
                    "separate { l:x in t where false } endlet;")
    assert elements_of(ev, empty) == []
    everything = run(ev, "set query let set constant t = { 'a':{}, 'b':{} } in "
                         "separate { l:x in t where true } endlet;")
    assert sorted(el.label for el in elements_of(ev, everything)) == ["a", "b"]


def test_collect_identity_template_is_bisimilar_to_source():
    ev = make_evaluator()
    result = run(ev, "set query let set constant t = { 'a':{}, 'b':{ 'c':{} } } in "
                     "collect { l:x where l:x in t } endlet;")
    source_again = run(ev, "set query { 'a':{}, 'b':{ 'c':{} } };")
    assert ev.equal(result.root, source_again.root)


def test_cartproduct_of_singletons():
    ev = make_evaluator()
    result = run(ev, "set query call CartProduct({ 'l':{} }, "
                     "{ 'm':{ 'a':{} }, 'n':{ 'b':{} } });")
    elements = elements_of(ev, result)
    assert len(elements) == 2
    # all elements are pairs, pairwise non-bisimilar
    for el in elements:
        labels = sorted(e.label for e in ev.store.system[el.member])
        assert labels == ["fst", "snd"]
    assert not ev.equal(elements[0].member, elements[1].member)


def test_recursion_without_p_is_single_pass_separation():
    ev = make_evaluator()
    rec = run(ev, "set query let set constant t = { 'a':{}, 'b':{} } in "
                  "recursion p { l:x in t where l='a' } endlet;")
    assert [el.label for el in elements_of(ev, rec)] == ["a"]


def test_recursion_stabilizes_on_literal_comparison():
    # closure of 'reaches a' in a two-step chain encoded through membership
    ev = make_evaluator()
    source = ("set query let set constant t = { 'a':{}, 'b':{ 'a':{} } } in "
              "recursion p { l:x in t where "
              "( l='a' or exists m:y in p . 'a':y in t ) } endlet;")
    result = run(ev, source)
    assert sorted(el.label for el in elements_of(ev, result)) == ["a", "b"]


def test_tc_of_empty_is_singleton_self():
    ev = make_evaluator()
    result = run(ev, "set query TC {};")
    elements = elements_of(ev, result)
    assert len(elements) == 1
    assert elements[0].label == "null"
    assert ev.store.system[elements[0].member] == []


def test_tc_terminates_on_cycles():
    ev = make_evaluator()
    result = run(ev, 'set query let set constant g = '
                     '{ \'null\':call Pair("a","a") } in '
                     "TC decorate (g, \"a\") endlet;")
    elements = elements_of(ev, result)
    # omega = {omega}: TC(omega) = {null:omega} only
    assert len({el.member for el in elements}) == 1


def test_tc_of_bibdb_has_nine_distinct_sets(bibdb=None):
    ev = bibdb_evaluator()
    result = run(ev, "set query TC %s#BibDB;" % F1)
    members = {el.member for el in elements_of(ev, result)}
    classes = []
    for member in members:
        if not any(ev.equal(member, seen) for seen in classes):
            classes.append(member)
    assert len(classes) == 9


# ---------------------------------------------------------------------------
# Decoration
# ---------------------------------------------------------------------------

FIVE_EDGE_GRAPH = ("let set constant g = { "
                   "'null':call Pair(\"a\",\"b\"), 'null':call Pair(\"b\",\"a\"), "
                   "'null':call Pair(\"a\",\"c\"), 'null':call Pair(\"a\",\"d\"), "
                   "'null':call Pair(\"b\",\"d\") } in %s endlet;")


def test_decorate_trivial_cycle_gives_omega():
    ev = make_evaluator()
    result = run(ev, 'set query let set constant g = '
                     '{ \'null\':call Pair("a","a") } in decorate (g, "a") endlet;')
    elements = elements_of(ev, result)
    assert len(elements) == 1
    assert elements[0].member == result.root  # literally self-referential


def test_decorate_five_edge_graph_structure():
    ev = make_evaluator()
    result = run(ev, "set query " + FIVE_EDGE_GRAPH % 'decorate (g, "a")')
    a = elements_of(ev, result)
    assert len(a) == 3
    # children: one two-element node (b) and two empty nodes (c, d)
    kinds = sorted(len(ev.store.system[el.member]) for el in a)
    assert kinds == [0, 0, 2]
    b = next(el.member for el in a if len(ev.store.system[el.member]) == 2)
    b_children = {el.member for el in ev.store.system[b]}
    assert result.root in b_children  # the a <-> b cycle survives


def test_decorate_equality_a_b_is_true():
    ev = make_evaluator()
    result = run(ev, "boolean query " +
                 FIVE_EDGE_GRAPH % 'decorate (g, "a") = decorate (g, "b")')
    assert result.boolean is True


def test_decorate_of_isolated_vertex_is_empty():
    ev = make_evaluator()
    result = run(ev, 'set query decorate ({}, { \'v\':{} });')
    assert elements_of(ev, result) == []


def test_can_collapses_redundancies():
    ev = make_evaluator()
    result = run(ev, "set query " + FIVE_EDGE_GRAPH % 'call Can ( decorate (g, "a") )')
    elements = elements_of(ev, result)
    assert len(elements) == 2
    members = {el.member for el in elements}
    assert result.root in members  # omega' = {omega', {}}
    other = next(m for m in members if m != result.root)
    assert ev.store.system[other] == []


def test_can_is_idempotent_and_preserves_value():
    ev = make_evaluator()
    first = run(ev, "set query " + FIVE_EDGE_GRAPH % 'call Can ( decorate (g, "a") )')
    again = run(ev, "set query call Can ( %s );" % first.root.full)
    assert ev.equal(first.root, again.root)

    def canonical_shape(root):
        reachable = sorted(ev.store.system.reachable(root), key=lambda n: n.full)
        index = {n: i for i, n in enumerate(reachable)}
        return sorted(
            (index[n], sorted((el.label, index[el.member])
                              for el in ev.store.system[n]))
            for n in reachable)

    # literally equal up to renaming: compare canonical adjacency shapes
    assert len(ev.store.system.reachable(first.root)) == \
        len(ev.store.system.reachable(again.root))
    # both strongly extensional
    for root in (first.root, again.root):
        reachable = list(ev.store.system.reachable(root))
        for x, y in itertools.combinations(reachable, 2):
            assert not ev.equal(x, y)


# ---------------------------------------------------------------------------
# Bisimulation invariance of evaluation
# ---------------------------------------------------------------------------

def test_query_results_invariant_under_store_presentation():
    from conftest import duplicate_and_shuffle, random_closed_system
    rng = random.Random(99)
    for trial in range(10):
        url = "mem://inv%d.xml" % trial
        system = random_closed_system(rng, max_names=8, max_labels=2, url=url)
        twin, mapping = duplicate_and_shuffle(system, rng,
                                              url="mem://inv%dt.xml" % trial)
        root = next(iter(system.equations))
        ev = make_evaluator()
        ev.store.system.merge(system)
        ev.store.system.merge(twin)
        q = "set query separate { l:x in %s where ('l0':x in %s or x=x) };"
        r1 = run(ev, q % (root.full, root.full))
        r2 = run(ev, q % (mapping[root].full, mapping[root].full))
        assert ev.equal(r1.root, r2.root)
        b1 = run(ev, "boolean query exists l:x in %s . 'l0':x in %s;"
                 % (root.full, root.full)).boolean
        b2 = run(ev, "boolean query exists l:x in %s . 'l0':x in %s;"
                 % (mapping[root].full, mapping[root].full)).boolean
        assert b1 == b2


# ---------------------------------------------------------------------------
# Output rendering
# ---------------------------------------------------------------------------

def test_postprocess_inlines_single_use_acyclic_names():
    ev = make_evaluator()
    result = run(ev, "set query { 'a':{ 'b':{}, 'c':{} } };")
    text = postprocess(result, ev.store)
    assert text == "Result = {'a':{'b':{}, 'c':{}}}"


def test_postprocess_resugars_atom_shaped_brackets():
    # any {X:{}} member prints as the atomic value "X"
    ev = make_evaluator()
    result = run(ev, "set query { 'a':{ 'b':{} } };")
    text = postprocess(result, ev.store)
    assert text == 'Result = {\'a\':"b"}' 


def test_postprocess_resugars_atoms():
    ev = make_evaluator()
    result = run(ev, 'set query { \'name\':"Jack" };')
    text = postprocess(result, ev.store)
    assert text == 'Result = {\'name\':"Jack"}'


def test_postprocess_renders_cycles_by_name():
    ev = make_evaluator()
    result = run(ev, 'set query let set constant g = '
                     '{ \'null\':call Pair("a","a") } in decorate (g, "a") endlet;')
    text = postprocess(result, ev.store)
    assert text == "Result = {'null':Result}"


def test_postprocess_keeps_multereferenced_names_below():
    ev = make_evaluator()
    result = run(ev, "set query let set constant shared = { 'x':{}, 'y':{} } in "
                     "{ 'p':shared, 'q':shared } endlet;")
    text = postprocess(result, ev.store)
    lines = text.splitlines()
    assert lines[0].startswith("Result = {'p':res")
    assert any(line.startswith("res") and "'x':{}" in line and "'y':{}" in line
               for line in lines)


def test_postprocess_timing_line():
    ev = make_evaluator()
    result = run(ev, "set query {};")
    text = postprocess(result, ev.store, elapsed_ms=12)
    assert text.endswith("Finished in: 12 ms")


def test_postprocess_boolean():
    ev = make_evaluator()
    assert postprocess(QueryResult(boolean=True), ev.store) == "Result = true"


def test_recursion_iteration_count_is_bounded_by_source_size():
    # each stage allocates one named iterate; stages <= |t| + 1
    ev = make_evaluator()
    result = run(ev, "set query let set constant t = "
                     "{ 'a':{}, 'b':{}, 'c':{} } in "
                     "recursion q { l:x in t where "
                     "(l='a' or exists m:y in q . true) } endlet;")
    stages = [n for n in ev.store.system.equations
              if n.is_local() and (n.simple == "q" or n.simple.startswith("q"))]
    assert 1 <= len(stages) <= 4
    assert sorted(el.label for el in elements_of(ev, result)) == ["a", "b", "c"]
