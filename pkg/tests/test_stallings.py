import math

import pytest
from hypothesis import given, settings, strategies as st

from freecensus.enumeration import enumerate_orbit_reps
from freecensus.stallings import (
    PreconditionError,
    StallingsGraph,
    contains_loop,
    express_in_basis,
    fold,
    graph_rank,
    imprimitivity_rank,
    is_subgroup,
    subgroup_graph,
    w_subgroups,
)
from freecensus.whitehead import WhiteheadFirstKind, enumerate_second_kind, apply
from freecensus.words import format_word, multiply, parse_word, power

import oracles


def w(s):
    return parse_word(s)


def test_fold_merges_parallel_loops():
    g = fold(1, [(0, 0, 1), (0, 0, 1)])
    assert g.num_vertices == 1 and len(g.edges) == 1


def test_subgroup_graph_membership():
    g = subgroup_graph([w("aa"), w("ab")])
    assert graph_rank(g) == 2
    assert contains_loop(g, w("abaa"))
    assert contains_loop(g, w("bA")) is False
    assert contains_loop(g, w("Ba"))
    assert contains_loop(g, w("b")) is False
    assert contains_loop(g, w("aaab"))


def test_express_in_basis_is_consistent():
    g = subgroup_graph([w("aa"), w("bab")])
    basis = g.basis_words()
    x = w("aababaa")
    expr = express_in_basis(g, x)
    raw = []
    for y in expr:
        raw.extend(basis[y - 1] if y > 0 else tuple(-z for z in reversed(basis[-y - 1])))
    assert multiply(raw) == x
    with pytest.raises(PreconditionError):
        express_in_basis(g, w("b"))


def test_text_round_trip():
    g = subgroup_graph([w("ab"), w("ba")])
    assert StallingsGraph.from_text(g.to_text()) == g


def test_subgroup_relation():
    assert is_subgroup(subgroup_graph([w("aa")]), subgroup_graph([w("a")]))
    assert not is_subgroup(subgroup_graph([w("a")]), subgroup_graph([w("aa")]))


@pytest.mark.parametrize("word,value", [
    ("", 0), ("aa", 1), ("abab", 1), ("ab", math.inf), ("abAB", 2), ("aabb", 2),
    ("aabbcc", 3), ("abcABC", 2), ("aabbcAbC", 3), ("aaabbbccc", 3), ("abcabcACB", 2),
])
def test_irank_values(word, value):
    assert imprimitivity_rank(w(word)).value == value
    assert imprimitivity_rank(w(word), witnesses=False).value == value


def test_commutator_has_one_witness():
    rep = imprimitivity_rank(w("abAB"))
    assert len(rep.witnesses) == 1
    assert len(w_subgroups(w("abAB"))) == 1


def test_w_subgroups_preconditions():
    with pytest.raises(PreconditionError):
        w_subgroups(w("ab"))
    with pytest.raises(PreconditionError):
        w_subgroups(())


@pytest.mark.parametrize("length", range(1, 9))
def test_irank_matches_folded_quotients(length):
    for x in enumerate_orbit_reps(2, length, full_support_only=False):
        value, wit = oracles.naive_irank(x)
        rep = imprimitivity_rank(x)
        assert rep.value == value, format_word(x)
        if value != math.inf:
            assert {oracles.graph_key(*g) for g in wit} == \
                {oracles.graph_key(g.num_vertices, g.edges) for g in rep.witnesses}


@pytest.mark.parametrize("length", range(6, 9))
def test_irank_matches_folded_quotients_rank3(length):
    for x in enumerate_orbit_reps(3, length):
        value, _ = oracles.naive_irank(x)
        assert imprimitivity_rank(x).value == value, format_word(x)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([-2, -1, 1, 2]), min_size=2, max_size=10),
       st.sampled_from(list(enumerate_second_kind(2))))
def test_irank_aut_invariant(raw, aut):
    x = parse_word(format_word(raw))
    if not x:
        return
    assert imprimitivity_rank(apply(aut, x)).value == imprimitivity_rank(x).value


@given(st.lists(st.sampled_from([-2, -1, 1, 2]), min_size=1, max_size=6), st.integers(2, 3))
def test_proper_powers_have_irank_one(raw, k):
    x = parse_word(format_word(raw))
    if not x:
        return
    assert imprimitivity_rank(power(x, k)).value == 1
