import random

from hypothesis import given, settings, strategies as st

from conftest import reduced_words
from freecensus.whitehead import (
    AutomorphismChain,
    WhiteheadFirstKind,
    WhiteheadSecondKind,
    apply,
    enumerate_first_kind,
    enumerate_second_kind,
    is_primitive,
    is_whitehead_minimal,
    length_deltas,
    minimal_free_factor_rank,
    whitehead_graph,
    whitehead_minimize,
)
from freecensus.words import cyclic_length, cyclic_word, format_word, inverse, multiply, parse_word

import oracles


def w(s):
    return parse_word(s)


def test_automorphism_counts():
    assert len(list(enumerate_second_kind(2))) == 16
    assert len(list(enumerate_second_kind(3))) == 96
    assert len(list(enumerate_first_kind(3))) == 48


def test_second_kind_image_and_inverse():
    aut = WhiteheadSecondKind(1, frozenset({2, -3}))
    assert aut.image(2) == (1, 2)
    assert aut.image(3) == (3, -1)
    assert aut.image(1) == (1,)
    x = w("bcBaC")
    assert apply(aut.inverse(), apply(aut, x)) == x
    assert str(aut) == "W2[a;Cb]"


def test_minimize_examples():
    assert format_word(whitehead_minimize(w("Aba"))[0]) == "b"
    assert format_word(whitehead_minimize(w("abab"))[0]) == "aa"
    assert format_word(whitehead_minimize(w("abAB"))[0]) == "BabA"
    assert is_primitive(w("ab")) and is_primitive(w("abb"))
    assert not is_primitive(w("aabb"))
    assert minimal_free_factor_rank(w("abAB")) == 2
    assert minimal_free_factor_rank(w("aaab")) == 1


def test_chain_reproduces_minimum():
    x = w("ababbabbbabbbb")
    m, chain = whitehead_minimize(x)
    assert cyclic_word(chain.apply(x)) == m
    assert len(m) == 8


def test_length_deltas_match_literal_images():
    rng = random.Random(4)
    for _ in range(200):
        r = rng.choice([2, 3])
        x = oracles.core(tuple(rng.choice(oracles.letters(r)) for _ in range(rng.randint(2, 12))))
        x = oracles.core(multiply(x))
        if not x:
            continue
        d = length_deltas(x, r)
        for k, aut in enumerate(enumerate_second_kind(r)):
            assert cyclic_length(apply(aut, x)) - len(x) == d[k]


def test_whitehead_graph():
    g = whitehead_graph(w("abAB"))
    assert g.edge_count() == 4
    assert whitehead_graph(w("abAB"), reduced=True).girth() == 4
    assert whitehead_graph(w("aabb")).has_parallel_edges() is False
    assert whitehead_graph(w("aabb")).girth() == 4
    assert whitehead_graph(w("aab")).girth() == float("inf")


first_kind = st.builds(lambda p, s: WhiteheadFirstKind(tuple(p), tuple(s)),
                       st.permutations([1, 2, 3]), st.lists(st.sampled_from([1, -1]), min_size=3, max_size=3))
second_kind = st.sampled_from(list(enumerate_second_kind(3)))
auts = st.one_of(first_kind, second_kind)


@given(auts, reduced_words(3))
def test_automorphisms_are_invertible(aut, x):
    assert apply(aut.inverse(), apply(aut, x)) == x


@given(auts, reduced_words(3), reduced_words(3))
def test_automorphisms_are_homomorphisms(aut, x, y):
    assert apply(aut, multiply(x, y)) == multiply(apply(aut, x), apply(aut, y))


@settings(max_examples=60)
@given(st.lists(auts, max_size=4), reduced_words(3, min_size=1, max_size=10))
def test_minimization_is_orbit_invariant(chain, x):
    y = AutomorphismChain(tuple(chain)).apply(x)
    mx, _ = whitehead_minimize(x, 3)
    my, _ = whitehead_minimize(y, 3)
    assert len(mx) == len(my)
    assert is_whitehead_minimal(mx, 3)


@settings(max_examples=60)
@given(reduced_words(2, min_size=1, max_size=9))
def test_minimal_agrees_with_literal_check(x):
    c = oracles.core(x)
    assert is_whitehead_minimal(c, 2) == oracles.literal_min(c, 2)
