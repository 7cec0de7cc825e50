import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gvlam.metmodel import GuardExceeded, enumerate_tables, timed_space
from gvlam.oracles import (brute_interleavings, brute_tv,
                           enumerate_nonexpansive, perm_group)
from gvlam.probmodel import (FinDist, no_replace_sampler, replace_sampler,
                             tv_distance)
from gvlam.syntax import Ground, enumerate_shuffles


WEIGHTS = st.lists(st.integers(0, 5), min_size=1, max_size=5).filter(
    lambda w: sum(w) > 0)


def _dist(weights):
    total = sum(weights)
    return FinDist.from_dict(
        {i: Fraction(w, total) for i, w in enumerate(weights) if w})


@given(WEIGHTS, WEIGHTS)
def test_tv_distance_matches_event_maximum(w1, w2):
    p, q = _dist(w1), _dist(w2)
    assert tv_distance(p, q) == brute_tv(p, q)


def test_brute_tv_on_samplers():
    p = replace_sampler(2, 1, 1)
    q = no_replace_sampler(2, 1, 1)
    assert brute_tv(p, q) == tv_distance(p, q) == Fraction(1, 2)


def test_brute_tv_large_support_fallback():
    p = FinDist.from_dict({i: Fraction(1, 30) for i in range(30)})
    q = FinDist.from_dict({i: Fraction(1, 30) for i in range(10, 40)})
    assert brute_tv(p, q) == tv_distance(p, q) == Fraction(1, 3)


def test_perm_group():
    for n in range(5):
        perms = perm_group(n)
        assert len(perms) == math.factorial(n)
        assert perms == sorted(perms)
        assert len(set(perms)) == len(perms)
    with pytest.raises(ValueError):
        perm_group(9)


def test_nonexpansive_enumeration_matches_primary():
    for dom, cod in ((timed_space(2), timed_space(2)),
                     (timed_space(3), timed_space(1)),
                     (timed_space(1), timed_space(3))):
        assert sorted(enumerate_tables(dom, cod)) \
            == sorted(enumerate_nonexpansive(dom, cod))


def test_nonexpansive_guard(monkeypatch):
    monkeypatch.setenv("GVLAM_GUARD", "5")
    with pytest.raises(GuardExceeded):
        enumerate_nonexpansive(timed_space(2), timed_space(2))


def test_brute_interleavings():
    X = Ground("X")
    parts = [(("a", X), ("b", X)), (("c", X),)]
    out = brute_interleavings(parts)
    assert sorted(out) == sorted(enumerate_shuffles(parts))
    assert len(out) == 3
    assert brute_interleavings([()]) == [()]
