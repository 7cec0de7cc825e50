"""Deliberately naive reference implementations for cross-checking.

Nothing here shares code with the primary implementations: enumeration is
by unpruned generate-and-filter, interleavings come from permutation
filtering, and the distance is computed over an explicitly merged support.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .metmodel import FinMetSpace, GuardExceeded, guard_limit, num_cmp
from .probmodel import FinDist


def enumerate_nonexpansive(x: FinMetSpace, y: FinMetSpace):
    """All non-expansive tables from x to y by exhaustive filtering."""
    xs, ys = x.points, y.points
    if len(ys) ** len(xs) > guard_limit():
        raise GuardExceeded(
            f"{len(ys)}^{len(xs)} candidate tables exceed the guard")
    out = []
    for table in itertools.product(ys, repeat=len(xs)):
        ok = True
        for i, a in enumerate(xs):
            for j, b in enumerate(xs):
                if num_cmp(y.dist(table[i], table[j]), x.dist(a, b)) > 0:
                    ok = False
        if ok:
            out.append(table)
    return out


def perm_group(n: int):
    """All permutations of range(n) in lexicographic order."""
    if n > 8:
        raise ValueError("permutation groups only generated up to n = 8")
    return sorted(itertools.permutations(range(n)))


def brute_tv(p: FinDist, q: FinDist) -> Fraction:
    """Total-variation distance as a maximum over all events."""
    pd, qd = p.as_dict(), q.as_dict()
    support = sorted(set(pd) | set(qd))
    if len(support) > 20:
        # The event lattice is too big; fall back to the L1 form computed
        # outcome by outcome (still independent of the primary code path).
        total = Fraction(0)
        for o in support:
            total += abs(pd.get(o, Fraction(0)) - qd.get(o, Fraction(0)))
        return total / 2
    best = Fraction(0)
    for r in range(len(support) + 1):
        for event in itertools.combinations(support, r):
            mass = sum((pd.get(o, Fraction(0)) - qd.get(o, Fraction(0))
                        for o in event), Fraction(0))
            if mass > best:
                best = mass
    return best


def brute_interleavings(parts):
    """All interleavings of the parts via permutation filtering."""
    parts = [tuple(p) for p in parts]
    entries = [e for part in parts for e in part]
    out = []
    for perm in itertools.permutations(entries):
        ok = True
        for part in parts:
            positions = [perm.index(e) for e in part]
            if positions != sorted(positions):
                ok = False
        if ok and perm not in out:
            out.append(perm)
    return out
