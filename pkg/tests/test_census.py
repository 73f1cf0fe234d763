import itertools
from math import gcd

import pytest

from capit.abgroup import FiniteAbelianGroup, cyclic
from capit.census import (
    MAX_END_SIZE,
    abelian_groups,
    actions_up_to_conjugacy,
    automorphisms,
    census,
    endomorphism_count,
)
from capit.extension import GAction


def brute_automorphisms(a):
    """Bijective homomorphisms as tuples of element indices, from generator images."""
    els = a.element_list
    idx = a.index_of
    gens = a.gens()
    out = []
    choices = [[y for y in els if not any(a.scale(d, y))] for d in a.invariants]
    for imgs in itertools.product(*choices):
        perm = tuple(idx[a.total(a.scale(x[i], imgs[i]) for i in range(len(gens)))] for x in els)
        if len(set(perm)) == len(els):
            out.append(perm)
    return out


def compose(p, q):
    return tuple(p[i] for i in q)


def brute_action_orbits(g, a):
    """Orbits of G-actions under Aut(A)-conjugation and Aut(G)-relabeling.

    An action is stored as the tuple of A-permutations of all elements of G.
    """
    auts = brute_automorphisms(a)
    ident = tuple(range(a.order))
    gi = g.index_of

    def power(p, n):
        out = ident
        for _ in range(n):
            out = compose(p, out)
        return out

    actions = set()
    pools = [[p for p in auts if power(p, d) == ident] for d in g.invariants]
    for choice in itertools.product(*pools):
        if any(compose(p, q) != compose(q, p) for p, q in itertools.combinations(choice, 2)):
            continue
        full = []
        for s in g.element_list:
            m = ident
            for p, k in zip(choice, s):
                m = compose(power(p, k), m)
            full.append(m)
        actions.add(tuple(full))
    g_auts = brute_automorphisms(g) if g.rank else [tuple(range(g.order))]
    inverses = {p: tuple(sorted(range(len(p)), key=lambda i: p[i])) for p in auts}
    orbits = 0
    while actions:
        start = actions.pop()
        orbits += 1
        frontier = [start]
        while frontier:
            nxt = []
            for act in frontier:
                moved = [tuple(compose(compose(p, m), inverses[p]) for m in act) for p in auts]
                moved += [tuple(act[al[gi[s]]] for s in g.element_list) for al in g_auts]
                for y in moved:
                    if y in actions:
                        actions.remove(y)
                        nxt.append(y)
            frontier = nxt
    return orbits


def test_abelian_group_counts():
    expected = {1: 1, 2: 1, 4: 2, 8: 3, 12: 2, 16: 5, 32: 7, 36: 4, 64: 11, 72: 6}
    for n, count in expected.items():
        groups = abelian_groups(n)
        assert len(groups) == count
        assert all(g.order == n for g in groups)
        assert len({g.invariants for g in groups}) == count


def test_automorphism_counts():
    phi = lambda n: sum(1 for k in range(1, n + 1) if gcd(k, n) == 1)  # noqa: E731
    for n in range(2, 20):
        assert len(automorphisms(cyclic(n))) == phi(n)
    known = {(2, 2): 6, (2, 4): 8, (2, 2, 2): 168, (3, 3): 48, (4, 4): 96, (2, 2, 2, 2): 20160}
    for inv, count in known.items():
        assert len(automorphisms(FiniteAbelianGroup(inv))) == count


@pytest.mark.parametrize(
    "inv", [(2,), (6,), (2, 2), (2, 4), (3, 3), (2, 2, 2), (2, 6), (4, 4)], ids=lambda x: "x".join(map(str, x))
)
def test_automorphisms_match_brute_force(inv):
    a = FiniteAbelianGroup(inv)
    assert len(automorphisms(a)) == len(brute_automorphisms(a))


def test_end_count():
    assert endomorphism_count(FiniteAbelianGroup((2, 4))) == 2 * 2 * 2 * 4
    assert endomorphism_count(FiniteAbelianGroup((2,) * 5)) > MAX_END_SIZE
    with pytest.raises(ValueError):
        automorphisms(FiniteAbelianGroup((2,) * 5))


PAIRS = [
    ((2,), (2,)),
    ((2,), (4,)),
    ((2,), (2, 2)),
    ((2,), (2, 4)),
    ((2,), (3, 3)),
    ((2,), (8,)),
    ((2,), (2, 2, 2)),
    ((4,), (2, 2)),
    ((4,), (5,)),
    ((3,), (2, 2)),
    ((3,), (7,)),
    ((2, 2), (2, 2)),
    ((2, 2), (4,)),
    ((2, 2), (3, 3)),
    ((6,), (7,)),
    ((2, 4), (2, 2)),
    ((2, 2, 2), (3,)),
]


@pytest.mark.parametrize("pair", PAIRS, ids=lambda p: "G{}_A{}".format(*("x".join(map(str, x)) for x in p)))
def test_action_orbits_match_brute_force(pair):
    g, a = (FiniteAbelianGroup(x) for x in pair)
    reps = actions_up_to_conjugacy(g, a)
    assert len(reps) == brute_action_orbits(g, a)
    for mats in reps:
        GAction(g, a, [list(map(list, m)) for m in mats])


def test_trivial_action_always_present():
    for g, a in [((2,), (2,)), ((2, 2), (4,)), ((3,), (3, 3))]:
        g, a = FiniteAbelianGroup(g), FiniteAbelianGroup(a)
        assert any(GAction(g, a, [list(map(list, m)) for m in t]).is_trivial for t in actions_up_to_conjugacy(g, a))


def test_census_instances():
    insts = list(census(24, class_cap=8))
    keys = [i.key for i in insts]
    assert len(keys) == len(set(keys))
    assert all(i.ext.order <= 24 and i.ext.A.invariants == i.a.invariants for i in insts)
    # every order and every factorization |G||A| is represented
    seen = {(i.g.invariants, i.a.invariants) for i in insts}
    for n in range(1, 25):
        for ga in range(1, n + 1):
            if n % ga == 0:
                for g in abelian_groups(ga):
                    for a in abelian_groups(n // ga):
                        assert (g.invariants, a.invariants) in seen
    again = [i.key for i in census(24, class_cap=8)]
    assert keys == again
