"""Brute-force reference computations shared by the test modules."""

import itertools
import random

import numpy as np

from capit.abgroup import FiniteAbelianGroup
from capit.census import _head_action_group, _matrix_of, _perm_of, actions_up_to_conjugacy
from capit.extension import GAction


def index_tables(action):
    """Addition tables of G and A and the action, all on element indices."""
    g, a = action.group, action.module
    gi = {x: i for i, x in enumerate(g.element_list)}
    ai = {x: i for i, x in enumerate(a.element_list)}
    add_g = np.array([[gi[g.add(x, y)] for y in g.element_list] for x in g.element_list], dtype=np.int64)
    add_a = np.array([[ai[a.add(x, y)] for y in a.element_list] for x in a.element_list], dtype=np.int64)
    neg_a = np.array([ai[a.neg(x)] for x in a.element_list], dtype=np.int64)
    act = np.array([[ai[action.act(s, x)] for x in a.element_list] for s in g.element_list], dtype=np.int64)
    return add_g, add_a, neg_a, act


def brute_h2_order(action, limit=1 << 19):
    """|Z^2| / |B^2| by listing every normalized 2-cochain and every 1-cochain.

    Returns None when the number of normalized 2-cochains exceeds ``limit``.
    """
    g, a = action.group, action.module
    n, m = g.order, a.order
    slots = (n - 1) ** 2
    if m**slots > limit:
        return None
    if n == 1:
        return 1
    add_g, add_a, neg_a, act = index_tables(action)
    # c[k, s, t] as element index, zero whenever s or t is the identity
    c = np.zeros((m**slots, n, n), dtype=np.int64)
    vals = np.array(list(itertools.product(range(m), repeat=slots)), dtype=np.int64).reshape(m**slots, slots)
    c[:, 1:, 1:] = vals.reshape(-1, n - 1, n - 1)
    ok = np.ones(len(c), dtype=bool)
    for s, t, r in itertools.product(range(n), repeat=3):
        lhs = add_a[act[s][c[:, t, r]], c[:, s, add_g[t, r]]]
        rhs = add_a[c[:, add_g[s, t], r], c[:, s, t]]
        ok &= lhs == rhs
    z2 = int(ok.sum())
    coboundaries = set()
    for f in itertools.product(range(m), repeat=n - 1):
        f = (0,) + f
        d = tuple(
            add_a[add_a[act[s][f[t]], neg_a[f[add_g[s, t]]]], f[s]] for s in range(1, n) for t in range(1, n)
        )
        coboundaries.add(d)
    return z2 // len(coboundaries)


def uct_h2_invariants(g: FiniteAbelianGroup, m: FiniteAbelianGroup) -> tuple[int, ...]:
    """H^2(G, M) for trivial action: sum of M/d_i M and M[gcd(d_i, d_j)] for i < j."""
    from math import gcd

    # for cyclic Z/x both M/dM and M[d] are Z/gcd(x, d)
    def part(d):
        return [gcd(x, d) for x in m.invariants]

    orders = []
    for d in g.invariants:
        orders += part(d)
    for i, j in itertools.combinations(range(g.rank), 2):
        orders += part(gcd(g.invariants[i], g.invariants[j]))
    return FiniteAbelianGroup.from_orders([o for o in orders if o > 1]).invariants


def brute_h1_order(action):
    """|H^1| from every normalized 1-cochain: crossed homs over principal ones."""
    g, a = action.group, action.module
    add_g, add_a, neg_a, act = index_tables(action)
    n, m = g.order, a.order
    z1 = 0
    for f in itertools.product(range(m), repeat=n - 1):
        f = (0,) + f
        if all(f[add_g[s, t]] == add_a[f[s], act[s][f[t]]] for s in range(n) for t in range(n)):
            z1 += 1
    b1 = {tuple(add_a[act[s][x], neg_a[x]] for s in range(n)) for x in range(m)}
    return z1 // len(b1)


def random_action(rng: random.Random, g: FiniteAbelianGroup, m: FiniteAbelianGroup) -> GAction:
    """A random orbit representative conjugated by a random automorphism.

    For modules with a very large End(M) the conjugators come from the same
    subgroup of Aut(M) that the census uses.
    """
    reps = actions_up_to_conjugacy(g, m)
    mats = rng.choice(reps)
    if m.rank == 0 or g.rank == 0:
        return GAction(g, m, [list(map(list, x)) for x in mats])
    auts = _head_action_group(m)[0]
    p = _perm_of(m, rng.choice(auts))
    pinv = np.argsort(p)
    out = []
    for x in mats:
        q = p[_perm_of(m, x)[pinv]]
        out.append([list(r) for r in _matrix_of(m, q)])
    return GAction(g, m, out)


def brute_miyake(ext):
    """(found, number of distinct phi, all inclusions hold), one phi at a time.

    Every f in Z^1(U, A) is enumerated; phi is its reduction U/U' -> A/U',
    kernels come from explicit element lists.
    """
    from capit.abgroup import quotient
    from capit.transfer import transfer

    A = ext.A
    ab = ext.abelianization
    q = ab.group
    qa, pi = quotient(A, ext.derived_gens)
    z1 = ext.crossed
    lifts = {xi: ab.lift(xi) for xi in q.element_list}
    seen = set()
    found = False
    ok = True
    for coords in z1.all_coords():
        v = z1.vector(coords)
        phi = {xi: pi(z1.value(v, lifts[xi])) for xi in q.element_list}
        key = tuple(sorted(phi.items()))
        if key in seen:
            continue
        seen.add(key)
        d = qa.order // len(set(phi.values()))
        found |= d == 1
        for xi, y in phi.items():
            if not any(y) and any(transfer(ext, lifts[q.scale(d, xi)])):
                ok = False
    return found, len(seen), ok
