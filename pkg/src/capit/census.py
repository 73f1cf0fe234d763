"""Enumeration of small metabelian extensions for exhaustive checks.

Instances are (G, A, action, H^2 class).  Actions are taken up to
conjugation by Aut(A) and relabeling by Aut(G); both only rename elements and
so preserve every property checked here.  Classes of H^2 are listed in full up to
``class_cap`` and sampled with a fixed seed beyond that.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
from sympy import factorint
from sympy.utilities.iterables import partitions

from capit.abgroup import FiniteAbelianGroup
from capit.cohomology import enumerate_extensions
from capit.extension import ExtensionGroup, GAction

MAX_END_SIZE = 1 << 16
# large enough that every pair with |G||A| <= 64 gets its H^2
CENSUS_H2_GROUP = 32

Matrix = tuple[tuple[int, ...], ...]


def abelian_groups(order: int) -> list[FiniteAbelianGroup]:
    """All abelian groups of the given order, sorted by invariant factors."""
    if order == 1:
        return [FiniteAbelianGroup(())]
    per_prime = []
    for p, a in sorted(factorint(order).items()):
        opts = []
        for part in partitions(a):
            exps = sorted(k for k, m in part.items() for _ in range(m))
            opts.append([p**k for k in exps])
        per_prime.append(opts)
    out = []
    for combo in itertools.product(*per_prime):
        out.append(FiniteAbelianGroup.from_orders([q for grp in combo for q in grp]))
    return sorted(out, key=lambda g: (len(g.invariants), g.invariants))


def _identity(k: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(k)) for i in range(k))


def endomorphism_count(a: FiniteAbelianGroup) -> int:
    n = 1
    for d in a.invariants:
        n *= sum(1 for x in a.element_list if not any(a.scale(d, x)))
    return n


def _codes(a: FiniteAbelianGroup, coords: np.ndarray) -> np.ndarray:
    code = np.zeros(coords.shape[:-1], dtype=np.int64)
    for j, d in enumerate(a.invariants):
        code = code * d + coords[..., j]
    return code


def _coords(a: FiniteAbelianGroup) -> np.ndarray:
    return np.array(a.element_list, dtype=np.int64).reshape(a.order, a.rank)


def _perm_of(a: FiniteAbelianGroup, m) -> np.ndarray:
    """Permutation of ``a.element_list`` induced by the matrix ``m``."""
    mat = np.array(m, dtype=np.int64).reshape(a.rank, a.rank)
    return _codes(a, (_coords(a) @ mat.T) % np.array(a.invariants, dtype=np.int64))


def _matrix_of(a: FiniteAbelianGroup, perm: np.ndarray) -> Matrix:
    cols = [a.element_list[int(perm[a.index_of[g]])] for g in a.gens()]
    return tuple(tuple(cols[j][i] for j in range(a.rank)) for i in range(a.rank))


@lru_cache(maxsize=None)
def automorphisms(a: FiniteAbelianGroup) -> tuple[Matrix, ...]:
    """Aut(A) by brute force over End(A); refuses |End(A)| > MAX_END_SIZE."""
    if endomorphism_count(a) > MAX_END_SIZE:
        raise ValueError(f"End({a}) too large to enumerate")
    k = a.rank
    if k == 0:
        return ((),)
    cols = [np.array([x for x in a.element_list if not any(a.scale(d, x))], dtype=np.int64) for d in a.invariants]
    grids = np.meshgrid(*[np.arange(len(c)) for c in cols], indexing="ij")
    # mats[n, i, j]: coordinate i of the image of generator j
    mats = np.stack([cols[j][grids[j].ravel()] for j in range(k)], axis=2)
    perms = _codes(a, np.einsum("xk,nik->nxi", _coords(a), mats) % np.array(a.invariants, dtype=np.int64))
    srt = np.sort(perms, axis=1)
    bij = (np.diff(srt, axis=1) != 0).all(axis=1)
    return tuple(sorted(tuple(tuple(int(v) for v in row) for row in m) for m in mats[bij]))


@lru_cache(maxsize=None)
def _aut_perms(a: FiniteAbelianGroup, fallback: bool) -> np.ndarray:
    auts = _head_action_group(a)[0] if fallback else automorphisms(a)
    return np.stack([_perm_of(a, m) for m in auts])


def _generating_set(perms: np.ndarray) -> list[np.ndarray]:
    """Greedy generators of the permutation group whose elements are ``perms``."""
    ident = np.arange(perms.shape[1])
    gens: list[np.ndarray] = []
    closure = {ident.tobytes()}
    for g in perms:
        if g.tobytes() in closure:
            continue
        gens.append(g)
        frontier = [np.frombuffer(x, dtype=ident.dtype) for x in closure]
        while frontier:
            stack = np.stack(frontier)
            nxt = []
            for h in gens:
                for y in h[stack]:
                    key = y.tobytes()
                    if key not in closure:
                        closure.add(key)
                        nxt.append(y)
            frontier = nxt
        if len(closure) == len(perms):
            break
    return gens


def _head_action_group(a: FiniteAbelianGroup):
    """Automorphisms used for actions on A.

    When End(A) is too large, use Aut of A minus its last invariant factor,
    acting trivially on that factor.
    """
    if endomorphism_count(a) <= MAX_END_SIZE:
        return automorphisms(a), False
    head = FiniteAbelianGroup(a.invariants[:-1])
    sub, _ = _head_action_group(head)
    k = a.rank
    out = []
    for m in sub:
        big = [list(r) + [0] for r in m] + [[0] * (k - 1) + [1]]
        out.append(tuple(tuple(r) for r in big))
    return tuple(out), True


def _perm_pow(p: np.ndarray, n: int) -> np.ndarray:
    out = np.arange(len(p))
    for _ in range(n):
        out = p[out]
    return out


def _relabel(t: list[np.ndarray], alpha: Matrix) -> list[np.ndarray]:
    """The action s -> rho(alpha(s)) given by generator permutations ``t``."""
    out = []
    for j in range(len(t)):
        m = np.arange(len(t[0]))
        for i, mi in enumerate(t):
            m = _perm_pow(mi, alpha[i][j])[m]
        out.append(m)
    return out


@lru_cache(maxsize=None)
def actions_up_to_conjugacy(g: FiniteAbelianGroup, a: FiniteAbelianGroup) -> tuple[tuple[Matrix, ...], ...]:
    """Representatives of G-actions on A up to Aut(A)-conjugation and Aut(G)-relabeling.

    Both operations give isomorphic pairs (U, A), so nothing checked on the
    census can tell orbit members apart.  Automorphisms are handled as
    permutations of the elements of A.
    """
    k = a.rank
    if g.rank == 0 or k == 0:
        return (tuple(_identity(k) for _ in g.invariants),)
    fallback = endomorphism_count(a) > MAX_END_SIZE
    perms = _aut_perms(a, fallback)
    n = a.order
    ident = np.arange(n)
    rows = np.arange(len(perms))[:, None]
    by_order = {}
    for d in set(g.invariants):
        q = np.broadcast_to(ident, perms.shape).copy()
        for _ in range(d):
            q = perms[rows, q]
        by_order[d] = perms[(q == ident).all(axis=1)]
    tuples = []

    def extend(prefix):
        i = len(prefix)
        if i == g.rank:
            tuples.append(prefix)
            return
        cands = by_order[g.invariants[i]]
        ok = np.ones(len(cands), dtype=bool)
        for p in prefix:
            ok &= (cands[:, p] == p[cands]).all(axis=1)
        for m in cands[ok]:
            extend(prefix + [m])

    extend([])
    gens = _generating_set(perms)
    invs = [np.argsort(h) for h in gens]
    g_gens = []
    if endomorphism_count(g) <= MAX_END_SIZE:
        g_perms = _aut_perms(g, False)
        g_gens = [_matrix_of(g, p) for p in _generating_set(g_perms)]

    def key(t):
        return b"".join(x.tobytes() for x in t)

    seen = set()
    reps = []
    for t in tuples:
        if key(t) in seen:
            continue
        reps.append(t)
        seen.add(key(t))
        frontier = [t]
        while frontier:
            nxt = []
            for x in frontier:
                moves = [[h[m[hi]] for m in x] for h, hi in zip(gens, invs)]
                moves += [_relabel(x, alpha) for alpha in g_gens]
                for y in moves:
                    ky = key(y)
                    if ky not in seen:
                        seen.add(ky)
                        nxt.append(y)
            frontier = nxt
    return tuple(tuple(_matrix_of(a, m) for m in t) for t in reps)


@dataclass
class CensusInstance:
    g: FiniteAbelianGroup
    a: FiniteAbelianGroup
    action: GAction
    ext: ExtensionGroup

    @property
    def key(self) -> str:
        mats = ";".join(",".join("".join(map(str, r)) for r in m) for m in self.action.matrices)
        return f"G{list(self.g.invariants)}A{list(self.a.invariants)}[{mats}]{self.ext.name}"


def census_pairs(max_order: int) -> Iterator[tuple[FiniteAbelianGroup, FiniteAbelianGroup]]:
    for n in range(1, max_order + 1):
        for ga in range(1, n + 1):
            if n % ga:
                continue
            for g in abelian_groups(ga):
                for a in abelian_groups(n // ga):
                    yield g, a


def census(
    max_order: int, class_cap: int = 64, seed: int = 0, max_h2_group: int = CENSUS_H2_GROUP
) -> Iterator[CensusInstance]:
    """Extensions U of G by A with |U| <= max_order.

    Pairs with A nontrivial and |G| > ``max_h2_group`` are skipped (H^2 is
    not computed there).  G or A trivial always gives one instance.
    """
    for g, a in census_pairs(max_order):
        if a.order > 1 and g.order > max_h2_group:
            continue
        for mats in actions_up_to_conjugacy(g, a):
            action = GAction(g, a, [list(map(list, m)) for m in mats])
            for ext in enumerate_extensions(action, cap=class_cap, seed=seed, max_group=max_h2_group):
                yield CensusInstance(g, a, action, ext)
