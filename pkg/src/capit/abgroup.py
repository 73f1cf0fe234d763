"""Finite abelian groups in invariant-factor form.

A group is stored as its invariant factors ``d_1 | d_2 | ... | d_k`` (all
>= 2); elements are tuples of reduced coordinates.  Homomorphisms are integer
matrices acting on column vectors.  Quotients, kernels and subgroups all go
through the Smith normal form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, reduce
from math import gcd, lcm, prod
from typing import Iterable, Sequence

import numpy as np

from capit import _modlin

Element = tuple[int, ...]
Matrix = list[list[int]]


class AbelianGroupError(ValueError):
    pass


class InfiniteQuotient(AbelianGroupError):
    pass


class ElementOutOfGroup(AbelianGroupError):
    pass


class IncompatibleHom(AbelianGroupError):
    pass


# ----------------------------------------------------------------------
# Smith normal form over Z


def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> Matrix:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)] for i in range(len(a))]


def smith_normal_form(m: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(u, d, v)`` with ``u @ m @ v == d``.

    ``u`` and ``v`` are unimodular; ``d`` is diagonal with non-negative
    entries and ``d[i][i]`` divides ``d[i+1][i+1]``.  Pivots are picked by
    smallest absolute value.  Works on arbitrary-precision Python ints.
    """
    return _snf(m, True)


def _snf(m, want_u):
    rows = len(m)
    cols = len(m[0]) if rows else 0
    a = [[int(x) for x in row] for row in m]
    u = _identity(rows) if want_u else [[] for _ in range(rows)]
    v = _identity(cols)

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, f):  # row_dst += f * row_src
        if f:
            ad, as_ = a[dst], a[src]
            for k in range(cols):
                ad[k] += f * as_[k]
            if want_u:
                ud, us = u[dst], u[src]
                for k in range(rows):
                    ud[k] += f * us[k]

    def add_col(dst, src, f):
        if f:
            for row in a:
                row[dst] += f * row[src]
            for row in v:
                row[dst] += f * row[src]

    t = 0
    while t < rows and t < cols:
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                x = a[i][j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = a[t][t]
            moved = False
            for i in range(t + 1, rows):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
                    if a[i][t]:
                        swap_rows(t, i)
                        moved = True
                        break
            if moved:
                continue
            for j in range(t + 1, cols):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
                    if a[t][j]:
                        swap_cols(t, j)
                        moved = True
                        break
            if moved:
                continue
            # divisibility of the remaining block by the pivot
            bad = None
            for i in range(t + 1, rows):
                for j in range(t + 1, cols):
                    if a[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
        t += 1
    return u, a, v


def diagonal(d: Sequence[Sequence[int]]) -> list[int]:
    return [d[i][i] for i in range(min(len(d), len(d[0]) if d else 0))]


# ----------------------------------------------------------------------
# Groups


@dataclass(frozen=True)
class FiniteAbelianGroup:
    invariants: tuple[int, ...] = ()

    def __post_init__(self):
        inv = tuple(int(x) for x in self.invariants)
        object.__setattr__(self, "invariants", inv)
        for i, d in enumerate(inv):
            if d < 2:
                raise AbelianGroupError(f"invariant factor {d} must be >= 2")
            if i and d % inv[i - 1]:
                raise AbelianGroupError(f"invariant factors {inv} do not form a divisor chain")

    @classmethod
    def from_orders(cls, orders: Iterable[int]) -> FiniteAbelianGroup:
        """Canonical form of a direct sum of cyclic groups of the given orders."""
        orders = [int(o) for o in orders]
        if any(o <= 0 for o in orders):
            raise InfiniteQuotient("cyclic factor of order 0")
        _, d, _ = smith_normal_form([[o if i == j else 0 for j in range(len(orders))] for i, o in enumerate(orders)])
        return cls(tuple(x for x in diagonal(d) if x != 1))

    @property
    def rank(self) -> int:
        return len(self.invariants)

    @property
    def order(self) -> int:
        return prod(self.invariants)

    @property
    def exponent(self) -> int:
        return self.invariants[-1] if self.invariants else 1

    @property
    def zero(self) -> Element:
        return (0,) * self.rank

    def __len__(self) -> int:
        return self.order

    def __iter__(self):
        return self.elements()

    def __str__(self) -> str:
        if not self.invariants:
            return "1"
        return " x ".join(f"Z/{d}" for d in self.invariants)

    def elements(self):
        """All elements in lexicographic order of coordinates."""
        return itertools.product(*(range(d) for d in self.invariants))

    @cached_property
    def element_list(self) -> list[Element]:
        return list(self.elements())

    @cached_property
    def index_of(self) -> dict[Element, int]:
        return {x: i for i, x in enumerate(self.element_list)}

    def gens(self) -> list[Element]:
        return [tuple(int(i == j) for j in range(self.rank)) for i in range(self.rank)]

    def reduce(self, vec: Sequence[int]) -> Element:
        if len(vec) != self.rank:
            raise ElementOutOfGroup(f"{tuple(vec)} has wrong length for {self}")
        return tuple(int(x) % d for x, d in zip(vec, self.invariants))

    def check(self, x: Sequence[int]) -> Element:
        x = tuple(int(c) for c in x)
        if len(x) != self.rank or any(not 0 <= c < d for c, d in zip(x, self.invariants)):
            raise ElementOutOfGroup(f"{x} is not a reduced element of {self}")
        return x

    def add(self, x: Element, y: Element) -> Element:
        return tuple((a + b) % d for a, b, d in zip(x, y, self.invariants))

    def sub(self, x: Element, y: Element) -> Element:
        return tuple((a - b) % d for a, b, d in zip(x, y, self.invariants))

    def neg(self, x: Element) -> Element:
        return tuple(-a % d for a, d in zip(x, self.invariants))

    def scale(self, n: int, x: Element) -> Element:
        return tuple(n * a % d for a, d in zip(x, self.invariants))

    def total(self, xs: Iterable[Element]) -> Element:
        out = [0] * self.rank
        for x in xs:
            for i, c in enumerate(x):
                out[i] += c
        return self.reduce(out)

    def element_order(self, x: Element) -> int:
        return reduce(lcm, (d // gcd(a, d) for a, d in zip(x, self.invariants)), 1)

    def direct_sum(self, other: FiniteAbelianGroup) -> FiniteAbelianGroup:
        return FiniteAbelianGroup.from_orders(self.invariants + other.invariants)


def cyclic(n: int) -> FiniteAbelianGroup:
    return FiniteAbelianGroup((n,) if n > 1 else ())


# ----------------------------------------------------------------------
# Homomorphisms


@dataclass(frozen=True)
class Homomorphism:
    """``matrix`` is codomain-rank x domain-rank; column j is the image of
    the j-th domain generator."""

    domain: FiniteAbelianGroup
    codomain: FiniteAbelianGroup
    matrix: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        rows, cols = self.codomain.rank, self.domain.rank
        mat = [list(r) for r in self.matrix] if self.matrix else [[0] * cols for _ in range(rows)]
        if len(mat) != rows or any(len(r) != cols for r in mat):
            raise IncompatibleHom(f"matrix shape does not match {rows}x{cols}")
        mat = tuple(tuple(int(x) % n for x in row) for row, n in zip(mat, self.codomain.invariants))
        object.__setattr__(self, "matrix", mat)
        for j, dj in enumerate(self.domain.invariants):
            col = [mat[i][j] for i in range(rows)]
            if any(dj * c % n for c, n in zip(col, self.codomain.invariants)):
                raise IncompatibleHom(f"generator {j} of order {dj} maps to an element of larger order")

    @classmethod
    def from_images(cls, domain, codomain, images: Sequence[Element]) -> Homomorphism:
        mat = [[images[j][i] for j in range(domain.rank)] for i in range(codomain.rank)]
        return cls(domain, codomain, tuple(map(tuple, mat)))

    def __call__(self, x: Sequence[int]) -> Element:
        return tuple(
            sum(r[j] * x[j] for j in range(len(x))) % n for r, n in zip(self.matrix, self.codomain.invariants)
        )

    def compose(self, inner: Homomorphism) -> Homomorphism:
        """self o inner"""
        images = [self(inner(g)) for g in inner.domain.gens()]
        return Homomorphism.from_images(inner.domain, self.codomain, images)

    def kernel(self):
        return hom_kernel(self)

    def image(self):
        return subgroup_generated(self.codomain, [self(g) for g in self.domain.gens()])

    def is_injective(self) -> bool:
        return self.kernel()[0].order == 1


def identity_hom(g: FiniteAbelianGroup) -> Homomorphism:
    return Homomorphism.from_images(g, g, g.gens())


def zero_hom(dom: FiniteAbelianGroup, cod: FiniteAbelianGroup) -> Homomorphism:
    return Homomorphism(dom, cod)


@dataclass(frozen=True)
class Projection:
    """Surjection Z^n -> group with a chosen section on generators."""

    group: FiniteAbelianGroup
    matrix: tuple[tuple[int, ...], ...]
    lifts: tuple[tuple[int, ...], ...]

    def __call__(self, vec: Sequence[int]) -> Element:
        return tuple(
            sum(r[j] * vec[j] for j in range(len(vec))) % n for r, n in zip(self.matrix, self.group.invariants)
        )

    def lift(self, x: Sequence[int]) -> tuple[int, ...]:
        n = len(self.lifts[0]) if self.lifts else 0
        out = [0] * n
        for c, l in zip(x, self.lifts):
            for i in range(n):
                out[i] += c * l[i]
        return tuple(out)


def _inverse_unimodular(v: Matrix) -> Matrix:
    n = len(v)
    # exact inverse via SNF-free Gauss-Jordan on integers (det = +-1)
    aug = [list(map(int, row)) + [int(i == j) for j in range(n)] for i, row in enumerate(v)]
    for c in range(n):
        # Euclid down the column to reach a unit pivot
        while True:
            nz = [r for r in range(c, n) if aug[r][c]]
            piv = min(nz, key=lambda r: abs(aug[r][c]))
            done = True
            for r in nz:
                if r != piv:
                    f = aug[r][c] // aug[piv][c]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[piv])]
                    if aug[r][c]:
                        done = False
            if done:
                break
        aug[c], aug[piv] = aug[piv], aug[c]
        if aug[c][c] < 0:
            aug[c] = [-x for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [row[n:] for row in aug]


def from_presentation(n_gens: int, relations: Sequence[Sequence[int]]) -> tuple[FiniteAbelianGroup, Projection]:
    """Z^n_gens modulo the row span of ``relations``."""
    rels = [list(map(int, r)) for r in relations if any(r)]
    for r in rels:
        if len(r) != n_gens:
            raise AbelianGroupError(f"relation {r} has length {len(r)}, expected {n_gens}")
    if n_gens == 0:
        return FiniteAbelianGroup(()), Projection(FiniteAbelianGroup(()), (), ())
    if not rels:
        raise InfiniteQuotient("no relations: free quotient")
    _, d, v = _snf(rels, False)
    diag = diagonal(d) + [0] * (n_gens - min(len(rels), n_gens))
    if any(x == 0 for x in diag):
        raise InfiniteQuotient(f"presentation has a free summand (diagonal {diag})")
    keep = [j for j, x in enumerate(diag) if x != 1]
    group = FiniteAbelianGroup(tuple(diag[j] for j in keep))
    vinv = _inverse_unimodular(v)
    matrix = tuple(tuple(v[i][j] % diag[j] for i in range(n_gens)) for j in keep)
    lifts = tuple(tuple(vinv[j]) for j in keep)
    return group, Projection(group, matrix, lifts)


def _kernel_vectors(images: Sequence[Element], codomain: FiniteAbelianGroup, moduli: Sequence[int]) -> list[list[int]]:
    """Generators of {x : sum x_j images_j == 0} for x_j taken mod moduli[j]."""
    e = lcm(codomain.exponent, *moduli) if moduli else codomain.exponent
    n = len(images)
    if n == 0:
        return []
    if codomain.rank == 0:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    rows = [[(e // ni) * images[j][i] for j in range(n)] for i, ni in enumerate(codomain.invariants)]
    gens = _modlin.kernel_mod(np.array(rows, dtype=object if e >= 1 << 30 else np.int64), e)
    return [[int(c) % m for c, m in zip(g, moduli)] for g in gens]


def subgroup_generated(g: FiniteAbelianGroup, gens: Sequence[Sequence[int]]) -> tuple[FiniteAbelianGroup, Homomorphism]:
    """Subgroup of ``g`` generated by ``gens`` with its (injective) embedding."""
    gens = [g.check(x) for x in gens]
    gens = [x for x in gens if any(x)]
    if not gens:
        sub = FiniteAbelianGroup(())
        return sub, zero_hom(sub, g)
    m = len(gens)
    e = g.exponent
    rels = [[e if i == j else 0 for j in range(m)] for i in range(m)]
    rels += _kernel_vectors(gens, g, [e] * m)
    sub, proj = from_presentation(m, rels)
    images = []
    for lift in proj.lifts:
        images.append(g.total(g.scale(c, x) for c, x in zip(lift, gens)))
    return sub, Homomorphism.from_images(sub, g, images)


def quotient(g: FiniteAbelianGroup, sub_gens: Sequence[Sequence[int]]) -> tuple[FiniteAbelianGroup, Homomorphism]:
    sub_gens = [g.check(x) for x in sub_gens]
    k = g.rank
    rels = [[d if i == j else 0 for j in range(k)] for i, d in enumerate(g.invariants)]
    rels += [list(x) for x in sub_gens]
    q, proj = from_presentation(k, rels)
    return q, Homomorphism(g, q, proj.matrix)


def hom_kernel(h: Homomorphism) -> tuple[FiniteAbelianGroup, Homomorphism]:
    dom = h.domain
    if dom.rank == 0:
        return dom, identity_hom(dom)
    images = [h(x) for x in dom.gens()]
    vecs = _kernel_vectors(images, h.codomain, dom.invariants)
    return subgroup_generated(dom, [tuple(v) for v in vecs])


def hom_image(h: Homomorphism) -> tuple[FiniteAbelianGroup, Homomorphism]:
    return h.image()


def element_set(emb: Homomorphism) -> frozenset[Element]:
    """All elements of the image of an embedding (small groups only)."""
    return frozenset(emb(x) for x in emb.domain.elements())


def span_set(g: FiniteAbelianGroup, gens: Iterable[Element]) -> frozenset[Element]:
    """Brute-force closure of ``gens`` in ``g``."""
    seen = {g.zero}
    frontier = [g.zero]
    gens = [x for x in gens if any(x)]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = g.add(x, s)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def all_subgroups(g: FiniteAbelianGroup) -> list[frozenset[Element]]:
    """Every subgroup of ``g`` as an element set, sorted by (order, elements)."""
    cyclic_gens = {}
    for x in g.elements():
        cyclic_gens.setdefault(span_set(g, [x]), x)
    subs: dict[frozenset, list[Element]] = {frozenset([g.zero]): []}
    frontier = list(subs)
    while frontier:
        nxt = []
        for s in frontier:
            for c, x in cyclic_gens.items():
                if c <= s:
                    continue
                gens = subs[s] + [x]
                t = span_set(g, gens)
                if t not in subs:
                    subs[t] = gens
                    nxt.append(t)
        frontier = nxt
    return sorted(subs, key=lambda s: (len(s), sorted(s)))


def invariants_from_order_counts(order: int, killed: callable) -> tuple[int, ...]:
    """Recover invariant factors from ``killed(n) = |{x : n x = 0}|``.

    Independent of the Smith normal form; used as an oracle.
    """
    from sympy import factorint

    per_prime: dict[int, list[int]] = {}
    for p, a in factorint(order).items():
        sizes = [killed(p**k) for k in range(a + 1)]
        # number of cyclic p-factors of order >= p^k
        counts = []
        for k in range(1, a + 1):
            ratio = sizes[k] // sizes[k - 1]
            r = 0
            while ratio > 1:
                ratio //= p
                r += 1
            counts.append(r)
        exps = []
        for k in range(1, a + 1):
            nxt = counts[k] if k < a else 0
            exps += [k] * (counts[k - 1] - nxt)
        per_prime[p] = sorted(exps, reverse=True)
    length = max((len(v) for v in per_prime.values()), default=0)
    factors = []
    for i in range(length):
        f = 1
        for p, exps in per_prime.items():
            if i < len(exps):
                f *= p ** exps[i]
        factors.append(f)
    return tuple(sorted(factors))
