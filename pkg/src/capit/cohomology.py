"""Cohomology of a finite abelian group G with coefficients in a finite G-module M.

Normalized bar cochains in degree n are maps (G - 1)^n -> M.  A cochain is
stored as a vector of M-coordinates ("v-space"); to work over a single ring
Z/e with e the exponent of M, coordinate i of M (of order d_i) is embedded as
``y = (e / d_i) v``.  Cocycles are kernels of coboundary matrices over Z/e,
coboundaries are images, and the quotient is read off with ``from_presentation``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse

from capit import _modlin
from capit.abgroup import (
    Element,
    FiniteAbelianGroup,
    Homomorphism,
    from_presentation,
    hom_kernel,
    quotient,
    subgroup_generated,
)
from capit.extension import ExtensionGroup, GAction, TwoCocycle

MAX_H2_GROUP = 16


class CohomologyError(ValueError):
    pass


class DegreeUnsupported(CohomologyError):
    pass


class GroupTooLarge(CohomologyError):
    pass


class NontrivialAction(CohomologyError):
    pass


class NotCyclic(CohomologyError):
    pass


class NotASubgroup(CohomologyError):
    pass


@dataclass(frozen=True)
class GModule:
    action: GAction

    @property
    def group(self) -> FiniteAbelianGroup:
        return self.action.group

    @property
    def module(self) -> FiniteAbelianGroup:
        return self.action.module

    @classmethod
    def trivial(cls, g: FiniteAbelianGroup, m: FiniteAbelianGroup) -> GModule:
        return cls(GAction.trivial(g, m))

    @classmethod
    def from_matrices(cls, g, m, matrices) -> GModule:
        return cls(GAction(g, m, matrices))


Cochain = dict  # tuple of G-elements -> M-element


def cochain_keys(g: FiniteAbelianGroup, n: int) -> list[tuple[Element, ...]]:
    return list(itertools.product(g.element_list[1:], repeat=n))


class _Complex:
    """Coboundary matrices in v-coordinates for one G-module."""

    def __init__(self, gm: GModule):
        self.gm = gm
        G, M = gm.group, gm.module
        self.k = M.rank
        self.e = M.exponent
        self.scale = np.array([self.e // d for d in M.invariants], dtype=np.int64)
        self._keys: dict[int, list] = {}
        self._index: dict[int, dict] = {}

    def keys(self, n):
        if n not in self._keys:
            ks = cochain_keys(self.gm.group, n)
            self._keys[n] = ks
            self._index[n] = {key: i for i, key in enumerate(ks)}
        return self._keys[n]

    def index(self, n):
        self.keys(n)
        return self._index[n]

    def dim(self, n):
        return self.k * len(self.keys(n))

    def scale_vec(self, n):
        return np.tile(self.scale, len(self.keys(n)))

    def moduli(self, n):
        return np.tile(np.array(self.gm.module.invariants, dtype=np.int64), len(self.keys(n)))

    def coboundary(self, n, sparse: bool = False):
        """Integer matrix of d: C^n -> C^(n+1) on v-coordinates (scipy CSR if ``sparse``)."""
        G = self.gm.group
        k = self.k
        g = G.order
        gi = G.index_of
        add = np.array([[gi[G.add(x, y)] for y in G.element_list] for x in G.element_list], dtype=np.int64)
        acts = np.stack([np.array(self.gm.action.table[x], dtype=np.int64).reshape(k, k) for x in G.element_list])
        rows = len(self.keys(n + 1))
        cols = len(self.keys(n))
        trip_r, trip_c, trip_v = [], [], []
        if rows and cols and k:
            # out keys as G-indices, in the order of itertools.product
            args = np.stack(np.meshgrid(*[np.arange(1, g)] * (n + 1), indexing="ij"), axis=-1).reshape(rows, n + 1)
            r = np.arange(rows)
            weights = (g - 1) ** np.arange(n - 1, -1, -1)
            ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")

            def put(keys, blocks):
                # keys with an entry equal to 1 index a vanishing normalized cochain
                ok = (keys > 0).all(axis=1)
                col = ((keys[ok] - 1) * weights).sum(axis=1) if n else np.zeros(ok.sum(), dtype=np.int64)
                blocks = np.broadcast_to(blocks[ok] if blocks.ndim == 3 else blocks, (len(col), k, k))
                trip_r.append((r[ok][:, None, None] * k + ii).ravel())
                trip_c.append((col[:, None, None] * k + jj).ravel())
                trip_v.append(blocks.ravel())

            # s . f(args[1:])
            put(args[:, 1:], acts[args[:, 0]])
            for i in range(n):
                merged = np.concatenate([args[:, :i], add[args[:, i], args[:, i + 1]][:, None], args[:, i + 2:]], axis=1)
                put(merged, np.eye(k, dtype=np.int64) * (-1) ** (i + 1))
            put(args[:, :n], np.eye(k, dtype=np.int64) * (-1) ** (n + 1))
        cat = (lambda xs: np.concatenate(xs)) if trip_r else (lambda xs: np.zeros(0, dtype=np.int64))
        mat = scipy.sparse.coo_matrix((cat(trip_v), (cat(trip_r), cat(trip_c))), shape=(rows * k, cols * k), dtype=np.int64).tocsr()
        mat.sum_duplicates()
        return mat if sparse else mat.toarray()

    def to_y(self, v, n):
        return (np.asarray(v, dtype=np.int64) * self.scale_vec(n)) % self.e

    def to_v(self, y, n):
        return (np.asarray(y, dtype=np.int64) // self.scale_vec(n)) % self.moduli(n)

    def cocycle_space(self, n) -> list[np.ndarray]:
        """Generators of Z^n in y-coordinates."""
        e = self.e
        d = self.coboundary(n, sparse=True)
        if d.shape[0] == 0:
            gens = [np.eye(d.shape[1], dtype=np.int64)[:, i] for i in range(d.shape[1])]
        else:
            row_scale = self.scale_vec(n + 1)
            if (row_scale != 1).any():
                d = scipy.sparse.diags(row_scale) @ d
            gens = _modlin.kernel_mod(d, e)
        return [self.to_y(g, n) for g in gens]

    def coboundary_space(self, n) -> list[np.ndarray]:
        if n == 0:
            return []
        d = self.coboundary(n - 1)
        row_scale = self.scale_vec(n)
        return [(d[:, j] * row_scale) % self.e for j in range(d.shape[1])]

    def vector(self, cochain: Mapping, n) -> np.ndarray:
        M = self.gm.module
        v = np.zeros(self.dim(n), dtype=np.int64)
        idx = self.index(n)
        for key, val in cochain.items():
            key = tuple(tuple(x) for x in key)
            if key not in idx:
                if any(val):
                    raise CohomologyError(f"cochain is not normalized at {key}")
                continue
            j = idx[key]
            v[j * self.k:(j + 1) * self.k] = M.reduce(val)
        return v

    def cochain(self, v, n) -> Cochain:
        out = {}
        for j, key in enumerate(self.keys(n)):
            val = tuple(int(x) for x in v[j * self.k:(j + 1) * self.k])
            if any(val):
                out[key] = val
        return out


@dataclass
class CohomologyResult:
    """H^n(G, M) with a way to move between classes and cocycles."""

    degree: int
    group: FiniteAbelianGroup
    gmodule: GModule
    z_orders: list[int]
    b_order: int
    _complex: _Complex = field(repr=False)
    _zstruct: object = field(repr=False)
    _proj: object = field(repr=False)

    @property
    def invariants(self) -> tuple[int, ...]:
        return self.group.invariants

    @property
    def order(self) -> int:
        return self.group.order

    def cocycle_of(self, cls: Sequence[int]) -> Cochain:
        """A normalized cocycle representing the class ``cls``."""
        cls = self.group.check(cls)
        zc = self._proj.lift(cls)
        y = self._zstruct.combine(zc) if self.z_orders else np.zeros(self._complex.dim(self.degree), dtype=np.int64)
        return self._complex.cochain(self._complex.to_v(y, self.degree), self.degree)

    @cached_property
    def representatives(self) -> list[Cochain]:
        return [self.cocycle_of(g) for g in self.group.gens()]

    def is_cocycle(self, cochain: Mapping) -> bool:
        c = self._complex
        v = c.vector(cochain, self.degree)
        d = c.coboundary(self.degree, sparse=True)
        m = c.moduli(self.degree + 1)
        return not ((d @ v) % m).any()

    def classify(self, cochain: Mapping) -> Element:
        """Class of a normalized cocycle."""
        c = self._complex
        if not self.is_cocycle(cochain):
            raise CohomologyError("not a cocycle")
        if not self.z_orders:
            return self.group.zero
        y = c.to_y(c.vector(cochain, self.degree), self.degree)
        return self._proj(self._zstruct.coords(y))


def cohomology(gm: GModule, n: int, max_group: int = MAX_H2_GROUP) -> CohomologyResult:
    """H^n(G, M) for n <= 2; H^2 refuses |G| > ``max_group`` unless M is trivial."""
    if n not in (0, 1, 2):
        raise DegreeUnsupported(f"degree {n} is not supported (only 0, 1, 2)")
    if n == 2 and gm.module.order > 1 and gm.group.order > max_group:
        raise GroupTooLarge(f"H^2 is limited to |G| <= {max_group}")
    c = _Complex(gm)
    e = c.e
    dim = c.dim(n)
    if dim == 0:
        triv = FiniteAbelianGroup(())
        _, proj = from_presentation(0, [])
        return CohomologyResult(n, triv, gm, [], 1, c, None, proj)
    zgens = c.cocycle_space(n)
    st = _modlin.span_structure(zgens, dim, e)
    orders = st.orders
    rels = [[o if i == j else 0 for j in range(len(orders))] for i, o in enumerate(orders)]
    bgens = c.coboundary_space(n)
    bcoords = [st.coords(b) for b in bgens if b.any()] if orders else []
    h, proj = from_presentation(len(orders), rels + bcoords)
    z_order = int(np.prod([int(o) for o in orders], dtype=object)) if orders else 1
    return CohomologyResult(n, h, gm, list(orders), z_order // h.order, c, st, proj)


def hom_group(g: FiniteAbelianGroup, m: FiniteAbelianGroup) -> FiniteAbelianGroup:
    """Hom(G, M) = sum_i M[d_i], computed from the d_i-torsion of M."""
    orders = []
    for d in g.invariants:
        mult = Homomorphism.from_images(m, m, [m.scale(d, x) for x in m.gens()])
        tor, _ = hom_kernel(mult)
        orders += list(tor.invariants)
    return FiniteAbelianGroup.from_orders(orders)


def hom_identity_check(gm: GModule) -> bool:
    """H^1(G, M) agrees with Hom(G, M) for a trivial action."""
    if not gm.action.is_trivial:
        raise NontrivialAction("H^1 = Hom needs a trivial action")
    return cohomology(gm, 1).invariants == hom_group(gm.group, gm.module).invariants


def _endo(m: FiniteAbelianGroup, mat) -> Homomorphism:
    return Homomorphism(m, m, tuple(tuple(r) for r in mat))


def tate_orders(gm: GModule, sigma: Element) -> tuple[int, int]:
    """|M^G / N M| and |ker N / (sigma - 1) M| for cyclic G generated by sigma."""
    G, M = gm.group, gm.module
    sigma = G.check(sigma)
    if G.rank > 1 or G.element_order(sigma) != G.order:
        raise NotCyclic(f"{sigma} does not generate {G}")
    k = M.rank
    if k == 0:
        return 1, 1
    s = np.array(gm.action.table[sigma], dtype=object).reshape(k, k)
    ident = np.eye(k, dtype=object)
    norm = np.zeros((k, k), dtype=object)
    p = ident.copy()
    for _ in range(G.order):
        norm = norm + p
        p = s.dot(p)
    n_hom = _endo(M, norm.tolist())
    d_hom = _endo(M, (s - ident).tolist())
    ker_d = hom_kernel(d_hom)[0].order
    ker_n = hom_kernel(n_hom)[0].order
    im_n = n_hom.image()[0].order
    im_d = d_hom.image()[0].order
    return ker_d // im_n, ker_n // im_d


def herbrand_quotient(gm: GModule, sigma: Element) -> Fraction:
    h0, h1 = tate_orders(gm, sigma)
    return Fraction(h0, h1)


@dataclass
class InfResReport:
    h1_quotient: tuple[int, ...]
    h1_group: tuple[int, ...]
    h1_subgroup: tuple[int, ...]
    inflation_injective: bool
    exact: bool
    restriction_of_inflation_zero: bool

    @property
    def ok(self) -> bool:
        return self.inflation_injective and self.exact and self.restriction_of_inflation_zero


def _fixed_submodule(gm: GModule, h_elems: Sequence[Element]):
    """M^H by direct enumeration of M."""
    M = gm.module
    act = gm.action.act
    fixed = [x for x in M.element_list if all(act(h, x) == x for h in h_elems)]
    return subgroup_generated(M, fixed)


def inflation_restriction(gm: GModule, h_gens: Sequence[Sequence[int]]) -> InfResReport:
    """0 -> H^1(G/H, M^H) -> H^1(G, M) -> H^1(H, M), checked for exactness."""
    G, M = gm.group, gm.module
    try:
        h_gens = [G.check(h) for h in h_gens]
    except ValueError as exc:
        raise NotASubgroup(str(exc)) from None
    act = gm.action.act
    hsub, hemb = subgroup_generated(G, h_gens)
    q, pi = quotient(G, h_gens)
    mh, mh_emb = _fixed_submodule(gm, h_gens)
    mh_coords = {mh_emb(z): z for z in mh.elements()}
    glift = {}
    for x in G.element_list:
        glift.setdefault(pi(x), x)
    q_mats = []
    for g in q.gens():
        s = glift[g]
        cols = [mh_coords[act(s, mh_emb(z))] for z in mh.gens()]
        q_mats.append([[cols[j][i] for j in range(mh.rank)] for i in range(mh.rank)])
    gm_q = GModule(GAction(q, mh, q_mats))
    h_mats = [gm.action.table[hemb(z)] for z in hsub.gens()]
    gm_h = GModule(GAction(hsub, M, [list(map(list, m)) for m in h_mats]))
    hq, hg, hh = cohomology(gm_q, 1), cohomology(gm, 1), cohomology(gm_h, 1)

    def inflate(f):
        return {(s,): mh_emb(f.get((pi(s),), mh.zero)) for s in G.element_list[1:]}

    def restrict(f):
        return {(z,): f.get((hemb(z),), M.zero) for z in hsub.element_list[1:]}

    inf = Homomorphism.from_images(hq.group, hg.group, [hg.classify(inflate(hq.cocycle_of(x))) for x in hq.group.gens()])
    res = Homomorphism.from_images(hg.group, hh.group, [hh.classify(restrict(hg.cocycle_of(x))) for x in hg.group.gens()])
    inj = inf.is_injective()
    comp_zero = all(not any(res(inf(x))) for x in hq.group.gens())
    im_order = inf.image()[0].order
    ker_order = hom_kernel(res)[0].order
    return InfResReport(
        h1_quotient=hq.invariants,
        h1_group=hg.invariants,
        h1_subgroup=hh.invariants,
        inflation_injective=inj,
        exact=comp_zero and im_order == ker_order,
        restriction_of_inflation_zero=comp_zero,
    )


def class_label(cls: Sequence[int]) -> str:
    return "c" + "-".join(str(x) for x in cls) if cls else "c"


def enumerate_extensions(
    action: GAction, cap: int | None = None, seed: int = 0, validate: bool = True, max_group: int = MAX_H2_GROUP
) -> list[ExtensionGroup]:
    """One extension per class of H^2(G, A), in lexicographic class order.

    With ``cap`` set and more classes than ``cap``, a seeded sample of the
    classes (always containing the split class) is returned instead.
    """
    h2 = cohomology(GModule(action), 2, max_group=max_group)
    classes = list(h2.group.elements()) if cap is None or h2.order <= cap else _sample_classes(h2.group, cap, seed)
    out = []
    for cls in classes:
        coc = h2.cocycle_of(cls)
        out.append(ExtensionGroup(TwoCocycle(action, coc, validate=validate), name=class_label(cls)))
    return out


def _sample_classes(h: FiniteAbelianGroup, cap: int, seed: int) -> list[Element]:
    rng = random.Random(seed)
    picked = {h.zero}
    while len(picked) < cap:
        picked.add(tuple(rng.randrange(d) for d in h.invariants))
    return sorted(picked)
