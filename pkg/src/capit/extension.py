"""Metabelian groups U presented as extensions 1 -> A -> U -> G -> 1.

Both A and G are finite abelian.  An element of U is a pair ``(a, s)`` of an
element of A and an element of G, standing for ``a . u_s``; the group law is

    (a, s) (b, t) = (a + s.b + c(s, t), s + t)

for a normalized 2-cocycle ``c``.  G acts on A on the left,
``s.a = u_s a u_s^-1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from capit import _modlin
from capit.abgroup import (
    Element,
    FiniteAbelianGroup,
    Homomorphism,
    IncompatibleHom,
    from_presentation,
    invariants_from_order_counts,
    quotient,
    span_set,
    subgroup_generated,
)

UElement = tuple[Element, Element]


class ExtensionError(ValueError):
    pass


class InvalidAction(ExtensionError):
    pass


class InvalidCocycle(ExtensionError):
    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


class NotACocycle(ExtensionError):
    pass


class DerivedNotContained(ExtensionError):
    pass


def _mat_apply(m, x, moduli) -> Element:
    return tuple(sum(r[j] * x[j] for j in range(len(x))) % n for r, n in zip(m, moduli))


def _mat_mul(a, b, moduli):
    k = len(b)
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) % moduli[i] for j in range(cols)) for i in range(len(a))
    )


class GAction:
    """Action of G on A given by one integer matrix per generator of G."""

    def __init__(self, group: FiniteAbelianGroup, module: FiniteAbelianGroup, matrices: Sequence):
        self.group = group
        self.module = module
        k = module.rank
        if len(matrices) != group.rank:
            raise InvalidAction(f"expected {group.rank} action matrices, got {len(matrices)}")
        mats = []
        for idx, m in enumerate(matrices):
            m = [list(r) for r in m] if k else []
            try:
                h = Homomorphism(module, module, tuple(map(tuple, m)) if k else ())
            except IncompatibleHom as exc:
                raise InvalidAction(f"matrix {idx} is not an endomorphism of {module}: {exc}") from None
            mats.append(h.matrix)
        self.matrices = tuple(mats)
        self._validate()

    def _validate(self):
        A = self.module
        moduli = A.invariants
        ident = tuple(tuple(int(i == j) for j in range(A.rank)) for i in range(A.rank))
        for idx, (m, d) in enumerate(zip(self.matrices, self.group.invariants)):
            images = {_mat_apply(m, x, moduli) for x in A.elements()}
            if len(images) != A.order:
                raise InvalidAction(f"matrix {idx} is not invertible on {A}")
            p = ident
            for _ in range(d):
                p = _mat_mul(m, p, moduli)
            if p != ident:
                raise InvalidAction(f"matrix {idx} does not have order dividing {d}")
        for i, j in itertools.combinations(range(len(self.matrices)), 2):
            if _mat_mul(self.matrices[i], self.matrices[j], moduli) != _mat_mul(
                self.matrices[j], self.matrices[i], moduli
            ):
                raise InvalidAction(f"matrices {i} and {j} do not commute")

    @classmethod
    def trivial(cls, group: FiniteAbelianGroup, module: FiniteAbelianGroup) -> GAction:
        ident = [[int(i == j) for j in range(module.rank)] for i in range(module.rank)]
        return cls(group, module, [ident] * group.rank)

    @cached_property
    def table(self) -> dict[Element, tuple]:
        A = self.module
        moduli = A.invariants
        ident = tuple(tuple(int(i == j) for j in range(A.rank)) for i in range(A.rank))
        powers = []
        for m, d in zip(self.matrices, self.group.invariants):
            ps = [ident]
            for _ in range(d - 1):
                ps.append(_mat_mul(m, ps[-1], moduli))
            powers.append(ps)
        out = {}
        for s in self.group.elements():
            p = ident
            for i, e in enumerate(s):
                p = _mat_mul(powers[i][e], p, moduli)
            out[s] = p
        return out

    @cached_property
    def is_trivial(self) -> bool:
        ident = tuple(tuple(int(i == j) for j in range(self.module.rank)) for i in range(self.module.rank))
        return all(m == ident for m in self.matrices)

    def act(self, sigma: Element, a: Element) -> Element:
        return _mat_apply(self.table[sigma], a, self.module.invariants)

    # GModuleLike protocol, so group ring elements can act on A
    @property
    def acting_group(self) -> FiniteAbelianGroup:
        return self.group

    def add(self, x, y):
        return self.module.add(x, y)

    def scale(self, n, x):
        return self.module.scale(n, x)

    def zero_element(self):
        return self.module.zero

    def __eq__(self, other):
        return (
            isinstance(other, GAction)
            and (self.group, self.module, self.matrices) == (other.group, other.module, other.matrices)
        )

    def __hash__(self):
        return hash((self.group, self.module, self.matrices))

    def __repr__(self):
        return f"GAction({self.group}, {self.module}, {self.matrices})"


class TwoCocycle:
    """Normalized 2-cocycle G x G -> A for a given action.

    Input that is not normalized is shifted by the coboundary of the constant
    cochain ``c(1, 1)`` before the cocycle identity is checked.
    """

    def __init__(
        self,
        action: GAction,
        table: Mapping[tuple[Element, Element], Sequence[int]] | None = None,
        validate: bool = True,
    ):
        self.action = action
        G, A = action.group, action.module
        raw: dict[tuple[Element, Element], Element] = {}
        for (s, t), val in (table or {}).items():
            try:
                key = (G.check(s), G.check(t))
                raw[key] = A.reduce(val)
            except ValueError as exc:
                raise InvalidCocycle(f"bad cocycle entry ({s}, {t}): {exc}") from None
        c11 = raw.get((G.zero, G.zero), A.zero)
        vals = {}
        for key, val in raw.items():
            s, _ = key
            if any(c11):
                val = A.sub(val, action.act(s, c11))
            if any(val):
                vals[key] = val
        self.values = vals
        if validate:
            self._check()

    def __call__(self, s: Element, t: Element) -> Element:
        return self.values.get((s, t), self.action.module.zero)

    def _check(self):
        G, A = self.action.group, self.action.module
        z = G.zero
        for (s, t), _ in self.values.items():
            if s == z or t == z:
                raise InvalidCocycle(f"cocycle not normalized at ({s}, {t})", (s, t, None))
        if not self.values:
            return
        # all triples at once on coordinate arrays
        gi, gel = G.index_of, G.element_list
        n, k = len(gel), A.rank
        add = np.array([[gi[G.add(x, y)] for y in gel] for x in gel], dtype=np.int64)
        c = np.zeros((n, n, k), dtype=np.int64)
        for (x, y), v in self.values.items():
            c[gi[x], gi[y]] = v
        acts = np.stack([np.array(self.action.table[x], dtype=np.int64).reshape(k, k) for x in gel])
        lhs = np.einsum("sij,trj->stri", acts, c)
        lhs += c[np.arange(n)[:, None, None], add[None, :, :]]
        lhs -= c[add[:, :, None], np.arange(n)[None, None, :]]
        lhs -= c[:, :, None, :]
        bad = np.argwhere((lhs % np.array(A.invariants, dtype=np.int64)).any(axis=-1))
        if len(bad):
            i, j, r = (int(x) for x in bad[0])
            s, t, u = gel[i], gel[j], gel[r]
            raise InvalidCocycle(f"cocycle identity fails at ({s}, {t}, {u})", (s, t, u))

    def entries(self) -> list[tuple[Element, Element, Element]]:
        return sorted((s, t, v) for (s, t), v in self.values.items())

    def __eq__(self, other):
        return isinstance(other, TwoCocycle) and self.action == other.action and self.values == other.values

    def __hash__(self):
        return hash((self.action, tuple(sorted(self.values.items()))))


FAST_LIMIT = 256
TABLE_LIMIT = 2048


@dataclass
class _Tables:
    ai: dict
    gi: dict
    ael: list
    gel: list
    add_a: list
    neg_a: list
    add_g: list
    neg_g: list
    act: list
    coc: list
    np_add_a: np.ndarray
    np_act: np.ndarray
    np_coc: np.ndarray
    np_add_g: np.ndarray


class ExtensionGroup:
    def __init__(self, cocycle: TwoCocycle, name: str | None = None):
        self.cocycle = cocycle
        self.action = cocycle.action
        self.A = cocycle.action.module
        self.G = cocycle.action.group
        self.name = name

    def __repr__(self):
        return f"ExtensionGroup(A={self.A}, G={self.G}, name={self.name!r})"

    @property
    def order(self) -> int:
        return self.A.order * self.G.order

    @property
    def index(self) -> int:
        return self.G.order

    @property
    def identity(self) -> UElement:
        return (self.A.zero, self.G.zero)

    def elements(self):
        """Lexicographic in (A-coords, G-coords)."""
        return ((a, s) for a in self.A.elements() for s in self.G.elements())

    @cached_property
    def element_list(self) -> list[UElement]:
        return list(self.elements())

    def check(self, x) -> UElement:
        try:
            a, s = x
            return (self.A.check(a), self.G.check(s))
        except (TypeError, ValueError) as exc:
            from capit.abgroup import ElementOutOfGroup

            raise ElementOutOfGroup(f"{x!r} is not an element of {self}: {exc}") from None

    @cached_property
    def tables(self):
        """Index tables for the group law (None when A or G is large)."""
        A, G = self.A, self.G
        if A.order > FAST_LIMIT or G.order > FAST_LIMIT:
            return None
        ai, gi = A.index_of, G.index_of
        ael, gel = A.element_list, G.element_list
        ea = np.array(ael, dtype=np.int64).reshape(len(ael), A.rank)
        eg = np.array(gel, dtype=np.int64).reshape(len(gel), G.rank)
        add_a = _encode((ea[:, None, :] + ea[None, :, :]).reshape(len(ael) ** 2, A.rank) % _mods(A), A.invariants)
        add_g = _encode((eg[:, None, :] + eg[None, :, :]).reshape(len(gel) ** 2, G.rank) % _mods(G), G.invariants)
        mats = self.action.table
        act = np.stack([_encode((ea @ np.array(mats[s], dtype=np.int64).reshape(A.rank, A.rank).T) % _mods(A), A.invariants) for s in gel]) if gel else np.zeros((0, len(ael)), dtype=np.int64)
        coc = np.zeros((len(gel), len(gel)), dtype=np.int64)
        for (s, t), v in self.cocycle.values.items():
            coc[gi[s], gi[t]] = ai[v]
        na, ng = len(ael), len(gel)
        add_a, add_g = add_a.reshape(na, na), add_g.reshape(ng, ng)
        return _Tables(
            ai=ai,
            gi=gi,
            ael=ael,
            gel=gel,
            add_a=add_a.tolist(),
            neg_a=np.argmax(add_a == 0, axis=1).tolist(),
            add_g=add_g.tolist(),
            neg_g=np.argmax(add_g == 0, axis=1).tolist(),
            act=act.tolist(),
            coc=coc.tolist(),
            np_add_a=add_a,
            np_act=act,
            np_coc=coc,
            np_add_g=add_g,
        )

    @cached_property
    def index_of(self) -> dict[UElement, int]:
        return {x: i for i, x in enumerate(self.element_list)}

    @cached_property
    def mul_table(self) -> np.ndarray | None:
        """Cayley table on element indices (index = a_index * |G| + s_index)."""
        tb = self.tables
        if tb is None or self.order > TABLE_LIMIT:
            return None
        ng = len(tb.gel)
        add_a, act, coc, add_g = tb.np_add_a, tb.np_act, tb.np_coc, tb.np_add_g
        idx = np.arange(self.order)
        ia, ig = idx // ng, idx % ng
        a = add_a[add_a[ia[:, None], act[ig[:, None], ia[None, :]]], coc[ig[:, None], ig[None, :]]]
        return a * ng + add_g[ig[:, None], ig[None, :]]

    @cached_property
    def inverse_index(self) -> np.ndarray:
        return np.argmax(self.mul_table == 0, axis=1)

    @cached_property
    def derived_mask(self) -> np.ndarray:
        """Boolean mask of U' on element indices, closed from all commutators."""
        t, inv = self.mul_table, self.inverse_index
        comm = np.unique(t[t, inv[t.T]])
        mask = np.zeros(self.order, dtype=bool)
        mask[comm] = True
        while True:
            members = np.flatnonzero(mask)
            grown = mask.copy()
            grown[np.unique(t[members[:, None], members[None, :]])] = True
            if grown.sum() == mask.sum():
                return mask
            mask = grown

    def power_index(self, n: int) -> np.ndarray:
        """Index of x^n for every element x (n >= 0)."""
        t = self.mul_table
        out = np.zeros(self.order, dtype=t.dtype)
        base = np.arange(self.order)
        while n:
            if n & 1:
                out = t[out, base]
            base = t[base, base]
            n >>= 1
        return out

    def mul(self, x: UElement, y: UElement) -> UElement:
        (a, s), (b, t) = x, y
        tb = self.tables
        if tb is not None:
            add = tb.add_a
            i, j = tb.gi[s], tb.gi[t]
            return (tb.ael[add[add[tb.ai[a]][tb.act[i][tb.ai[b]]]][tb.coc[i][j]]], tb.gel[tb.add_g[i][j]])
        A = self.A
        return (A.add(A.add(a, self.action.act(s, b)), self.cocycle(s, t)), self.G.add(s, t))

    def inverse(self, x: UElement) -> UElement:
        a, s = x
        tb = self.tables
        if tb is not None:
            i = tb.gi[s]
            j = tb.neg_g[i]
            return (tb.ael[tb.neg_a[tb.act[j][tb.add_a[tb.ai[a]][tb.coc[i][j]]]]], tb.gel[j])
        A, G = self.A, self.G
        si = G.neg(s)
        return (A.neg(self.action.act(si, A.add(a, self.cocycle(s, si)))), si)

    def power(self, x: UElement, n: int) -> UElement:
        if n < 0:
            x, n = self.inverse(x), -n
        out = self.identity
        base = x
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def commutator(self, x: UElement, y: UElement) -> UElement:
        return self.mul(self.mul(x, y), self.inverse(self.mul(y, x)))

    def embed(self, a: Element) -> UElement:
        return (a, self.G.zero)

    def section(self, s: Element) -> UElement:
        return (self.A.zero, s)

    def generators(self) -> list[UElement]:
        """Generators of A followed by the lifts u_g of the generators of G."""
        return [self.embed(a) for a in self.A.gens()] + [self.section(s) for s in self.G.gens()]

    @cached_property
    def derived(self):
        return derived_subgroup(self)

    @cached_property
    def derived_set(self) -> frozenset[Element]:
        sub, emb = self.derived
        return frozenset(emb(x) for x in sub.elements())

    @cached_property
    def derived_gens(self) -> list[Element]:
        sub, emb = self.derived
        return [emb(x) for x in sub.gens()]

    @cached_property
    def abelianization(self):
        return abelianization(self)

    @cached_property
    def resolvent(self):
        return resolvent(self)

    @cached_property
    def crossed(self):
        return CrossedHomomorphisms(self)


def multiply(ext: ExtensionGroup, x, y) -> UElement:
    return ext.mul(ext.check(x), ext.check(y))


def derived_subgroup(ext: ExtensionGroup) -> tuple[FiniteAbelianGroup, Homomorphism]:
    """U' inside A, from the commutators [a, u_t] and [u_s, u_t]."""
    A, G, act, c = ext.A, ext.G, ext.action.act, ext.cocycle
    gens = []
    for t in G.gens():
        for a in A.gens():
            gens.append(A.sub(act(t, a), a))
    for s in G.element_list:
        for t in G.element_list:
            gens.append(A.sub(c(s, t), c(t, s)))
    gens = sorted({x for x in gens if any(x)})
    return subgroup_generated(A, gens)


@dataclass
class Abelianization:
    """U/U' together with the projection from U and chosen lifts."""

    group: FiniteAbelianGroup
    ext: ExtensionGroup
    _proj: Callable[[UElement], Element]
    coords: np.ndarray | None = None

    def __call__(self, x: UElement) -> Element:
        if self.coords is not None:
            return tuple(int(c) for c in self.coords[self.ext.index_of[x]])
        return self._proj(x)

    @cached_property
    def codes(self) -> np.ndarray | None:
        """Index of the class of each element in ``group.element_list``."""
        if self.coords is None:
            return None
        return _encode(self.coords, self.group.invariants)

    @cached_property
    def lifts(self) -> dict[Element, UElement]:
        if self.coords is not None:
            # first element of each class, as in the loop below
            codes, first = np.unique(self.codes, return_index=True)
            els, uel = self.group.element_list, self.ext.element_list
            return {els[int(c)]: uel[int(i)] for c, i in zip(codes, first)}
        out: dict[Element, UElement] = {}
        for x in self.ext.element_list:
            out.setdefault(self(x), x)
        return out

    def lift(self, xi: Element) -> UElement:
        return self.lifts[xi]


def _mods(group: FiniteAbelianGroup) -> np.ndarray:
    return np.array(group.invariants, dtype=np.int64)


def _encode(coords: np.ndarray, invariants) -> np.ndarray:
    code = np.zeros(len(coords), dtype=np.int64)
    for j, d in enumerate(invariants):
        code = code * d + coords[:, j]
    return code


def coset_invariants(ext: ExtensionGroup) -> tuple[int, ...]:
    """Invariant factors of U/U' by counting classes killed by each n.

    Uses only the group law and the derived set, not the resolvent.
    """
    der = ext.derived_set
    order = ext.order // len(der)
    if ext.mul_table is not None:
        ng = ext.G.order
        ael = ext.A.element_list
        in_der = np.array([i % ng == 0 and ael[i // ng] in der for i in range(ext.order)])
        return invariants_from_order_counts(order, lambda n: int(in_der[ext.power_index(n)].sum()) // len(der))

    def killed(n):
        cnt = 0
        for x in ext.element_list:
            a, s = ext.power(x, n)
            if not any(s) and a in der:
                cnt += 1
        return cnt // len(der)

    return invariants_from_order_counts(order, killed)


def abelianization(ext: ExtensionGroup, cross_check: bool = True) -> Abelianization:
    """U/U' through the resolvent module, checked against coset counting."""
    res = ext.resolvent
    q, proj = res.quotient
    if cross_check:
        inv = coset_invariants(ext)
        if inv != q.invariants:
            raise ArithmeticError(f"abelianization mismatch: resolvent {q.invariants} vs cosets {inv}")

    def project(x):
        return proj(res.log(x))

    coords = None
    if ext.order <= TABLE_LIMIT and q.rank:
        inv = np.array(q.invariants, dtype=np.int64)
        p = np.array([[x % d for x in row] for row, d in zip(proj.matrix, q.invariants)], dtype=np.int64)
        coords = (res.log_matrix() @ p.T) % inv
    elif ext.order <= TABLE_LIMIT:
        coords = np.zeros((ext.order, 0), dtype=np.int64)
    return Abelianization(q, ext, project, coords)


class ResolventModule:
    """B = A (+) I_G with the twisted action

        s * a = s.a,    s * (t - 1) = c(s, t) + (st - 1) - (s - 1).

    Vectors are integer lists: the first ``A.rank`` entries are A-coordinates
    (kept reduced), the remaining ``|G| - 1`` entries are the coefficients of
    the symbols (t - 1), t != 1, in the enumeration order of G.
    """

    def __init__(self, ext: ExtensionGroup):
        self.ext = ext
        self.ka = ext.A.rank
        self.symbols = ext.G.element_list[1:]
        self._sym_index = {t: self.ka + i for i, t in enumerate(self.symbols)}
        self.rank = self.ka + len(self.symbols)

    @property
    def acting_group(self):
        return self.ext.G

    def zero_element(self):
        return (0,) * self.rank

    def _norm(self, v):
        A = self.ext.A
        return tuple(x % d for x, d in zip(v[: self.ka], A.invariants)) + tuple(v[self.ka:])

    def add(self, x, y):
        return self._norm([a + b for a, b in zip(x, y)])

    def scale(self, n, x):
        return self._norm([n * a for a in x])

    def from_a(self, a: Element):
        return tuple(a) + (0,) * len(self.symbols)

    def symbol(self, t: Element):
        v = [0] * self.rank
        if any(t):
            v[self._sym_index[t]] = 1
        return tuple(v)

    def basis(self):
        return [self.from_a(a) for a in self.ext.A.gens()] + [self.symbol(t) for t in self.symbols]

    def log(self, x: UElement):
        a, t = x
        v = list(self.from_a(a))
        if any(t):
            v[self._sym_index[t]] += 1
        return tuple(v)

    def act(self, s: Element, b):
        ext = self.ext
        A, G = ext.A, ext.G
        a = b[: self.ka]
        out = list(ext.action.act(s, tuple(a))) + [0] * len(self.symbols)
        s_idx = self._sym_index.get(s)
        for t, n in zip(self.symbols, b[self.ka:]):
            if not n:
                continue
            cst = ext.cocycle(s, t)
            for i in range(self.ka):
                out[i] += n * cst[i]
            st = G.add(s, t)
            if any(st):
                out[self._sym_index[st]] += n
            if s_idx is not None:
                out[s_idx] -= n
        return self._norm(out)

    def trace(self, b) -> Element:
        """sum_{s in G} s * b, which lies in A."""
        total = self.zero_element()
        for s in self.ext.G.element_list:
            total = self.add(total, self.act(s, b))
        if any(total[self.ka:]):
            raise ArithmeticError("trace left the A-summand")
        return tuple(total[: self.ka])

    @cached_property
    def trace_matrix(self) -> np.ndarray:
        """Columns are the traces of the unit vectors of Z^rank."""
        cols = [self.trace(tuple(int(i == j) for i in range(self.rank))) for j in range(self.rank)]
        return np.array(cols, dtype=np.int64).reshape(self.rank, self.ka).T

    def log_matrix(self) -> np.ndarray:
        """log(x) for every element of U, one row per element index."""
        ext = self.ext
        ng = ext.G.order
        idx = np.arange(ext.order)
        logs = np.zeros((ext.order, self.rank), dtype=np.int64)
        if self.ka:
            logs[:, : self.ka] = np.array(ext.A.element_list, dtype=np.int64)[idx // ng]
        sym = idx % ng
        logs[sym > 0, self.ka + sym[sym > 0] - 1] = 1
        return logs

    def trace_all(self) -> np.ndarray:
        """Trace of log(x) for every element, as reduced A-coordinates."""
        mods = np.array(self.ext.A.invariants, dtype=np.int64)
        return (self.log_matrix() @ self.trace_matrix.T) % mods if self.ka else np.zeros((self.ext.order, 0), dtype=np.int64)

    def ig_b_generators(self) -> list[tuple[int, ...]]:
        """Z-module generators (g - 1) * beta of I_G*B, g over generators of G."""
        gens = []
        for g in self.ext.G.gens():
            for beta in self.basis():
                gb = self.act(g, beta)
                gens.append(tuple(x - y for x, y in zip(gb, beta)))
        return gens

    def _relations(self):
        rels = []
        for i, d in enumerate(self.ext.A.invariants):
            r = [0] * self.rank
            r[i] = d
            rels.append(r)
        return rels + [list(v) for v in self.ig_b_generators()]

    @cached_property
    def quotient(self):
        """B / I_G*B with its projection from Z^rank."""
        return from_presentation(self.rank, self._relations())

    def a_intersection(self) -> tuple[FiniteAbelianGroup, Homomorphism]:
        """A intersected with I_G*B, as a subgroup of A."""
        A = self.ext.A
        if self.ka == 0:
            return subgroup_generated(A, [])
        rels = self._relations()
        e = self.ext.order
        # combinations of relations whose symbol part vanishes mod e
        tpart = np.array([[r[j] % e for r in rels] for j in range(self.ka, self.rank)], dtype=np.int64)
        if tpart.shape[0] == 0:
            combos = [[int(i == j) for j in range(len(rels))] for i in range(len(rels))]
        else:
            combos = [list(map(int, g)) for g in _modlin.kernel_mod(tpart, e)]
        elems = []
        for y in combos:
            a = [sum(y[i] * rels[i][j] for i in range(len(rels))) for j in range(self.ka)]
            elems.append(A.reduce(a))
        return subgroup_generated(A, sorted({x for x in elems if any(x)}))


def resolvent(ext: ExtensionGroup) -> ResolventModule:
    return ResolventModule(ext)


def log_is_isomorphism(ext: ExtensionGroup) -> bool:
    """Check that x -> log(x) + I_G*B is a surjective homomorphism U -> B/I_G*B
    whose kernel is exactly U'."""
    ab = ext.abelianization
    q = ab.group
    els = ext.element_list
    img = {x: ab(x) for x in els}
    for x in els:
        for y in els:
            if img[ext.mul(x, y)] != q.add(img[x], img[y]):
                return False
    if len(set(img.values())) != q.order:
        return False
    kernel = {x for x in els if not any(img[x])}
    return kernel == {ext.embed(a) for a in ext.derived_set}


class UMap:
    """A map U -> U stored as a table."""

    def __init__(self, ext: ExtensionGroup, table: dict[UElement, UElement]):
        self.ext = ext
        self.table = table

    def __call__(self, x: UElement) -> UElement:
        return self.table[x]

    @cached_property
    def indices(self) -> np.ndarray:
        idx = self.ext.index_of
        return np.array([idx[self.table[x]] for x in self.ext.element_list], dtype=np.int64)

    def is_endomorphism(self) -> bool:
        ext = self.ext
        t = ext.mul_table
        if t is not None:
            g = self.indices
            return bool((g[t] == t[g[:, None], g[None, :]]).all())
        els = ext.element_list
        return all(self(ext.mul(x, y)) == ext.mul(self(x), self(y)) for x in els for y in els)

    def fixes_quotient(self) -> bool:
        return all(self(x)[1] == x[1] for x in self.ext.element_list)


def is_one_cocycle(ext: ExtensionGroup, f: Mapping[UElement, Element]) -> bool:
    A, act = ext.A, ext.action.act
    els = ext.element_list
    t = ext.mul_table
    if t is not None:
        tb = ext.tables
        fi = np.array([tb.ai[f[x]] for x in els], dtype=np.int64)
        bar = np.arange(ext.order) % ext.G.order
        rhs = tb.np_add_a[fi[:, None], tb.np_act[bar[:, None], fi[None, :]]]
        return bool((fi[t] == rhs).all())
    for x in els:
        for y in els:
            if f[ext.mul(x, y)] != A.add(f[x], act(x[1], f[y])):
                return False
    return True


def endomorphism_from_cocycle(ext: ExtensionGroup, f) -> UMap:
    """gamma(x) = f(x) x for a 1-cocycle f: U -> A (U acting by conjugation)."""
    if callable(f) and not isinstance(f, Mapping):
        f = {x: ext.A.reduce(f(x)) for x in ext.element_list}
    else:
        f = {ext.check(x): ext.A.reduce(v) for x, v in f.items()}
    if set(f) != set(ext.element_list):
        raise NotACocycle("cocycle must be defined on every element of U")
    if not is_one_cocycle(ext, f):
        raise NotACocycle("f(xy) != f(x) + x.f(y) for some pair")
    return UMap(ext, {x: ext.mul(ext.embed(f[x]), x) for x in ext.element_list})


class CrossedHomomorphisms:
    """Z^1(U, A) for the conjugation action, solved on a generating set of U.

    A 1-cocycle is determined by its values ``v`` on ``ext.generators()``;
    walking the Cayley graph expresses every f(x) as a linear form in ``v``
    (a ``ka x nvars`` matrix) and every edge off the search tree yields a
    constraint.  The solution set is stored as a direct sum of cyclic groups
    inside A^m.
    """

    def __init__(self, ext: ExtensionGroup):
        self.ext = ext
        A = ext.A
        self.gens = ext.generators()
        m = len(self.gens)
        ka = A.rank
        self.nvars = ka * m
        moduli = A.invariants
        e = A.exponent
        self.e = e
        nv = self.nvars
        self.var_moduli = list(moduli) * m
        self._mods = np.array(moduli, dtype=np.int64)
        if ext.mul_table is not None:
            forms, constraints = self._forms_table()
        else:
            forms, constraints = self._forms_walk()
        self.form_array = forms
        if nv == 0:
            self.orders, self._basis = [], []
            return
        if len(constraints):
            kgens = _modlin.kernel_mod(constraints, e)
        else:
            kgens = [np.eye(nv, dtype=np.int64)[:, i] for i in range(nv)]
        # embed A^m into (Z/e)^nv by y_j = (e / d_j) v_j
        scale = np.array([e // d for d in self.var_moduli], dtype=np.int64)
        ys = [(np.asarray(g, dtype=np.int64) * scale) % e for g in kgens]
        st = _modlin.span_structure(ys, nv, e)
        self.orders = list(st.orders)
        self._basis = [
            tuple(int(y) // int(s) % d for y, s, d in zip(b, scale, self.var_moduli)) for b in st.basis
        ]

    def _acts(self) -> np.ndarray:
        ext = self.ext
        ka = ext.A.rank
        return np.stack(
            [np.array(ext.action.table[s], dtype=np.int64).reshape(ka, ka) for s in ext.G.element_list]
        )

    def _constraint_rows(self, diff: np.ndarray) -> np.ndarray:
        # rows of A-coordinate i live in Z/d_i; scale them into Z/e
        nv, e = self.nvars, self.e
        if nv == 0:
            return np.zeros((0, 0), dtype=np.int64)
        scale = np.array([e // d for d in self.ext.A.invariants], dtype=np.int64)
        rows = ((diff % self._mods[:, None]) * scale[:, None]).reshape(-1, nv) % e
        rows = rows[rows.any(axis=1)]
        return np.unique(rows, axis=0) if len(rows) else rows

    def _forms_table(self):
        ext = self.ext
        t = ext.mul_table
        n, ng = ext.order, ext.G.order
        ka, m, nv = ext.A.rank, len(self.gens), self.nvars
        gidx = np.array([ext.index_of[g] for g in self.gens], dtype=np.int64).reshape(m)
        acts = self._acts()
        mods = self._mods[:, None]
        forms = np.zeros((n, ka, nv), dtype=np.int64)
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = np.array([0], dtype=np.int64)
        while len(frontier) and m:
            ys = t[frontier][:, gidx].ravel()
            src = np.repeat(frontier, m)
            ks = np.tile(np.arange(m), len(frontier))
            fresh = ~seen[ys]
            new, first = np.unique(ys[fresh], return_index=True)
            src, ks = src[fresh][first], ks[fresh][first]
            # f(x g_k) = f(x) + x . f(g_k)
            forms[new] = forms[src]
            for k in range(m):
                sel = ks == k
                forms[new[sel], :, k * ka:(k + 1) * ka] += acts[src[sel] % ng]
            forms[new] %= mods
            seen[new] = True
            frontier = new
        if not m or not ka:
            return forms, np.zeros((0, nv), dtype=np.int64)
        pred = np.repeat(forms[:, None], m, axis=1)
        for k in range(m):
            pred[:, k, :, k * ka:(k + 1) * ka] += acts[np.arange(n) % ng]
        diff = pred - forms[t[:, gidx]]
        return forms, self._constraint_rows(diff.reshape(-1, ka, nv))

    def _forms_walk(self):
        ext = self.ext
        ka, m, nv = ext.A.rank, len(self.gens), self.nvars
        index = ext.index_of
        forms = np.zeros((ext.order, ka, nv), dtype=np.int64)
        seen = {ext.identity}
        order = [ext.identity]
        diffs = []
        head = 0
        while head < len(order):
            x = order[head]
            head += 1
            fx = forms[index[x]]
            act_m = np.array(ext.action.table[x[1]], dtype=np.int64).reshape(ka, ka)
            for k, g in enumerate(self.gens):
                y = ext.mul(x, g)
                new = fx.copy()
                new[:, k * ka:(k + 1) * ka] += act_m
                new %= self._mods[:, None]
                if y not in seen:
                    seen.add(y)
                    forms[index[y]] = new
                    order.append(y)
                else:
                    diffs.append(new - forms[index[y]])
        if not diffs:
            return forms, np.zeros((0, nv), dtype=np.int64)
        return forms, self._constraint_rows(np.stack(diffs))

    @property
    def size(self) -> int:
        out = 1
        for o in self.orders:
            out *= o
        return out

    def vector(self, coords: Sequence[int]) -> tuple[int, ...]:
        out = [0] * self.nvars
        for c, b in zip(coords, self._basis):
            for j in range(self.nvars):
                out[j] += c * b[j]
        return tuple(x % d for x, d in zip(out, self.var_moduli))

    def all_coords(self):
        return itertools.product(*(range(o) for o in self.orders))

    def value(self, v: Sequence[int], x: UElement) -> Element:
        row = (self.form_array[self.ext.index_of[x]] @ np.asarray(v, dtype=np.int64)) % self._mods
        return tuple(int(c) for c in row)

    def values_all(self, v: Sequence[int]) -> np.ndarray:
        """f(x) for every element, as reduced A-coordinates (one row per element index)."""
        if not self.nvars:
            return np.zeros((self.ext.order, self.ext.A.rank), dtype=np.int64)
        return (self.form_array @ np.asarray(v, dtype=np.int64)) % self._mods

    def cocycle(self, v: Sequence[int]) -> dict[UElement, Element]:
        vals = self.values_all(v)
        return {x: tuple(int(c) for c in vals[i]) for i, x in enumerate(self.ext.element_list)}


def rebase(ext: ExtensionGroup, sub_gens: Sequence[Element], name: str | None = None):
    """Present the same group U as an extension of U/A' by A'.

    ``sub_gens`` generate a subgroup A' of A with U' <= A'.  Returns the new
    extension and the isomorphism (as a dict) from old to new elements.
    """
    A = ext.A
    sub_gens = [A.check(a) for a in sub_gens]
    if not ext.derived_set <= span_set(A, sub_gens):
        raise DerivedNotContained("the subgroup does not contain U'")
    ab = ext.abelianization
    q = ab.group
    gp, pi = quotient(q, [ab(ext.embed(a)) for a in sub_gens])
    ap, emb = subgroup_generated(A, sub_gens)
    coords = {emb(z): z for z in ap.elements()}
    t = ext.mul_table
    els = ext.element_list
    if t is not None:
        pim = np.array(pi.matrix, dtype=np.int64).reshape(gp.rank, q.rank)
        phi_coords = (ab.coords @ pim.T) % np.array(gp.invariants, dtype=np.int64) if gp.rank else ab.coords[:, :0]
        phi_code = _encode(phi_coords, gp.invariants)
        _, first = np.unique(phi_code, return_index=True)
        sec_idx = {g: int(first[i]) for i, g in enumerate(gp.element_list)}
        inv = ext.inverse_index
        phi = {x: gp.element_list[int(c)] for x, c in zip(els, phi_code)}
        sec = {g: els[i] for g, i in sec_idx.items()}

        def quotient_part(i, g):
            return int(t[i, inv[sec_idx[g]]])
    else:
        phi = {x: pi(ab(x)) for x in els}
        sec = {}
        for x in els:
            sec.setdefault(phi[x], x)
        idx = ext.index_of

        def quotient_part(i, g):
            return idx[ext.mul(els[i], ext.inverse(sec[g]))]

    mats = []
    for g in gp.gens():
        s = sec[g][1]
        cols = [coords[ext.action.act(s, emb(z))] for z in ap.gens()]
        mats.append([[cols[j][i] for j in range(ap.rank)] for i in range(ap.rank)])
    action = GAction(gp, ap, mats)
    index = ext.index_of
    table = {}
    for g in gp.elements():
        for h in gp.elements():
            w = els[quotient_part(index[ext.mul(sec[g], sec[h])], gp.add(g, h))]
            assert not any(w[1])
            val = coords[w[0]]
            if any(val):
                table[(g, h)] = val
    new = ExtensionGroup(TwoCocycle(action, table, validate=False), name=name)
    iso = {}
    for i, x in enumerate(els):
        w = els[quotient_part(i, phi[x])]
        iso[x] = (coords[w[0]], phi[x])
    return new, iso
