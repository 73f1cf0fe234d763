"""The transfer Ver: U/U' -> A and the capitulation statements built on it."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from capit.abgroup import (
    Element,
    FiniteAbelianGroup,
    Homomorphism,
    all_subgroups,
    hom_kernel,
    quotient,
    span_set,
)
from capit.extension import (
    DerivedNotContained,
    ExtensionError,
    ExtensionGroup,
    UElement,
    UMap,
    endomorphism_from_cocycle,
    rebase,
)


class HypothesisFailed(ExtensionError):
    pass


class NotAnEndomorphism(ExtensionError):
    pass


def _require_derived(ext: ExtensionGroup):
    # U' is computed inside A, so this only fails for hand-built objects
    if not ext.derived_set <= frozenset(ext.A.element_list):
        raise DerivedNotContained("U' is not contained in A")


def transfer(ext: ExtensionGroup, x: UElement) -> Element:
    """Ver(a u_t) = sum_s s.a + sum_s c(s, t)."""
    _require_derived(ext)
    a, t = ext.check(x)
    tb = ext.tables
    if tb is not None:
        add, ia, it = tb.add_a, tb.ai[a], tb.gi[t]
        acc = 0
        for i in range(len(tb.gel)):
            acc = add[add[acc][tb.act[i][ia]]][tb.coc[i][it]]
        return tb.ael[acc]
    A, act, c = ext.A, ext.action.act, ext.cocycle
    out = A.zero
    for s in ext.G.element_list:
        out = A.add(out, A.add(act(s, a), c(s, t)))
    return out


def transfer_via_trace(ext: ExtensionGroup, x: UElement) -> Element:
    """Trace of log(x) in the resolvent module."""
    _require_derived(ext)
    res = ext.resolvent
    return res.trace(res.log(ext.check(x)))


def transfer_hom(ext: ExtensionGroup) -> Homomorphism:
    """The induced homomorphism U/U' -> A."""
    ab = ext.abelianization
    q = ab.group
    return Homomorphism.from_images(q, ext.A, [transfer(ext, ab.lift(g)) for g in q.gens()])


@dataclass
class TransferReport:
    name: str | None
    order_u: int
    order_a: int
    index: int
    kernel_invariants: tuple[int, ...]
    kernel_order: int
    divisible: bool
    methods_agree: bool
    kernel_gens: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "extension": self.name,
            "order_u": self.order_u,
            "order_a": self.order_a,
            "index": self.index,
            "kernel_invariants": list(self.kernel_invariants),
            "kernel_order": self.kernel_order,
            "divisible": self.divisible,
            "methods_agree": self.methods_agree,
            "kernel_gens": [list(g) for g in self.kernel_gens],
        }


ENUMERATE_LIMIT = 4096


def transfer_kernel(ext: ExtensionGroup) -> tuple[FiniteAbelianGroup, TransferReport]:
    """Kernel of Ver on U/U', by enumerating classes and by the matrix of Ver."""
    _require_derived(ext)
    ab = ext.abelianization
    q = ab.group
    hom = transfer_hom(ext)
    ker, emb = hom_kernel(hom)
    agree = True
    ver_idx = transfer_indices(ext)
    if ver_idx is not None and ab.codes is not None:
        zero = np.unique(ab.codes[ver_idx == 0])
        enumerated = {q.element_list[int(c)] for c in zero}
        agree = enumerated == {emb(k) for k in ker.elements()}
    elif q.order <= ENUMERATE_LIMIT:
        enumerated = {xi for xi in q.elements() if not any(transfer(ext, ab.lift(xi)))}
        agree = enumerated == {emb(k) for k in ker.elements()}
        for xi in q.gens():
            x = ab.lift(xi)
            if transfer(ext, x) != transfer_via_trace(ext, x):
                agree = False
    idx = ext.index
    report = TransferReport(
        name=ext.name,
        order_u=ext.order,
        order_a=ext.A.order,
        index=idx,
        kernel_invariants=ker.invariants,
        kernel_order=ker.order,
        divisible=ker.order % idx == 0,
        methods_agree=agree,
        kernel_gens=sorted(emb(k) for k in ker.gens()),
    )
    return ker, report


def over_derived(ext: ExtensionGroup) -> ExtensionGroup:
    """The same group presented as an extension of U/U' by U'."""
    new, _ = rebase(ext, ext.derived_gens, name=ext.name)
    return new


def transfer_indices(ext: ExtensionGroup) -> np.ndarray | None:
    """Ver of every element of U as indices into A.element_list (None without tables)."""
    tb = ext.tables
    if tb is None:
        return None
    ng = len(tb.gel)
    idx = np.arange(ext.order)
    ia, ig = idx // ng, idx % ng
    add = tb.np_add_a
    acc = np.zeros(ext.order, dtype=np.int64)
    for s in range(ng):
        acc = add[add[acc, tb.np_act[s, ia]], tb.np_coc[s, ig]]
    return acc


def lemma_a_holds(ext: ExtensionGroup) -> bool:
    """The cocycle formula and the resolvent trace give the same Ver on every element."""
    direct = transfer_indices(ext)
    if direct is None:
        return all(transfer(ext, x) == transfer_via_trace(ext, x) for x in ext.element_list)
    traced = ext.resolvent.trace_all()
    return bool((np.array(ext.A.element_list, dtype=np.int64).reshape(ext.A.order, ext.A.rank)[direct] == traced).all())


def coset_transfer(ext: ExtensionGroup, mask: np.ndarray, seed: int | None = None) -> np.ndarray:
    """Transfer into the normal abelian subgroup H = ``mask`` from coset representatives.

    Works on element indices through the Cayley table and returns Ver(x) as an
    element index for every x.  With ``seed`` the representatives are random.
    """
    t, inv = ext.mul_table, ext.inverse_index
    n = ext.order
    members = np.flatnonzero(mask)
    coset = np.full(n, -1)
    reps = []
    rng = np.random.default_rng(seed) if seed is not None else None
    for x in range(n):
        if coset[x] < 0:
            orbit = t[members, x]
            coset[orbit] = len(reps)
            reps.append(int(orbit[rng.integers(len(orbit))]) if rng is not None else x)
    reps = np.array(reps)
    prod = t[reps[:, None], np.arange(n)[None, :]]
    h = t[prod, inv[reps[coset[prod]]]]
    acc = np.zeros(n, dtype=np.int64)
    for row in h:
        acc = t[acc, row]
    return acc


def check_principal_ideal(ext: ExtensionGroup, method: str = "auto") -> bool:
    """Ver: U/U' -> U' vanishes identically.

    ``method`` is "cosets" (transfer into U' from coset representatives on the
    Cayley table), "rebase" (present U over U' and use the cocycle formula) or
    "auto" (cosets when the table exists).
    """
    if method == "auto":
        method = "cosets" if ext.mul_table is not None else "rebase"
    if method == "cosets":
        return not coset_transfer(ext, ext.derived_mask).any()
    d = over_derived(ext)
    if d.A.order == 1:
        return True
    ab = d.abelianization
    return all(not any(transfer(d, ab.lift(xi))) for xi in ab.group.elements())


def lemma_b_holds(ext: ExtensionGroup) -> bool:
    """(A:U') Tr(b) = 0 for every b in the resolvent module."""
    res = ext.resolvent
    k = ext.A.order // len(ext.derived_set)
    A = ext.A
    return all(not any(A.scale(k, res.trace(b))) for b in res.basis())


def power_identity_holds(ext: ExtensionGroup) -> bool:
    """Image of Ver(x) in U/U' equals (U:A) x."""
    ab = ext.abelianization
    q = ab.group
    n = ext.index
    for x in ext.element_list:
        if ab(ext.embed(transfer(ext, x))) != q.scale(n, ab(x)):
            return False
    return True


def transfer_is_class_function(ext: ExtensionGroup) -> bool:
    """Ver(x u') = Ver(x) for u' in U', and Ver(xy) = Ver(x) + Ver(y)."""
    A = ext.A
    els = ext.element_list
    ver = {x: transfer(ext, x) for x in els}
    for x in els:
        for d in ext.derived_set:
            if ver[ext.mul(x, ext.embed(d))] != ver[x]:
                return False
        for y in els:
            if ver[ext.mul(x, y)] != A.add(ver[x], ver[y]):
                return False
    return True


def divisibility_over_intermediates(ext: ExtensionGroup) -> list[dict]:
    """For every A' with U' <= A' <= A, compare (U:A') with |Ker Ver_{U/A'}|."""
    A = ext.A
    der = ext.derived_gens
    q, pi = quotient(A, der)
    lift = {}
    for a in A.element_list:
        lift.setdefault(pi(a), a)
    out = []
    for sub in all_subgroups(q):
        gens = list(der) + sorted(lift[s] for s in sub if any(s))
        new, _ = rebase(ext, gens, name=ext.name)
        _, rep = transfer_kernel(new)
        out.append(
            {
                "a_prime": list(new.A.invariants),
                "index": rep.index,
                "kernel_order": rep.kernel_order,
                "divisible": rep.divisible,
                "methods_agree": rep.methods_agree,
            }
        )
    return out


def _fixed_classes(ext: ExtensionGroup, gamma: UMap) -> list[Element]:
    ab = ext.abelianization
    return [xi for xi in ab.group.elements() if ab(gamma(ab.lift(xi))) == xi]


def tannaka_terada_check(ext: ExtensionGroup, gamma: UMap) -> bool:
    """If A = U^(gamma-1) U', Ver kills every gamma-fixed class of U/U'."""
    if not gamma.is_endomorphism():
        raise NotAnEndomorphism("gamma is not multiplicative")
    A = ext.A
    moved = []
    for x in ext.element_list:
        y = ext.mul(gamma(x), ext.inverse(x))
        if any(y[1]):
            raise HypothesisFailed("gamma(x) x^-1 does not lie in A")
        moved.append(y[0])
    if span_set(A, set(moved) | set(ext.derived_gens)) != frozenset(A.element_list):
        raise HypothesisFailed("A != U^(gamma-1) U'")
    ab = ext.abelianization
    return all(not any(transfer(ext, ab.lift(xi))) for xi in _fixed_classes(ext, gamma))


def find_gammas(ext: ExtensionGroup, limit: int = 4, cap: int = 4096, seed: int = 0) -> list[UMap]:
    """Endomorphisms gamma(x) = f(x) x, f in Z^1(U, A), satisfying A = U^(gamma-1) U'."""
    z1 = ext.crossed
    A = ext.A
    full = frozenset(A.element_list)
    der = list(ext.derived_gens)
    out = []
    for coords in _coords_iter(z1, cap, seed):
        v = z1.vector(coords)
        vals = {z1.value(v, g) for g in z1.gens}
        if span_set(A, vals | set(der)) != full:
            continue
        out.append(endomorphism_from_cocycle(ext, z1.cocycle(v)))
        if len(out) >= limit:
            break
    return out


def _last_axis_codes(coords: np.ndarray, invariants) -> np.ndarray:
    code = np.zeros(coords.shape[:-1], dtype=np.int64)
    for j, d in enumerate(invariants):
        code = code * d + coords[..., j]
    return code


def _span_rows(gens: np.ndarray, moduli: np.ndarray, cap: int) -> np.ndarray | None:
    """Sorted rows of the subgroup of prod Z/moduli spanned by ``gens``; None past ``cap``."""
    span = np.zeros((1, len(moduli)), dtype=np.int64)
    if not len(moduli):
        return span
    for b in gens:
        order = int(np.lcm.reduce(moduli // np.gcd(moduli, b)))
        if order == 1:
            continue
        if len(span) * order > 4 * cap:
            return None
        mults = (np.arange(order)[:, None] * b) % moduli
        span = np.unique(((span[:, None, :] + mults[None]) % moduli).reshape(-1, len(moduli)), axis=0)
        if len(span) > cap:
            return None
    return span


def _coords_iter(z1: CrossedHomomorphisms, cap: int, seed: int):
    """All coordinate vectors of Z^1 in order, or a seeded sample if there are more than ``cap``."""
    if z1.size <= cap:
        yield from z1.all_coords()
        return
    rng = random.Random(seed)
    yield tuple(0 for _ in z1.orders)
    for _ in range(cap - 1):
        yield tuple(rng.randrange(o) for o in z1.orders)


PHI_CAP = 1 << 18
PHI_CHUNK = 4096
PHI_SAMPLE = 1 << 16


@dataclass
class MiyakeResult:
    found: bool
    phi: list | None
    d_phi: int | None
    n_phi: int
    sampled: bool
    violations: list
    divisibility: bool | None

    @property
    def ok(self) -> bool:
        return not self.violations and self.divisibility is not False

    def as_dict(self) -> dict:
        return {
            "found": self.found,
            "phi": self.phi,
            "d_phi": self.d_phi,
            "n_phi": self.n_phi,
            "sampled": self.sampled,
            "violations": self.violations,
            "divisibility": self.divisibility,
        }


def miyake_criterion(ext: ExtensionGroup, cap: int = PHI_CAP, seed: int = 0) -> MiyakeResult:
    """Search Z^1(U, A) for f whose reduction phi: U/U' -> A/U' is onto.

    The phis are listed exhaustively, in lexicographic order, unless there are
    more than ``cap`` of them; then PHI_SAMPLE seeded random points of Z^1 are used.  For every
    phi, check (Ker phi)^(d_phi) <= Ker Ver with
    d_phi = (A/U' : Im phi).  When some phi is onto, also check that (U:A)
    divides |Ker Ver|.
    """
    A = ext.A
    ab = ext.abelianization
    q = ab.group
    qa, pi = quotient(A, ext.derived_gens)
    ver = transfer_hom(ext)
    z1 = ext.crossed
    lifts = [ab.lift(g) for g in q.gens()]
    # phi of each Z^1 basis vector, on generators of U/U'
    basis_phi = []
    for i in range(len(z1.orders)):
        v = z1.vector([int(i == j) for j in range(len(z1.orders))])
        basis_phi.append([pi(z1.value(v, x)) for x in lifts])
    ng, kq = len(lifts), qa.rank
    qa_inv = np.array(qa.invariants, dtype=np.int64)
    bp = np.array(basis_phi, dtype=np.int64).reshape(len(z1.orders), ng, kq)
    # phi is linear in f, so the phis met are the span of the basis images
    phis = _span_rows(bp.reshape(len(bp), ng * kq), np.tile(qa_inv, ng), cap)
    sampled = phis is None
    if sampled:
        rng = np.random.default_rng(seed)
        coords = rng.integers(0, np.array(z1.orders, dtype=np.int64), size=(PHI_SAMPLE, len(z1.orders)))
        coords[0] = 0
        flat = np.einsum("ni,ijk->njk", coords, bp).reshape(PHI_SAMPLE, ng * kq) % np.tile(qa_inv, ng)
        phis = np.unique(flat, axis=0)
    qc = np.array(q.element_list, dtype=np.int64).reshape(q.order, ng)
    q_inv = np.array(q.invariants, dtype=np.int64)
    ver_zero = np.array([not any(ver(x)) for x in q.element_list])
    violations = []
    best = None
    for lo in range(0, len(phis), PHI_CHUNK):
        chunk = phis[lo:lo + PHI_CHUNK]
        chunk = chunk.reshape(len(chunk), ng, kq)
        # every phi of the chunk evaluated on every class of U/U'
        vals = _last_axis_codes(np.einsum("xj,pjk->pxk", qc, chunk) % qa_inv, qa.invariants)
        srt = np.sort(vals, axis=1)
        d = qa.order // (1 + (np.diff(srt, axis=1) != 0).sum(axis=1))
        scaled = _last_axis_codes((d[:, None, None] * qc[None]) % q_inv, q.invariants)
        bad = (vals == 0) & ~ver_zero[scaled]
        for p in np.flatnonzero(bad.any(axis=1)):
            x = q.element_list[int(np.argmax(bad[p]))]
            violations.append({"phi": chunk[p].tolist(), "d_phi": int(d[p]), "class": list(x)})
        onto = np.flatnonzero(d == 1)
        if best is None and len(onto):
            best = [tuple(int(v) for v in row) for row in chunk[onto[0]]]
    found = best is not None
    divisibility = None
    if found:
        kord = hom_kernel(ver)[0].order
        divisibility = kord % ext.index == 0
    return MiyakeResult(
        found=found,
        phi=[list(x) for x in best] if found else None,
        d_phi=1 if found else None,
        n_phi=len(phis),
        sampled=sampled,
        violations=violations,
        divisibility=divisibility,
    )


def brute_transfer(ext: ExtensionGroup, x: UElement, rng: random.Random | None = None) -> Element:
    """Transfer from the definition with random right coset representatives.

    For each coset A r, write r x = h r' with r' the representative of A r x;
    Ver(x) is the sum of the h.  Used as an oracle.
    """
    A, G = ext.A, ext.G
    rng = rng or random.Random(0)
    reps = {s: (tuple(rng.randrange(d) for d in A.invariants), s) for s in G.element_list}
    out = A.zero
    for s, r in reps.items():
        rx = ext.mul(r, x)
        h = ext.mul(rx, ext.inverse(reps[rx[1]]))
        assert not any(h[1])
        out = A.add(out, h[0])
    return out


__all__ = [
    "HypothesisFailed",
    "NotAnEndomorphism",
    "MiyakeResult",
    "TransferReport",
    "brute_transfer",
    "check_principal_ideal",
    "coset_transfer",
    "lemma_a_holds",
    "transfer_indices",
    "divisibility_over_intermediates",
    "find_gammas",
    "lemma_b_holds",
    "miyake_criterion",
    "over_derived",
    "power_identity_holds",
    "tannaka_terada_check",
    "transfer",
    "transfer_hom",
    "transfer_is_class_function",
    "transfer_kernel",
    "transfer_via_trace",
]

