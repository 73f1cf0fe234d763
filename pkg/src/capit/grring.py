"""The integral group ring Z[G] of a finite abelian group G.

Elements are dense coefficient vectors indexed by the lexicographic element
order of G.  Only what the transfer computations need is here: products,
augmentation, the norm element, the action on G-modules, and determinants of
small matrices by cofactor expansion.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Protocol, Sequence

from capit.abgroup import Element, FiniteAbelianGroup

MAX_DET_SIZE = 6


class GroupMismatch(ValueError):
    pass


class GModuleLike(Protocol):
    """Anything a group ring element can act on."""

    acting_group: FiniteAbelianGroup

    def act(self, sigma: Element, m): ...

    def add(self, x, y): ...

    def scale(self, n: int, x): ...

    def zero_element(self): ...


@dataclass(frozen=True)
class GroupRingElement:
    group: FiniteAbelianGroup
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.group.order:
            raise ValueError(f"need {self.group.order} coefficients, got {len(self.coeffs)}")
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))

    @classmethod
    def zero(cls, g: FiniteAbelianGroup) -> GroupRingElement:
        return cls(g, (0,) * g.order)

    @classmethod
    def scalar(cls, g: FiniteAbelianGroup, n: int) -> GroupRingElement:
        return cls(g, (int(n),) + (0,) * (g.order - 1))

    @classmethod
    def one(cls, g: FiniteAbelianGroup) -> GroupRingElement:
        return cls.scalar(g, 1)

    @classmethod
    def basis(cls, g: FiniteAbelianGroup, sigma: Element) -> GroupRingElement:
        c = [0] * g.order
        c[g.index_of[g.check(sigma)]] = 1
        return cls(g, tuple(c))

    @classmethod
    def from_dict(cls, g: FiniteAbelianGroup, coeffs: dict) -> GroupRingElement:
        c = [0] * g.order
        for sigma, n in coeffs.items():
            c[g.index_of[g.check(sigma)]] += n
        return cls(g, tuple(c))

    def items(self):
        return ((s, c) for s, c in zip(self.group.element_list, self.coeffs) if c)

    def _same(self, other: GroupRingElement):
        if not isinstance(other, GroupRingElement) or other.group != self.group:
            raise GroupMismatch("group ring elements over different groups")

    def __add__(self, other):
        if isinstance(other, int):
            other = GroupRingElement.scalar(self.group, other)
        self._same(other)
        return GroupRingElement(self.group, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return GroupRingElement(self.group, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return GroupRingElement(self.group, tuple(other * a for a in self.coeffs))
        return multiply(self, other)

    __rmul__ = __mul__

    def __bool__(self):
        return any(self.coeffs)

    def __str__(self):
        terms = [f"{c}*{s}" for s, c in self.items()]
        return " + ".join(terms) if terms else "0"


def multiply(x: GroupRingElement, y: GroupRingElement) -> GroupRingElement:
    x._same(y)
    g = x.group
    out = [0] * g.order
    idx = g.index_of
    for s, a in x.items():
        for t, b in y.items():
            out[idx[g.add(s, t)]] += a * b
    return GroupRingElement(g, tuple(out))


def augmentation(x: GroupRingElement) -> int:
    return sum(x.coeffs)


def norm_element(g: FiniteAbelianGroup) -> GroupRingElement:
    return GroupRingElement(g, (1,) * g.order)


def augmentation_generators(g: FiniteAbelianGroup) -> list[GroupRingElement]:
    """The Z-basis {sigma - 1 : sigma != 1} of the augmentation ideal."""
    one = GroupRingElement.one(g)
    return [GroupRingElement.basis(g, s) - one for s in g.element_list[1:]]


def act(x: GroupRingElement, target, module: GModuleLike):
    """Z-linear extension of the module's G-action."""
    if module.acting_group != x.group:
        raise GroupMismatch("module is acted on by a different group")
    out = module.zero_element()
    for s, c in x.items():
        out = module.add(out, module.scale(c, module.act(s, target)))
    return out


def _det(m: list[list[GroupRingElement]], g: FiniteAbelianGroup) -> GroupRingElement:
    n = len(m)
    if n == 0:
        return GroupRingElement.one(g)
    if n == 1:
        return m[0][0]
    total = GroupRingElement.zero(g)
    for j in range(n):
        if not m[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(minor, g)
        total = total + term if j % 2 == 0 else total - term
    return total


def det_adjugate(m: Sequence[Sequence[GroupRingElement]]):
    """Determinant and adjugate of a square matrix over Z[G].

    Cofactor expansion only; sizes above ``MAX_DET_SIZE`` are refused.
    """
    n = len(m)
    if any(len(row) != n for row in m):
        raise ValueError("matrix is not square")
    if n == 0:
        raise ValueError("empty matrix")
    if n > MAX_DET_SIZE:
        raise ValueError(f"cofactor expansion capped at size {MAX_DET_SIZE}")
    g = m[0][0].group
    for row in m:
        for x in row:
            if not isinstance(x, GroupRingElement) or x.group != g:
                raise GroupMismatch("matrix entries over different groups")
    rows = [list(r) for r in m]
    det = _det(rows, g)
    if n == 1:
        return det, [[GroupRingElement.one(g)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]
            c = _det(minor, g)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    return det, adj


def matmul(a, b):
    g = a[0][0].group
    n, k, p = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = GroupRingElement.zero(g)
            for t in range(k):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def leibniz_det(m) -> GroupRingElement:
    """Permutation-sum determinant; independent oracle for ``det_adjugate``."""
    n = len(m)
    g = m[0][0].group
    total = GroupRingElement.zero(g)
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = GroupRingElement.one(g)
        for i, p in enumerate(perm):
            term = term * m[i][p]
        total = total - term if inv % 2 else total + term
    return total


def augmentation_annihilator(g: FiniteAbelianGroup) -> list[GroupRingElement]:
    """Z-basis of {x in Z[G] : x * (sigma - 1) = 0 for all sigma}.

    Solved as an integer nullspace; expected to be spanned by the norm element.
    """
    from capit.abgroup import smith_normal_form

    n = g.order
    idx = g.index_of
    rows = []
    for s in g.element_list[1:]:
        # coefficient of rho in x*(s-1) is x[rho - s] - x[rho]
        for rho in g.element_list:
            row = [0] * n
            row[idx[g.sub(rho, s)]] += 1
            row[idx[rho]] -= 1
            rows.append(row)
    if not rows:
        return [GroupRingElement.one(g)]
    _, d, v = smith_normal_form(rows)
    rank = sum(1 for i in range(min(len(d), n)) if d[i][i])
    return [GroupRingElement(g, tuple(v[r][j] for r in range(n))) for j in range(rank, n)]
