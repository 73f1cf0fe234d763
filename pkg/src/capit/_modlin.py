"""Diagonalization of integer matrices over Z/e.

Cochain systems and crossed-homomorphism constraints produce matrices with
thousands of rows; eliminating them over Z with exact Smith normal form is far
too slow in pure Python.  Every module handled here is killed by a known
exponent ``e``, so the same information is obtained by working over the
principal ideal ring Z/e with vectorized row and column operations.
"""

from __future__ import annotations

from math import gcd

import numpy as np
import scipy.sparse
from sympy import factorint, isprime

_INT64_SAFE = 1 << 20


def _dtype(e: int):
    return np.int64 if e < _INT64_SAFE else object


def _unit_for(p: int, e: int) -> int:
    """Return a unit u of Z/e with u*p == gcd(p, e) (mod e)."""
    g = gcd(p, e)
    e1 = e // g
    if e1 == 1:
        return 1
    base = pow(p // g, -1, e1)
    u = base
    while gcd(u, e) != 1:
        u += e1
    return u % e


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


class ModDiagonal:
    """Result of ``diagonalize_mod``: ``u @ a @ v == diag(d)`` modulo ``e``.

    ``d`` lists the pivots normalized to divisors of ``e``; pivots equal to
    ``e`` (i.e. zero) are dropped, so ``len(d)`` is the number of nonzero
    diagonal entries.
    """

    def __init__(self, e, d, u, uinv, v, shape):
        self.e = e
        self.d = d
        self.u = u
        self.uinv = uinv
        self.v = v
        self.shape = shape

    def kernel_basis(self) -> list[np.ndarray]:
        """Generators of {x in (Z/e)^N : a x = 0}."""
        e = self.e
        n = self.shape[1]
        gens = []
        for i, di in enumerate(self.d):
            if di != 1:
                gens.append((self.v[:, i] * (e // di)) % e)
        for i in range(len(self.d), n):
            gens.append(self.v[:, i] % e)
        return gens


def _pivot(sub: np.ndarray, e: int, prime: int | None):
    """Position of an entry of minimal gcd with e, or None if ``sub`` is zero."""
    if prime is not None:
        flat = int(np.argmax((sub % prime != 0).ravel()))
        if sub.flat[flat] % prime:
            return divmod(flat, sub.shape[1])
    if sub.dtype == object:
        gs = np.vectorize(lambda x: gcd(int(x), e), otypes=[object])(sub)
    else:
        gs = np.gcd(sub, e)
    k = int(np.argmin(gs))
    i0, j0 = divmod(k, sub.shape[1])
    if gs[i0, j0] == e:
        return None
    return i0, j0


def diagonalize_mod(a, e: int, track_u: bool = False, track_v: bool = True) -> ModDiagonal:
    """Row/column reduce ``a`` over Z/e to diagonal form ``u @ a @ v``.

    The pivot is an entry whose gcd with ``e`` is smallest.  Entries it
    divides are cleared in one vectorized step; any others (possible only
    when ``e`` has several prime factors) go through a 2x2 extended-gcd move.
    """
    e = int(e)
    dt = _dtype(e)
    a = np.array(a, dtype=dt).reshape(len(a), -1) if len(a) else np.zeros((0, 0), dtype=dt)
    a = a % e
    rows, cols = a.shape
    v = np.eye(cols, dtype=dt) if track_v else None
    u = np.eye(rows, dtype=dt) if track_u else None
    uinv = np.eye(rows, dtype=dt) if track_u else None
    d: list[int] = []
    fac = factorint(e)
    # over Z/p^k an entry prime to p is a unit and always a best pivot
    prime = next(iter(fac)) if len(fac) == 1 and dt is not object else None
    r = 0
    while r < rows and r < cols:
        pos = _pivot(a[r:, r:], e, prime)
        if pos is None:
            break
        i0, j0 = pos
        i0 += r
        j0 += r
        if i0 != r:
            a[[r, i0]] = a[[i0, r]]
            if track_u:
                u[[r, i0]] = u[[i0, r]]
                uinv[:, [r, i0]] = uinv[:, [i0, r]]
        if j0 != r:
            a[:, [r, j0]] = a[:, [j0, r]]
            if track_v:
                v[:, [r, j0]] = v[:, [j0, r]]
        while True:
            p = int(a[r, r])
            unit = _unit_for(p, e)
            if unit != 1:
                a[:, r] = (a[:, r] * unit) % e
                if track_v:
                    v[:, r] = (v[:, r] * unit) % e
            g = int(a[r, r])
            col = a[r + 1:, r]
            divisible = (col % g) == 0
            f = np.where(divisible, col // g, 0).astype(dt)
            if f.any():
                a[r + 1:] = (a[r + 1:] - np.outer(f, a[r])) % e
                if track_u:
                    u[r + 1:] = (u[r + 1:] - np.outer(f, u[r])) % e
                    uinv[:, r] = (uinv[:, r] + uinv[:, r + 1:] @ f) % e
            rest = np.nonzero(~divisible)[0]
            if len(rest):
                i = r + 1 + int(rest[0])
                q = int(a[i, r])
                h, s, t = _xgcd(g, q)
                gh, qh = g // h, q // h
                ra, ri = a[r].copy(), a[i].copy()
                a[r] = (s * ra + t * ri) % e
                a[i] = (-qh * ra + gh * ri) % e
                if track_u:
                    ur, ui = u[r].copy(), u[i].copy()
                    u[r] = (s * ur + t * ui) % e
                    u[i] = (-qh * ur + gh * ui) % e
                    # inverse of [[s, t], [-qh, gh]] is [[gh, -t], [qh, s]]
                    cr, ci = uinv[:, r].copy(), uinv[:, i].copy()
                    uinv[:, r] = (cr * gh + ci * qh) % e
                    uinv[:, i] = (-cr * t + ci * s) % e
                continue
            row = a[r, r + 1:]
            divisible = (row % g) == 0
            f = np.where(divisible, row // g, 0).astype(dt)
            if f.any():
                a[:, r + 1:] = (a[:, r + 1:] - np.outer(a[:, r], f)) % e
                if track_v:
                    v[:, r + 1:] = (v[:, r + 1:] - np.outer(v[:, r], f)) % e
            rest = np.nonzero(~divisible)[0]
            if len(rest):
                j = r + 1 + int(rest[0])
                q = int(a[r, j])
                h, s, t = _xgcd(g, q)
                gh, qh = g // h, q // h
                ca, cj = a[:, r].copy(), a[:, j].copy()
                a[:, r] = (s * ca + t * cj) % e
                a[:, j] = (-qh * ca + gh * cj) % e
                if track_v:
                    vr, vj = v[:, r].copy(), v[:, j].copy()
                    v[:, r] = (s * vr + t * vj) % e
                    v[:, j] = (-qh * vr + gh * vj) % e
                continue
            break
        d.append(int(a[r, r]))
        r += 1
    return ModDiagonal(e, d, u, uinv, v, (rows, cols))


def matmul_mod(a, b, e: int) -> np.ndarray:
    """Exact ``a @ b mod e``; goes through float64 BLAS when the bound allows."""
    a = np.asarray(a) % e
    b = np.asarray(b) % e
    # with entries in [0, e) every partial sum is an integer below the bound
    if a.dtype != object and b.dtype != object and a.shape[1] * (e - 1) ** 2 < (1 << 52):
        ft = np.float32 if a.shape[1] * (e - 1) ** 2 < (1 << 24) else np.float64
        prod = a.astype(ft) @ b.astype(ft)
        return (np.rint(prod).astype(np.int64)) % e
    return (a.astype(object) @ b.astype(object)) % e


def _kernel_gf2(a: np.ndarray) -> list[np.ndarray]:
    """Kernel over Z/2, eliminating on rows packed eight entries to a byte."""
    rows, cols = a.shape
    bits = np.packbits((np.asarray(a) % 2).astype(np.uint8), axis=1)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        byte, mask = c >> 3, np.uint8(0x80 >> (c & 7))
        colbits = (bits[:, byte] & mask) != 0
        nz = np.flatnonzero(colbits[r:])
        if not len(nz):
            continue
        i = r + int(nz[0])
        if i != r:
            bits[[r, i]] = bits[[i, r]]
            colbits[[r, i]] = colbits[[i, r]]
        colbits[r] = False
        hit = np.flatnonzero(colbits)
        if len(hit):
            bits[hit, byte:] ^= bits[r, byte:]
        pivots.append(c)
        r += 1
    red = np.unpackbits(bits[: len(pivots)], axis=1, count=cols).astype(np.int64)
    free = sorted(set(range(cols)) - set(pivots))
    gens = []
    for f in free:
        x = np.zeros(cols, dtype=np.int64)
        x[f] = 1
        x[pivots] = red[:, f]
        gens.append(x)
    return gens


def _kernel_prime(a: np.ndarray, p: int) -> list[np.ndarray]:
    """Kernel over the field Z/p from the reduced row echelon form."""
    if p == 2:
        return _kernel_gf2(a)
    a = np.array(a, dtype=np.int64) % p
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if not len(nz):
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i], c:] = a[[i, r], c:]
        if p != 2:
            a[r, c:] = (a[r, c:] * pow(int(a[r, c]), -1, p)) % p
        hit = np.flatnonzero(a[:, c])
        hit = hit[hit != r]
        if len(hit):
            if p == 2:
                a[hit, c:] ^= a[r, c:]
            else:
                a[hit, c:] = (a[hit, c:] - np.outer(a[hit, c], a[r, c:])) % p
        pivots.append(c)
        r += 1
    free = sorted(set(range(cols)) - set(pivots))
    gens = []
    for f in free:
        x = np.zeros(cols, dtype=np.int64)
        x[f] = 1
        x[pivots] = (-a[: len(pivots), f]) % p
        gens.append(x)
    return gens


def _kernel(a, e: int) -> list[np.ndarray]:
    if a.dtype != object and isprime(e):
        return _kernel_prime(a, e)
    return diagonalize_mod(a, e).kernel_basis()


def kernel_mod(a, e: int, seed: int = 0) -> list[np.ndarray]:
    """Generators of the kernel of ``a`` acting on column vectors over Z/e.

    Tall systems are first compressed by a random left multiplier; the
    compressed kernel always contains the true one, and every generator is
    then checked against ``a`` itself, so the answer is exact.  On a failed
    check the compression is retried with more rows and finally skipped.
    """
    is_sparse = scipy.sparse.issparse(a)
    if not is_sparse:
        a = np.asarray(a)
    if a.shape[0] * a.shape[1] == 0:
        n = a.shape[1] if a.ndim == 2 else 0
        return [np.eye(n, dtype=_dtype(e))[:, i] for i in range(n)]
    rows, cols = a.shape
    if is_sparse:
        a = a.tocsr().astype(np.int64)
        a.data %= e
    else:
        a = a % e
    extra = 16
    rng = np.random.default_rng(seed)
    while rows > 2 * (cols + extra) and a.dtype != object:
        r = rng.integers(0, e, size=(cols + extra, rows), dtype=np.int64)
        gens = _kernel(np.asarray(a.T @ r.T).T % e if is_sparse else matmul_mod(r, a, e), e)
        if not gens:
            return gens
        k = np.stack(gens, axis=1)
        if not (np.asarray(a @ k) % e if is_sparse else matmul_mod(a, k, e)).any():
            return gens
        extra *= 4
    return _kernel(a.toarray() % e if is_sparse else a, e)


class SpanStructure:
    """Invariant structure of a column span S inside (Z/e)^N.

    S is the direct sum of cyclic groups generated by ``basis[i]`` with order
    ``orders[i]``; ``coords`` expresses any member of S in that basis.
    """

    def __init__(self, diag: ModDiagonal):
        e = diag.e
        self.e = e
        keep = [i for i, di in enumerate(diag.d) if e // di > 1]
        self._rows = keep
        self._rank = len(diag.d)
        self._d = [diag.d[i] for i in keep]
        self.orders = [e // diag.d[i] for i in keep]
        self.basis = [(diag.uinv[:, i] * diag.d[i]) % e for i in keep]
        self._u = diag.u

    def coords(self, y) -> list[int]:
        uy = (self._u @ np.asarray(y, dtype=self._u.dtype)) % self.e
        if uy[self._rank:].any():
            raise ValueError("vector is not in the span")
        out = []
        for i, di, oi in zip(self._rows, self._d, self.orders):
            val = int(uy[i])
            if val % di:
                raise ValueError("vector is not in the span")
            out.append((val // di) % oi)
        return out

    def combine(self, coords) -> np.ndarray:
        n = self._u.shape[0]
        out = np.zeros(n, dtype=self._u.dtype)
        for c, b, o in zip(coords, self.basis, self.orders):
            out = (out + (int(c) % o) * b) % self.e
        return out


def span_structure(columns, n: int, e: int) -> SpanStructure:
    """Structure of the span of the given length-``n`` vectors over Z/e."""
    dt = _dtype(e)
    if len(columns):
        mat = np.stack([np.asarray(c, dtype=dt) for c in columns], axis=1) % e
    else:
        mat = np.zeros((n, 1), dtype=dt)
    return SpanStructure(diagonalize_mod(mat, e, track_u=True, track_v=False))
