"""Arithmetic tables for GF(q), q a prime power up to 257.

Field elements are residues 0..q-1.  For q = p^e with e > 1, the residue's
base-p digits are the coefficients of a polynomial over GF(p) (little-endian),
reduced modulo a monic irreducible polynomial found by search.  Addition is
therefore digitwise mod p and never needs the reduction polynomial, which is
what lets the sketching code add bucket contents with plain vectorized
arithmetic.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_Q = 257


def factor_prime_power(q: int) -> tuple[int, int]:
    """Return (p, e) with q = p**e, or raise ValueError."""
    if not isinstance(q, (int, np.integer)) or q < 2 or q > MAX_Q:
        raise ValueError(f"q must be a prime power in [2, {MAX_Q}], got {q!r}")
    n, p = int(q), None
    for cand in range(2, int(n**0.5) + 1):
        if n % cand == 0:
            p = cand
            break
    if p is None:
        return n, 1
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    if n != 1:
        raise ValueError(f"{q} is not a prime power")
    return p, e


def _poly_mul_mod(a, b, p):
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def _poly_mod(a, m, p):
    a = list(a)
    dm = len(m) - 1
    # m is monic, so division needs no inverses
    while len(a) - 1 >= dm and len(a) > 1:
        c = a[-1]
        if c:
            shift = len(a) - 1 - dm
            for i, mi in enumerate(m):
                a[shift + i] = (a[shift + i] - c * mi) % p
        a.pop()
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _int_to_poly(x, p, e):
    digits = []
    for _ in range(e):
        digits.append(x % p)
        x //= p
    return digits


def _poly_to_int(a, p):
    x = 0
    for c in reversed(a):
        x = x * p + c
    return x


def _find_irreducible(p: int, e: int) -> list[int]:
    """Smallest monic irreducible polynomial of degree e over GF(p)."""
    for code in range(p**e):
        poly = _int_to_poly(code, p, e) + [1]  # monic degree e
        if _is_irreducible(poly, p):
            return poly
    raise RuntimeError(f"no irreducible polynomial found for GF({p}^{e})")


def _is_irreducible(poly, p):
    e = len(poly) - 1
    if poly[0] == 0:  # divisible by x
        return False
    for deg in range(1, e // 2 + 1):
        for code in range(p**deg):
            div = _int_to_poly(code, p, deg) + [1]
            if _divides(div, poly, p):
                return False
    return True


def _divides(div, poly, p):
    return _poly_mod(poly, div, p) == [0]


class GF:
    """Lookup-table field with vectorized helpers.

    add/mul/neg/inv are plain ndarrays so callers can index them with
    arrays (``gf.add[x, y]``) and pass them to compiled kernels.
    """

    def __init__(self, q: int):
        p, e = factor_prime_power(q)
        self.q, self.p, self.e = int(q), p, e
        idx = np.arange(q)
        if e == 1:
            self.add = ((idx[:, None] + idx[None, :]) % q).astype(np.int16)
            self.mul = ((idx[:, None] * idx[None, :]) % q).astype(np.int16)
            self.neg = ((-idx) % q).astype(np.int16)
        else:
            modpoly = _find_irreducible(p, e)
            polys = [_int_to_poly(x, p, e) for x in range(q)]
            add = np.zeros((q, q), dtype=np.int16)
            mul = np.zeros((q, q), dtype=np.int16)
            for a in range(q):
                for b in range(q):
                    s = [(x + y) % p for x, y in zip(polys[a], polys[b])]
                    add[a, b] = _poly_to_int(s, p)
                    m = _poly_mod(_poly_mul_mod(polys[a], polys[b], p), modpoly, p)
                    mul[a, b] = _poly_to_int(m, p)
            self.add = add
            self.mul = mul
            self.neg = np.array(
                [_poly_to_int([(-c) % p for c in polys[a]], p) for a in range(q)],
                dtype=np.int16,
            )
        self.sub = self.add[:, self.neg]
        inv = np.zeros(q, dtype=np.int16)
        for a in range(1, q):
            inv[a] = int(np.nonzero(self.mul[a] == 1)[0][0])
        self.inv = inv
        for t in (self.add, self.mul, self.neg, self.sub, self.inv):
            t.setflags(write=False)

    # -- vectorized element ops -------------------------------------------
    def vadd(self, x, y):
        return self.add[np.asarray(x, dtype=np.intp), np.asarray(y, dtype=np.intp)]

    def vsub(self, x, y):
        return self.sub[np.asarray(x, dtype=np.intp), np.asarray(y, dtype=np.intp)]

    def vmul(self, x, y):
        return self.mul[np.asarray(x, dtype=np.intp), np.asarray(y, dtype=np.intp)]

    def sum_axis(self, x, axis):
        """Field sum along an axis (digitwise mod p, no tables needed)."""
        x = np.asarray(x, dtype=np.int64)
        if self.e == 1:
            return (x.sum(axis=axis) % self.q).astype(np.int16)
        total = 0
        rem = x
        for i in range(self.e):
            digit = (rem % self.p).sum(axis=axis) % self.p
            total = total + digit * (self.p**i)
            rem = rem // self.p
        return np.asarray(total, dtype=np.int16)

    def matmul(self, X, Y):
        """Field matrix product of int arrays shaped (a, b) and (b, c)."""
        X = np.asarray(X, dtype=np.intp)
        Y = np.asarray(Y, dtype=np.intp)
        prods = self.mul[X[:, :, None], Y[None, :, :]]
        return self.sum_axis(prods, axis=1)

    def row_reduce(self, M):
        """Gaussian elimination; returns (rank, pivot column indices, R).

        R is the reduced row-echelon form of M over the field.
        """
        R = np.array(M, dtype=np.int16, copy=True)
        nrows, ncols = R.shape
        pivots = []
        r = 0
        for c in range(ncols):
            piv = None
            for i in range(r, nrows):
                if R[i, c] != 0:
                    piv = i
                    break
            if piv is None:
                continue
            if piv != r:
                R[[r, piv]] = R[[piv, r]]
            scale = self.inv[R[r, c]]
            R[r] = self.mul[np.asarray(R[r], dtype=np.intp), scale]
            for i in range(nrows):
                if i != r and R[i, c] != 0:
                    f = R[i, c]
                    R[i] = self.sub[
                        np.asarray(R[i], dtype=np.intp),
                        np.asarray(self.mul[np.asarray(R[r], dtype=np.intp), f], dtype=np.intp),
                    ]
            pivots.append(c)
            r += 1
            if r == nrows:
                break
        return r, pivots, R

    def rank(self, M) -> int:
        return self.row_reduce(M)[0]

    def exact_factorization(self, M, k):
        """If rank(M) <= k, return (U, V) with M = U V over the field, else None.

        U is n x k (pivot columns of M, zero-padded), V is k x d.
        """
        M = np.asarray(M, dtype=np.int16)
        n, d = M.shape
        r, pivots, R = self.row_reduce(M)
        if r > k:
            return None
        U = np.zeros((n, k), dtype=np.int16)
        V = np.zeros((k, d), dtype=np.int16)
        U[:, :r] = M[:, pivots]
        V[:r, :] = R[:r, :]
        return U, V


@lru_cache(maxsize=None)
def field(q: int) -> GF:
    return GF(q)
