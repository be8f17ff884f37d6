"""Exact Z_p-lattice algebra over rational matrices.

Truncated p-adic data is interpreted as exact rationals, so every decision
(integrality, index, equality of lattices) is exact for the approximant.
Matrices are lists of rows of Fractions; lattices are full-rank and given by
a basis matrix whose *columns* are the basis vectors.
"""
from __future__ import annotations

from fractions import Fraction

from .localfield import INF, to_zp, vp


def fmat(rows):
    return [[Fraction(a) for a in r] for r in rows]


def identity(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(n, m=None):
    return [[Fraction(0)] * (m or n) for _ in range(n)]


def mmul(A, B):
    Bt = list(zip(*B))
    return [[sum((a * b for a, b in zip(r, c) if a and b), Fraction(0)) for c in Bt] for r in A]


def madd(A, B):
    return [[a + b for a, b in zip(r, s)] for r, s in zip(A, B)]


def msub(A, B):
    return [[a - b for a, b in zip(r, s)] for r, s in zip(A, B)]


def mscale(A, c):
    c = Fraction(c)
    return [[a * c for a in r] for r in A]


def transpose(A):
    return [list(c) for c in zip(*A)]


def mpow(A, k):
    R, base = identity(len(A)), A
    while k:
        if k & 1:
            R = mmul(R, base)
        base = mmul(base, base)
        k >>= 1
    return R


def kron(A, B):
    return [[a * b for a in ra for b in rb] for ra in A for rb in B]


def minv(A):
    n = len(A)
    M = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(A)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [r[n:] for r in M]


def det(A):
    n = len(A)
    M = [list(r) for r in A]
    out = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            out = -out
        out *= M[c][c]
        inv = 1 / M[c][c]
        for i in range(c + 1, n):
            if M[i][c] != 0:
                f = M[i][c] * inv
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return out


def charpoly(A):
    """Coefficients of det(X I - A), highest first (Berkowitz, division free)."""
    n = len(A)
    coeffs = [Fraction(1), -A[0][0]]
    for r in range(1, n):
        R = A[r][:r]
        S = [A[k][r] for k in range(r)]
        toep = [Fraction(1), -A[r][r]]
        v = S
        for _ in range(r):
            toep.append(-sum((a * b for a, b in zip(R, v)), Fraction(0)))
            v = [sum((A[i][k] * v[k] for k in range(r)), Fraction(0)) for i in range(r)]
        coeffs = [sum((toep[i - j] * coeffs[j] for j in range(r + 1) if 0 <= i - j < len(toep)), Fraction(0))
                  for i in range(r + 2)]
    return coeffs


def mval(A, p):
    """Minimal p-adic valuation of the entries (INF for the zero matrix)."""
    return min((vp(a, p) for r in A for a in r), default=INF)


def is_integral(A, p) -> bool:
    return all(a.denominator % p for r in A for a in r)


# ---------------------------------------------------------------------------
# lattices

def span(vectors, k, p):
    """Basis (columns) of the Z_p-span of ``vectors`` in Q_p^k; must have rank k."""
    rem = [list(map(Fraction, v)) for v in vectors]
    piv_vecs = []
    for i in range(k):
        best, bv = None, INF
        for idx, v in enumerate(rem):
            if v[i] != 0:
                val = vp(v[i], p)
                if val < bv:
                    best, bv = idx, val
        if best is None:
            raise ValueError("generators do not span a full-rank lattice")
        pv = rem.pop(best)
        nxt = []
        for v in rem:
            if v[i] != 0:
                f = v[i] / pv[i]
                v = [a - f * b for a, b in zip(v, pv)]
            if any(v):
                nxt.append(v)
        rem = nxt
        piv_vecs.append(pv)
    return transpose(piv_vecs)


def dual(B):
    return transpose(minv(B))


def preimage(C, p):
    """Lattice {x : C x integral} for a rational matrix C of full column rank."""
    k = len(C[0])
    return dual(span(C, k, p))


def contains(outer, inner, p) -> bool:
    return is_integral(mmul(minv(outer), inner), p)


def lattices_equal(B1, B2, p) -> bool:
    return contains(B1, B2, p) and contains(B2, B1, p)


def index_val(B, p):
    """v_p(det B): the covolume exponent of the lattice."""
    return vp(det(B), p)


def canonical_key(B, p):
    """Hashable canonical form (Hermite form over Z_p) of a lattice."""
    k = len(B)
    s = -mval(B, p)
    Bs = mscale(B, Fraction(p) ** s)
    K = index_val(Bs, p)
    if K == 0:
        return (s, 0)
    mod = p ** K
    cols = [[to_zp(Bs[r][c], p, mod) for r in range(k)] for c in range(k)]

    def v(x):
        if x % mod == 0:
            return K
        n = 0
        while x % p == 0:
            x //= p
            n += 1
        return n

    basis = []
    for i in range(k):
        best, bv = None, K
        for idx, c in enumerate(cols):
            val = v(c[i])
            if val < bv:
                best, bv = idx, val
        if best is None:
            pv = [0] * k
            pv[i] = p ** K
        else:
            pv = cols.pop(best)
            u = pv[i] // p ** bv
            uinv = pow(u, -1, mod)
            pv = [x * uinv % mod for x in pv]
            pv[i] = p ** bv
        a = p ** v(pv[i]) if pv[i] % mod else mod
        nxt = []
        for c in cols:
            if c[i] % mod:
                f = (c[i] // a)
                c = [(x - f * y) % mod for x, y in zip(c, pv)]
            nxt.append(c)
        cols = nxt
        basis.append(pv)
    # reduce below-pivot entries
    piv = [basis[i][i] for i in range(k)]
    for i in range(k):
        col = basis[i]
        for r in range(i + 1, k):
            q = col[r] // piv[r]
            if q:
                col = [(x - q * y) % mod if j >= r else x for j, (x, y) in enumerate(zip(col, basis[r]))]
        basis[i] = col
    return (s, tuple(tuple(c) for c in basis))
