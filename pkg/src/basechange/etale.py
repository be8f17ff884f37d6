"""The centralizer algebra A = F[gamma] of a regular semisimple element.

Elements of A are coordinate vectors in the power basis 1, gamma, ..., gamma^{n-1}.
Orders are Z_p-lattices in these coordinates.  The torus T = A^x acts on a
vector space V through ``action`` (one rational matrix per basis element).
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import cached_property

from . import qlinalg as ql
from .localfield import to_zp, vp


def _rank_kernel_mod_p(M, p):
    """Basis of the kernel of an integer matrix over F_p."""
    rows = [[x % p for x in r] for r in M]
    n = len(rows[0])
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [x * inv % p for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for i, pc in enumerate(pivots):
            v[pc] = -rows[i][fc] % p
        basis.append(v)
    return basis


def _det_mod_p(M, p):
    M = [[x % p for x in r] for r in M]
    n = len(M)
    out = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            out = -out
        out = out * M[c][c] % p
        inv = pow(M[c][c], -1, p)
        for i in range(c + 1, n):
            if M[i][c]:
                f = M[i][c] * inv
                M[i] = [(x - f * y) % p for x, y in zip(M[i], M[c])]
    return out % p


class EtaleAlgebra:
    """F[gamma] for a rational approximant ``gamma`` with squarefree charpoly."""

    def __init__(self, gamma, p, action=None):
        self.p = p
        self.gamma = ql.fmat(gamma)
        self.n = n = len(gamma)
        cp = ql.charpoly(self.gamma)
        self.poly = cp
        # companion matrix: multiplication by gamma on the power basis
        C = ql.zeros(n)
        for i in range(1, n):
            C[i][i - 1] = Fraction(1)
        for i in range(n):
            C[i][n - 1] = -cp[n - i]
        self._companion = C
        self._regular = [ql.mpow(C, i) for i in range(n)]
        if action is None:
            action = [ql.mpow(self.gamma, i) for i in range(n)]
        self.action_basis = action

    # -- arithmetic -------------------------------------------------------------
    def regular(self, a):
        n = self.n
        out = ql.zeros(n)
        for c, R in zip(a, self._regular):
            if c:
                out = ql.madd(out, ql.mscale(R, c))
        return out

    def mul(self, a, b):
        R = self.regular(a)
        return [sum((R[i][j] * b[j] for j in range(self.n)), Fraction(0)) for i in range(self.n)]

    def power(self, a, k):
        out = [Fraction(int(i == 0)) for i in range(self.n)]
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def act(self, a):
        k = len(self.action_basis[0])
        out = ql.zeros(k)
        for c, G in zip(a, self.action_basis):
            if c:
                out = ql.madd(out, ql.mscale(G, c))
        return out

    # -- orders -----------------------------------------------------------------
    def stabilizer_order(self, B):
        """O(L) = {a in A : a L in L} for the lattice with basis columns B."""
        Binv = ql.minv(B)
        blocks = [ql.mmul(ql.mmul(Binv, G), B) for G in self.action_basis]
        k = len(B)
        rows = [[blk[i][j] for blk in blocks] for i in range(k) for j in range(k)]
        return ql.preimage(rows, self.p)

    def _basis_vectors(self, O):
        return ql.transpose(O)

    def radical(self, O):
        p, n = self.p, self.n
        Oinv = ql.minv(O)
        frob = []
        for b in self._basis_vectors(O):
            bp = self.power(b, p)
            coords = [sum((Oinv[i][j] * bp[j] for j in range(n)), Fraction(0)) for i in range(n)]
            frob.append([to_zp(c, p, p) for c in coords])
        Fm = ql.transpose(frob)  # column i = Frob(b_i)
        j = 1
        while p ** j < n:
            j += 1
        Fj = [[int(i == k) for k in range(n)] for i in range(n)]
        for _ in range(j):
            Fj = [[sum(Fj[i][k] * Fm[k][l] for k in range(n)) % p for l in range(n)] for i in range(n)]
        ker = _rank_kernel_mod_p(Fj, p)
        gens = [[c * p for c in v] for v in self._basis_vectors(O)]
        for v in ker:
            gens.append([sum((O[i][k] * v[k] for k in range(n)), Fraction(0)) for i in range(n)])
        return ql.span(gens, n, p)

    def multiplier_ring(self, I):
        Iinv = ql.minv(I)
        rows = []
        cols = self._basis_vectors(I)
        # x -> coords_I(x * i_j) is linear in x; its matrix column l is e_l * i_j
        for ij in cols:
            Rij = self.regular(ij)  # multiplication by i_j, so x * i_j = Rij @ x
            M = ql.mmul(Iinv, Rij)
            rows.extend(M)
        return ql.preimage(rows, self.p)

    @cached_property
    def maximal_order(self):
        p, n = self.p, self.n
        cp = self.poly
        # scale gamma so that its charpoly is integral; Z_p[p^s gamma] is an order
        s = 0
        for i in range(1, n + 1):
            v = vp(cp[i], p)
            if v < 0:
                s = max(s, (-v + i - 1) // i)
        O = [[Fraction(p) ** (s * i) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
        while True:
            O2 = self.multiplier_ring(self.radical(O))
            if ql.index_val(O2, p) == ql.index_val(O, p):
                return O
            O = O2

    def unit_density(self, O):
        """|(O/pO)^x| / |O/pO|."""
        p, n = self.p, self.n
        Oinv = ql.minv(O)
        mats = []
        for b in self._basis_vectors(O):
            M = ql.mmul(ql.mmul(Oinv, self.regular(b)), O)
            mats.append([[to_zp(x, p, p) for x in r] for r in M])
        units = 0
        for c in itertools.product(range(p), repeat=n):
            M = [[sum(ci * m[i][j] for ci, m in zip(c, mats)) % p for j in range(n)] for i in range(n)]
            if _det_mod_p(M, p):
                units += 1
        return Fraction(units, p ** n)

    def unit_index(self, O):
        """[O_A^x : O^x] for an order O of A."""
        p = self.p
        Omax = self.maximal_order
        idx = ql.index_val(O, p) - ql.index_val(Omax, p)
        return Fraction(p) ** idx * self.unit_density(Omax) / self.unit_density(O)
