"""Orbital integrals of congruence indicators, normalizing factors and matching.

The integrals are computed exactly by reduction to lattices.  For a test
function vol(K)^-1 1_K with K normal in K0 = GL_n(O), the integral over
G/T splits into T-orbits of lattices L = g O^n.  An orbit contributes

    #{k in K0/K : k^-1 x theta(k) in K} * [T_c : Stab_T(L)]

where x = g^-1 delta theta(g) (theta = id on the untwisted side), T_c is the
maximal compact subgroup of the centralizer torus and Stab_T(L) = O(L)^x for
the order O(L) of L in the centralizer algebra.  The lattice count is taken
over the ball of primitive lattices with varpi^D O^n in L in O^n; twisted
lattices are counted modulo F^x rather than E^x.
"""
from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import qlinalg as ql
from .errors import (IrregularInput, NotANorm, NotInDomain, PrecisionExhausted,
                     UncertifiedComparison)
from .etale import EtaleAlgebra, _det_mod_p, _rank_kernel_mod_p
from .localfield import INF, make_tower, serialize, to_zp, vp
from .matgrp import (REGULARITY_SLACK, CongruenceLevel, MatrixE, TwistedElem, dth_root_tu,
                     is_norm_of, is_regular, is_top_unipotent, poly_discriminant,
                     theta_fixed_level, twisted_norm)

CERTIFY_WINDOW = 2


@dataclass(frozen=True)
class HaarNormalization:
    group_vol_convention: str = "vol(GL_n(O_E)) = 1 on G(F); vol(GL_n(O_F)) = 1 on H(F)"
    torus_vol_convention: str = "vol(maximal compact of the centralizer torus) = 1"
    group_vol: Fraction = Fraction(1)
    torus_vol: Fraction = Fraction(1)

    def as_dict(self):
        return {"group": self.group_vol_convention, "torus": self.torus_vol_convention}


DEFAULT_NORMALIZATION = HaarNormalization()


@dataclass
class OrbitalValue:
    """Unnormalized integral ``value`` and the factor D; the normalized
    integral is D^(1/2) * value."""

    value: Fraction
    normalizing_factor: Fraction
    depth_used: int
    certified: bool
    orbits: int = 0

    def normalized_squared(self) -> Fraction:
        return self.normalizing_factor * self.value ** 2


@dataclass(frozen=True)
class TestFunction:
    """vol(K)^-1 1_K on H (side 'H') or vol(K_E(m))^-1 1_{K_E(m) x| theta} ('G-twisted')."""

    __test__ = False  # keep pytest from collecting this class

    side: str
    level: CongruenceLevel

    def __post_init__(self):
        if self.side not in ("H", "G-twisted"):
            raise ValueError("side must be 'H' or 'G-twisted'")
        expected = "F" if self.side == "H" else "E"
        if self.level.field != expected:
            raise ValueError(f"side {self.side} needs an {expected}-level")

    @classmethod
    def for_matching(cls, tower, m: int):
        """The pair (f^H, f~^G) compared at level m."""
        return (cls("H", CongruenceLevel("F", theta_fixed_level(tower.e, m))),
                cls("G-twisted", CongruenceLevel("E", m)))


def gl_order(n: int, q: int) -> int:
    out = 1
    for i in range(n):
        out *= q ** n - q ** i
    return out


def volume(level: CongruenceLevel, norm: HaarNormalization, n: int, q: int) -> Fraction:
    """vol(K(m)) with vol(GL_n(O)) = norm.group_vol; q is the residue field size."""
    if level.m == 0:
        return norm.group_vol
    return norm.group_vol / (gl_order(n, q) * q ** (n * n * (level.m - 1)))


# ---------------------------------------------------------------------------
# normalizing factors

def _abs_p(x: Fraction, p: int) -> Fraction:
    return Fraction(1, p) ** vp(x, p) if x else Fraction(0)


def normalizing_factor_H(gamma: MatrixE) -> Fraction:
    """|disc(charpoly gamma)|_F |det gamma|_F^-(n-1)."""
    n = gamma.n
    disc = poly_discriminant(gamma.charpoly())
    if disc.is_zero():
        if disc.prec <= 0:
            raise PrecisionExhausted("discriminant undetermined")
        return Fraction(0)
    if disc.val >= disc.prec - REGULARITY_SLACK:
        raise PrecisionExhausted("discriminant valuation not determined at precision")
    return disc.abs_F() * gamma.det().abs_F() ** (-(n - 1))


def _twisted_ad_matrix(delta: MatrixE, fm):
    """F-linear matrix of X -> delta theta(X) delta^-1 - X on M_n(E).

    delta is taken as the exact rational element it approximates; theta comes
    from the (higher precision) field model ``fm``.
    """
    n, d = delta.n, fm.d
    Delta = _coords_matrix(fm, delta)
    Dinv = ql.minv(Delta)
    Th = ql.kron(ql.identity(n), fm.theta)
    left = ql.mmul(Delta, Th)
    right = ql.mmul(ql.minv(Th), Dinv)
    cols = []
    for a in range(n):
        for b in range(n):
            for k in range(d):
                entries = [[fm.zero() for _ in range(n)] for _ in range(n)]
                entries[a][b] = [Fraction(int(i == k)) for i in range(d)]
                X = fm.block(entries)
                Y = ql.msub(ql.mmul(ql.mmul(left, X), right), X)
                cols.append([c for i in range(n) for j in range(n) for c in fm.entry(Y, i, j)])
    return ql.transpose(cols)


def normalizing_factor_twisted(delta) -> Fraction:
    """|product of the nonzero eigenvalues of Ad(delta) o d(theta) - 1|_F."""
    dm = delta.g if isinstance(delta, TwistedElem) else delta
    t, n = dm.tower, dm.n
    hp = make_tower(t.p, t.e, t.f, t.precision + t.e * 24)
    fm = _FieldModel(t.p, t.e, t.f, hp)
    Delta = _coords_matrix(fm, dm)
    spread = max(0, -ql.mval(Delta, t.p), -ql.mval(ql.minv(Delta), t.p))
    cp = ql.charpoly(_twisted_ad_matrix(dm, fm))
    low = list(reversed(cp))  # low[i] = coefficient of X^i
    # theta is known to hp.digits p-adic digits; conjugation by delta costs 2 * spread
    threshold = hp.digits - 4 - 2 * spread
    for c in low[:n]:
        if c and vp(c, t.p) < threshold:
            raise PrecisionExhausted("kernel of Ad(delta) d(theta) - 1 not resolved at precision")
    c = low[n]
    if c == 0:
        return Fraction(0)
    if vp(c, t.p) >= threshold:
        raise PrecisionExhausted("normalizing factor not resolved at precision")
    return _abs_p(c, t.p)


# ---------------------------------------------------------------------------
# exact model of E as an F-vector space

class _FieldModel:
    """E (or F when e = f = 1) on the basis x^i pi^j, index j*f + i."""

    def __init__(self, p, e=1, f=1, tower=None):
        self.p, self.e, self.f, self.d = p, e, f, e * f
        self.tower = tower
        h = tower.unram_poly if tower is not None and f > 1 else None
        d = self.d
        self.L = []
        for k in range(d):
            j1, i1 = divmod(k, f)
            M = ql.zeros(d)
            for l in range(d):
                j2, i2 = divmod(l, f)
                xs = self._xpow(i1 + i2, h)
                jj, mult = j1 + j2, 1
                if jj >= e:
                    jj, mult = jj - e, p
                for i, c in enumerate(xs):
                    if c:
                        M[jj * f + i][l] += c * mult
            self.L.append(M)
        if tower is not None and d > 1:
            self.theta = ql.zeros(d)
            for k in range(d):
                unit = [0] * d
                unit[k] = 1
                img = tower.otheta(tuple(unit))
                for r, c in enumerate(img):
                    self.theta[r][k] = Fraction(c)
        else:
            self.theta = ql.identity(d)

    def _xpow(self, k, h):
        f = self.f
        poly = [0] * (k + 1)
        poly[k] = 1
        if h is not None:
            for top in range(k, f - 1, -1):
                c = poly[top]
                if c:
                    for i in range(f + 1):
                        poly[top - f + i] -= c * h[i]
        return (poly + [0] * f)[:f]

    def regular(self, c):
        d = self.d
        out = ql.zeros(d)
        for ck, Lk in zip(c, self.L):
            if ck:
                for r in range(d):
                    for s in range(d):
                        if Lk[r][s]:
                            out[r][s] += ck * Lk[r][s]
        return out

    def block(self, entries):
        n, d = len(entries), self.d
        out = ql.zeros(n * d)
        for a in range(n):
            for b in range(n):
                R = self.regular(entries[a][b])
                for r in range(d):
                    for s in range(d):
                        out[a * d + r][b * d + s] = R[r][s]
        return out

    def entry(self, M, a, b):
        d = self.d
        return [M[a * d + r][b * d] for r in range(d)]

    def v(self, c):
        best = INF
        for k, ck in enumerate(c):
            if ck:
                best = min(best, self.e * vp(ck, self.p) + k // self.f)
        return best

    def pi_power(self, a):
        c = [Fraction(0)] * self.d
        c[(a % self.e) * self.f] = Fraction(self.p) ** (a // self.e)
        return c

    def one(self):
        return self.pi_power(0)

    def zero(self):
        return [Fraction(0)] * self.d

    @lru_cache(maxsize=None)
    def reps(self, a):
        """Representatives of O / pi^a as coordinate vectors."""
        out = []
        digit = list(itertools.product(range(self.p), repeat=self.f))
        for combo in itertools.product(digit, repeat=a):
            c = [Fraction(0)] * self.d
            for l, r in enumerate(combo):
                u, j = divmod(l, self.e)
                for i, ri in enumerate(r):
                    c[j * self.f + i] += ri * Fraction(self.p) ** u
            out.append(tuple(c))
        return out


def _sphere(fm: _FieldModel, n: int, s: int):
    """Primitive O-lattices whose largest elementary divisor exponent is s."""
    if n == 1:
        if s == 0:
            B = fm.block([[fm.one()]])
            yield B, ql.minv(B)
        return
    pos = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for a in itertools.product(range(s + 1), repeat=n):
        if sum(a) > (n - 1) * s or (sum(a) < s):
            continue
        for offs in itertools.product(*[fm.reps(a[i]) for i, _ in pos]):
            if min(a) > 0 and all(fm.v(c) > 0 for c in offs):
                continue
            entries = [[fm.zero() for _ in range(n)] for _ in range(n)]
            for i in range(n):
                entries[i][i] = fm.pi_power(a[i])
            for (i, j), c in zip(pos, offs):
                entries[i][j] = list(c)
            B = fm.block(entries)
            Binv = ql.minv(B)
            vmin = min(fm.v(fm.entry(Binv, x, y)) for x in range(n) for y in range(n))
            if -vmin == s:
                yield B, Binv


# ---------------------------------------------------------------------------
# twisted residue data

def _omat_inv(t, rows):
    n = len(rows)
    M = [list(r) + [t.oone() if i == j else t.ozero() for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        piv = next(i for i in range(c, n) if t.ois_unit(M[i][c]))
        M[c], M[piv] = M[piv], M[c]
        inv = t.oinv(M[c][c])
        M[c] = [t.omul(x, inv) for x in M[c]]
        for i in range(n):
            if i != c and any(M[i][c]):
                f = M[i][c]
                M[i] = [t.oadd(x, t.oneg(t.omul(f, y))) for x, y in zip(M[i], M[c])]
    return [r[n:] for r in M]


def _omat_mul(t, A, B):
    n = len(A)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = t.ozero()
            for k in range(n):
                acc = t.oadd(acc, t.omul(A[i][k], B[k][j]))
            row.append(acc)
        out.append(row)
    return out


class _TwistedResidue:
    """Membership in S_m = {k theta(k)^-1 : k in GL_n(O_E)} modulo pi^m, and
    the number of k in GL_n(O_E / pi^m) with theta(k) = k mod pi^m.

    Modulo pi, x = k sigma(k)^-1 asks for n independent fixed vectors of the
    semilinear map v -> x sigma(v); fixed vectors independent over F_p are
    independent over k_E, so an F_p-kernel of dimension n decides it.  On the
    abelian layer 1 + pi^j M_n(k_E) twisting by 1 + pi^j Y adds
    zeta^j sigma(Y) - Y, and the choices left free at each step are
    theta-fixed, which do not affect membership.
    """

    def __init__(self, p, e, f, n, m):
        self.t = t = make_tower(p, e, f, m + 2 * e)
        self.p, self.f, self.n, self.m = p, f, n, m
        self.residues = [tuple(c) for c in itertools.product(range(p), repeat=f)]
        self._sigma = {y: self._frob(y) for y in self.residues}
        zeta = t.zeta_e % p
        self.layers = {}
        kernel = 1
        for j in range(1, m):
            z = pow(zeta, j, p)
            solve, ker = {}, 0
            for y in self.residues:
                x = tuple((a - z * b) % p for a, b in zip(y, self._sigma[y]))
                solve.setdefault(x, y)
                ker += not any(x)
            self.layers[j] = solve
            kernel *= ker
        self.fixed = gl_order(n, p) * kernel ** (n * n)
        self._cache = {}

    def _frob(self, y):
        t = self.t
        return tuple(c % self.p for c in t.otheta(tuple(y) + (0,) * (t.d - self.f))[:self.f])

    def _lift(self, y, j=0):
        t = self.t
        return t.oshift(tuple(y) + (0,) * (t.d - self.f), j)

    def _rmul(self, a, b):
        return tuple(c % self.p for c in self.t.wmul(a, b))

    def _residue_solution(self, xbar):
        """k over k_E with xbar = k sigma(k)^-1, or None."""
        p, f, n = self.p, self.f, self.n
        if f == 1:
            ok = all(xbar[i][j][0] == (i == j) for i in range(n) for j in range(n))
            return [[(int(i == j),) for j in range(n)] for i in range(n)] if ok else None
        cols = []
        for a in range(n):
            for i in range(f):
                unit = tuple(int(k == i) for k in range(f))
                su = self._sigma[unit]
                img = []
                for r in range(n):
                    y = self._rmul(xbar[r][a], su)
                    if r == a:
                        y = tuple((c - u) % p for c, u in zip(y, unit))
                    img.extend(y)
                cols.append(img)
        ker = _rank_kernel_mod_p(ql.transpose(cols), p)
        if len(ker) < n:
            return None
        vecs = [[tuple(v[a * f:(a + 1) * f]) for a in range(n)] for v in ker[:n]]
        return [[vecs[c][r] for c in range(n)] for r in range(n)]

    def contains(self, key) -> bool:
        if key in self._cache:
            return self._cache[key]
        t, n, m, p, f = self.t, self.n, self.m, self.p, self.f
        x = [list(key[i * n:(i + 1) * n]) for i in range(n)]
        k = self._residue_solution([[tuple(c % p for c in a[:f]) for a in r] for r in x])
        ok = k is not None
        if ok:
            ok = self._descend_layers(x, [[self._lift(y) for y in r] for r in k])
        self._cache[key] = ok
        return ok

    def _descend_layers(self, x, k):
        t, n, m, p, f = self.t, self.n, self.m, self.p, self.f

        def twist(x, k):
            th = [[t.otheta(a) for a in r] for r in k]
            y = _omat_mul(t, _omat_mul(t, _omat_inv(t, k), x), th)
            return [[t.ocanon(a, m) for a in r] for r in y]

        x = twist(x, k)
        one = t.oone()
        for j in range(1, m):
            Y = []
            for i in range(n):
                row = []
                for c in range(n):
                    a = t.ocanon(t.oadd(x[i][c], t.oneg(one)) if i == c else x[i][c], m)
                    for _ in range(j):
                        a = t.ounshift(a)
                    y = self.layers[j].get(tuple(v % p for v in a[:f]))
                    if y is None:
                        return False
                    row.append(y)
                Y.append(row)
            k = [[t.oadd(one, self._lift(Y[i][c], j)) if i == c else self._lift(Y[i][c], j)
                  for c in range(n)] for i in range(n)]
            x = twist(x, k)
        return True


@lru_cache(maxsize=None)
def _twisted_residue(p, e, f, n, m):
    return _TwistedResidue(p, e, f, n, m)


# ---------------------------------------------------------------------------
# the engine

def _rational_F(M: MatrixE):
    if not M.is_theta_fixed():
        raise NotInDomain("matrix does not lie in GL_n(F)")
    return [[a.coords()[0] for a in r] for r in M.rows]


def _is_compact(charpoly) -> bool:
    """Whether the characteristic roots are units (a conjugate lies in GL_n(O))."""
    for c in charpoly[1:]:
        if not c.is_zero() and c.val < 0:
            return False
    last = charpoly[-1]
    return not last.is_zero() and last.val == 0


class _Engine:
    """Lattice-orbit enumeration shared by both sides."""

    def __init__(self, fm, n, op, alg, weight, scales):
        self.fm, self.n, self.op, self.alg = fm, n, op, alg
        self.weight = weight
        self.scales = scales
        self.p = fm.p
        self.groups = {}
        self.unit_idx = {}
        self.total = Fraction(0)
        self.orbits = 0

    def _equivalent(self, B1, B2):
        """Whether t B1 = B2 for some t in T (both lattices have the same order)."""
        p = self.p
        B2inv = ql.minv(B2)
        k = len(B1)
        blocks = [ql.mmul(ql.mmul(B2inv, G), B1) for G in self.alg.action_basis]
        rows = [[blk[i][j] for blk in blocks] for i in range(k) for j in range(k)]
        try:
            M = ql.preimage(rows, p)
        except ValueError:
            return False
        mats = []
        for b in ql.transpose(M):
            C = ql.mmul(ql.mmul(B2inv, self.alg.act(b)), B1)
            mats.append([[to_zp(x, p, p) for x in r] for r in C])
        n = self.alg.n
        for c in itertools.product(range(p), repeat=n):
            if not any(c):
                continue
            A = [[sum(ci * m[i][j] for ci, m in zip(c, mats)) % p for j in range(k)] for i in range(k)]
            if _det_mod_p(A, p):
                return True
        return False

    def _add(self, B, w):
        O = self.alg.stabilizer_order(B)
        key = ql.canonical_key(O, self.p)
        reps = self.groups.setdefault(key, [])
        for R in reps:
            if self._equivalent(R, B):
                return False
        reps.append(B)
        if key not in self.unit_idx:
            self.unit_idx[key] = self.alg.unit_index(O)
        self.total += w * self.unit_idx[key]
        self.orbits += 1
        return True

    def run(self, depth):
        first_stable, last_new = None, -1
        s = 0
        for s in range(depth + 1):
            for B, Binv in _sphere(self.fm, self.n, s):
                for S, Sinv in self.scales:
                    BF = ql.mmul(B, S) if S is not None else B
                    BFinv = ql.mmul(Sinv, Binv) if S is not None else Binv
                    Y = ql.mmul(ql.mmul(BFinv, self.op), BF)
                    if not ql.is_integral(Y, self.p) or vp(ql.det(Y), self.p) != 0:
                        continue
                    if first_stable is None:
                        first_stable = s
                    w = self.weight(Y)
                    if w and self._add(BF, w):
                        last_new = s
            if first_stable is not None and s >= max(first_stable, last_new) + CERTIFY_WINDOW:
                return s, True
        return s, False


def _untwisted(gamma: MatrixE, level: CongruenceLevel, depth: int):
    t, n, p = gamma.tower, gamma.n, gamma.tower.p
    if not _is_compact(gamma.charpoly()):
        return Fraction(0), 0, True, 0
    G = _rational_F(gamma)
    fm = _FieldModel(p)
    alg = EtaleAlgebra(G, p)
    k = level.m
    idx = Fraction(1) / volume(level, DEFAULT_NORMALIZATION, n, p)
    ident = ql.identity(n)

    def weight(Y):
        if k == 0:
            return idx
        D = ql.msub(Y, ident)
        return idx if all(vp(x, p) >= k for r in D for x in r) else 0

    eng = _Engine(fm, n, G, alg, weight, [(None, None)])
    used, cert = eng.run(depth)
    return eng.total, used, cert, eng.orbits


def _frame(delta: TwistedElem):
    dm = delta.g
    t, n = dm.tower, dm.n
    if delta.frame is not None:
        g0, h = delta.frame
        return g0, _rational_F(h)
    if n == 1:
        return MatrixE.identity(t, 1), [[Fraction(1)]]
    if dm.is_theta_fixed():
        return MatrixE.identity(t, n), _rational_F(dm)
    raise NotInDomain("twisted centralizer unknown: pass an element built by twisted_conjugate")


def _coords_matrix(fm, M: MatrixE):
    return fm.block([[a.coords() for a in r] for r in M.rows])


def _twisted(delta: TwistedElem, level: CongruenceLevel, depth: int):
    dm = delta.g
    t, n, p = dm.tower, dm.n, dm.tower.p
    if not _is_compact(twisted_norm(dm).charpoly()):
        return Fraction(0), 0, True, 0
    m = level.m
    hp = make_tower(p, t.e, t.f, t.precision + t.e * (2 * depth + m + 12))
    fm = _FieldModel(p, t.e, t.f, hp)
    g0, h = _frame(delta)
    R0 = _coords_matrix(fm, g0)
    R0inv = ql.minv(R0)
    Id = ql.identity(fm.d)
    action = [ql.mmul(ql.mmul(R0inv, ql.kron(ql.mpow(h, i), Id)), R0) for i in range(n)]
    alg = EtaleAlgebra(h, p, action=action)
    Theta_n = ql.kron(ql.identity(n), fm.theta)
    Theta_inv = ql.minv(Theta_n)
    op = ql.mmul(_coords_matrix(fm, dm), Theta_n)
    residue = _twisted_residue(p, t.e, t.f, n, m) if m else None

    def weight(Y):
        if m == 0:
            return Fraction(1)
        X = ql.mmul(Y, Theta_inv)
        key = []
        for i in range(n):
            for j in range(n):
                c = fm.entry(X, i, j)
                if not all(x.denominator % p for x in c):
                    raise PrecisionExhausted("twisted residue not resolved at precision")
                key.append(hp.from_coords(c, hp.precision).residue_key(m) if any(c)
                           else hp.ocanon(hp.ozero(), m))
        return Fraction(residue.fixed) if residue.contains(tuple(key)) else 0

    scales = []
    for j in range(t.e):
        S = ql.kron(ql.identity(n), fm.regular(fm.pi_power(j)))
        scales.append((S, ql.minv(S)))
    eng = _Engine(fm, n, op, alg, weight, scales)
    used, cert = eng.run(depth)
    return eng.total, used, cert, eng.orbits


def orbital_integral(fn: TestFunction, at, norm: HaarNormalization = DEFAULT_NORMALIZATION,
                     depth: int = 4) -> OrbitalValue:
    """Orbital integral of ``fn`` at ``at``; ``depth`` bounds the lattice ball.

    The enumeration stops early once the result is certified.
    """
    if fn.side == "H":
        if isinstance(at, TwistedElem):
            raise ValueError("H-side test function needs an element of GL_n(F)")
        if not is_regular(at):
            raise IrregularInput("orbital integrals are computed at regular elements")
        D = normalizing_factor_H(at)
        value, used, cert, orbits = _untwisted(at, fn.level, depth)
    else:
        if not isinstance(at, TwistedElem):
            at = TwistedElem(at)
        if not is_regular(twisted_norm(at.g)):
            raise IrregularInput("twisted orbital integrals are computed at theta-regular elements")
        D = normalizing_factor_twisted(at)
        value, used, cert, orbits = _twisted(at, fn.level, depth)
    scale = norm.torus_vol / norm.group_vol
    return OrbitalValue(value * scale, D, used, cert, orbits)


def transfer_factor(gamma: MatrixE, delta) -> Fraction:
    if not is_norm_of(gamma, delta):
        raise NotANorm("gamma is not a norm of delta")
    return Fraction(1)


# ---------------------------------------------------------------------------
# norms and matching

def _scalar_norm_witness(gamma_entry):
    """delta in E^x with N(delta) = gamma_entry, or None."""
    t = gamma_entry.tower
    if gamma_entry.is_zero():
        return None
    v = gamma_entry.val // t.e
    if v % t.f:
        return None
    a = v // t.f
    pi = t.pi()
    Npi = twisted_norm(MatrixE(t, [[pi]]))[0, 0]
    target = gamma_entry / Npi ** a
    digit = list(itertools.product(range(t.p), repeat=t.f))
    for r in digit:
        if not any(c % t.p for c in r):
            continue
        w = t.from_ocoeffs(tuple(r) + (0,) * (t.d - t.f))
        Nw = twisted_norm(MatrixE(t, [[w]]))[0, 0]
        ratio = target / Nw
        if (ratio - 1).is_zero() or (ratio - 1).val >= t.e:
            root = dth_root_tu(MatrixE(t, [[ratio]]))[0, 0]
            return pi ** a * w * root
    return None


@dataclass
class MatchReport:
    tower: tuple
    n: int
    m: int
    gamma: list
    irregular: bool
    is_norm: bool
    witness: list | None
    lhs: Fraction
    rhs: Fraction | None
    D_H: Fraction
    D_G: Fraction | None
    certified_H: bool
    certified_G: bool
    depth_used: int
    verdict: str
    wall_ms: float = 0.0
    normalization: dict = field(default_factory=lambda: DEFAULT_NORMALIZATION.as_dict())

    @property
    def certified(self) -> bool:
        return self.certified_H and self.certified_G

    def to_dict(self):
        def q(x):
            return None if x is None else f"{x.numerator}/{x.denominator}"
        return {
            "tower": {"p": self.tower[0], "e": self.tower[1], "f": self.tower[2], "precision": self.tower[3]},
            "n": self.n, "m": self.m, "gamma": self.gamma,
            "irregular": self.irregular, "is_norm": self.is_norm, "witness": self.witness,
            "lhs": q(self.lhs), "rhs": q(self.rhs), "D_H": q(self.D_H), "D_G": q(self.D_G),
            "certified_H": self.certified_H, "certified_G": self.certified_G,
            "depth_used": self.depth_used, "verdict": self.verdict,
            "wall_ms": round(self.wall_ms, 3), "normalization": self.normalization,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def norm_witness(gamma: MatrixE):
    """A delta with N(delta) conjugate to gamma, or None if gamma is not a norm.

    Supported: n = 1, topologically unipotent gamma, and diagonal gamma.
    """
    t, n = gamma.tower, gamma.n
    if n == 1:
        w = _scalar_norm_witness(gamma[0, 0])
        return None if w is None else TwistedElem(MatrixE(t, [[w]]))
    if is_top_unipotent(gamma):
        return TwistedElem(dth_root_tu(gamma))
    off = [gamma[i, j] for i in range(n) for j in range(n) if i != j]
    if all(a.is_zero() for a in off):
        ws = [_scalar_norm_witness(gamma[i, i]) for i in range(n)]
        if any(w is None for w in ws):
            raise NotInDomain("diagonal gamma with a non-norm eigenvalue: norm status not decided")
        h = MatrixE.diag(t, [t.from_int(i + 1) for i in range(n)])
        return TwistedElem(MatrixE.diag(t, ws), (MatrixE.identity(t, n), h))
    raise NotInDomain("witness construction covers n = 1, topologically unipotent and diagonal gamma")


def check_matching(gamma: MatrixE, m: int, norm: HaarNormalization = DEFAULT_NORMALIZATION,
                   depth: int = 6, *, require_certified: bool = True) -> MatchReport:
    start = time.perf_counter()
    t, n = gamma.tower, gamma.n
    tower = t.key
    gser = [serialize(a) for a in gamma.entries()]
    try:
        regular = is_regular(gamma)
    except IrregularInput:
        regular = False
    if not regular:
        return MatchReport(tower, n, m, gser, True, False, None, Fraction(0), Fraction(0),
                           Fraction(0), Fraction(0), True, True, 0, "PASS",
                           (time.perf_counter() - start) * 1e3, norm.as_dict())
    fH, fG = TestFunction.for_matching(t, m)
    H = orbital_integral(fH, gamma, norm, depth)
    delta = norm_witness(gamma)
    if delta is None:
        ok = H.value == 0
        rep = MatchReport(tower, n, m, gser, False, False, None, H.value, None,
                          H.normalizing_factor, None, H.certified, True, H.depth_used,
                          "PASS" if ok else "FAIL", 0.0, norm.as_dict())
    else:
        transfer_factor(gamma, delta)
        G = orbital_integral(fG, delta, norm, depth)
        ok = H.normalized_squared() == G.normalized_squared()
        rep = MatchReport(tower, n, m, gser, False, True, [serialize(a) for a in delta.g.entries()],
                          H.value, G.value, H.normalizing_factor, G.normalizing_factor,
                          H.certified, G.certified, max(H.depth_used, G.depth_used),
                          "PASS" if ok else "FAIL", 0.0, norm.as_dict())
    rep.wall_ms = (time.perf_counter() - start) * 1e3
    if require_certified and not rep.certified:
        raise UncertifiedComparison(f"uncertified at depth {depth}: {rep.to_json()}")
    return rep
