"""Finite-precision arithmetic in tame cyclic towers E/Q_p.

The field E is built as W[pi] with W = Z_p[x]/(h(x)) unramified of degree f
and pi^e = p.  An element is stored as pi^val * u with u a unit of O_E given
by integer coefficients on the basis x^i pi^j (flat index j*f + i), each
reduced modulo the power of p that its absolute precision justifies.

The Galois generator is theta = Frob o (pi -> zeta_e pi); it has order
d = e*f whenever gcd(e, f) = 1.
"""
from __future__ import annotations

import functools
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PrecisionExhausted, UnsupportedExtension, ZeroResidue

INF = math.inf


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def vp(x, p: int):
    """p-adic valuation of an int or Fraction (INF for zero)."""
    x = Fraction(x)
    if x == 0:
        return INF
    v = 0
    a, b = x.numerator, x.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


def to_zp(x, p: int, modulus: int) -> int:
    """Reduce a p-integral rational to an integer modulo ``modulus``."""
    x = Fraction(x)
    if x.denominator % p == 0:
        raise ValueError(f"{x} is not p-integral")
    return x.numerator * pow(x.denominator, -1, modulus) % modulus


# ---------------------------------------------------------------------------
# polynomials over F_p (low degree first)

def _ptrim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a, b, p):
    a = _ptrim([c % p for c in a])
    b = _ptrim(b)
    inv = pow(b[-1], -1, p)
    while len(a) >= len(b):
        c = a[-1] * inv % p
        s = len(a) - len(b)
        for i, bi in enumerate(b):
            a[s + i] = (a[s + i] - c * bi) % p
        a = _ptrim(a)
    return a


def _pmul(a, b, p):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] = (out[i + j] + ai * bj) % p
    return _ptrim(out)


def _pgcd(a, b, p):
    a, b = _ptrim(a), _ptrim(b)
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _irreducible_mod_p(h, p) -> bool:
    f = len(h) - 1
    xpow = [0, 1]
    for _ in range(f // 2):
        # xpow <- xpow^p mod h
        r, base, k = [1], xpow, p
        while k:
            if k & 1:
                r = _pmod(_pmul(r, base, p), h, p)
            base = _pmod(_pmul(base, base, p), h, p)
            k >>= 1
        xpow = r
        diff = list(xpow) + [0] * max(0, 2 - len(xpow))
        diff[1] = (diff[1] - 1) % p
        if len(_pgcd(h, diff, p)) > 1:
            return False
    return True


def least_irreducible(p: int, f: int) -> tuple[int, ...]:
    """Least monic irreducible of degree f over F_p, coefficients low-first.

    Candidates are ordered lexicographically on (c_{f-1}, ..., c_0).
    """
    for high_first in itertools.product(range(p), repeat=f):
        h = list(reversed(high_first)) + [1]
        if _irreducible_mod_p(h, p):
            return tuple(h)
    raise AssertionError("no irreducible polynomial found")


def _exact_order(a: int, p: int) -> int:
    k, x = 1, a % p
    while x != 1:
        x = x * a % p
        k += 1
    return k


# ---------------------------------------------------------------------------
# the tower

@functools.lru_cache(maxsize=None)
def _canon_moduli(p, e, f, r):
    out = []
    for j in range(e):
        k = -(-(r - j) // e)
        out.extend([p ** k if k > 0 else 1] * f)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class TowerSpec:
    p: int
    e: int
    f: int
    precision: int
    d: int = field(init=False)
    q: int = field(init=False)
    digits: int = field(init=False)
    modulus: int = field(init=False)
    unram_poly: tuple = field(init=False)
    zeta_e: int = field(init=False)
    frob_x: tuple = field(init=False, repr=False)
    _phi_pows: tuple = field(init=False, repr=False)

    def __repr__(self):
        return f"TowerSpec(p={self.p}, e={self.e}, f={self.f}, precision={self.precision})"

    @property
    def key(self):
        return (self.p, self.e, self.f, self.precision)

    # -- W = Z_p[x]/(h) -----------------------------------------------------
    def wmul(self, a, b):
        f, h, M = self.f, self.unram_poly, self.modulus
        if f == 1:
            return (a[0] * b[0] % M,)
        r = [0] * (2 * f - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    r[i + j] += ai * bj
        for k in range(2 * f - 2, f - 1, -1):
            c = r[k]
            if c:
                for i in range(f):
                    r[k - f + i] -= c * h[i]
        return tuple(c % M for c in r[:f])

    # -- O = W[pi]/(pi^e - p), flat index j*f + i ---------------------------
    def omul(self, a, b):
        f, e, p, M = self.f, self.e, self.p, self.modulus
        out = [0] * (e * f)
        for j1 in range(e):
            aj = a[j1 * f:(j1 + 1) * f]
            if not any(aj):
                continue
            for j2 in range(e):
                bj = b[j2 * f:(j2 + 1) * f]
                if not any(bj):
                    continue
                w = self.wmul(aj, bj)
                k = j1 + j2
                if k >= e:
                    k -= e
                    w = tuple(c * p for c in w)
                for i in range(f):
                    out[k * f + i] += w[i]
        return tuple(c % M for c in out)

    def oadd(self, a, b):
        M = self.modulus
        return tuple((x + y) % M for x, y in zip(a, b))

    def oneg(self, a):
        M = self.modulus
        return tuple(-x % M for x in a)

    def oone(self):
        return (1,) + (0,) * (self.d - 1)

    def ozero(self):
        return (0,) * self.d

    def oscalar(self, c: int):
        return (c % self.modulus,) + (0,) * (self.d - 1)

    def opow(self, a, k: int):
        r, base = self.oone(), a
        while k:
            if k & 1:
                r = self.omul(r, base)
            base = self.omul(base, base)
            k >>= 1
        return r

    def oshift(self, a, k: int):
        """Multiply an O-element by pi^k, k >= 0."""
        if k == 0:
            return a
        f, e, p, M = self.f, self.e, self.p, self.modulus
        qk, s = divmod(k, e)
        out = [0] * (e * f)
        for j in range(e):
            t = j + s
            mult = p ** qk
            if t >= e:
                t -= e
                mult *= p
            for i in range(f):
                out[t * f + i] = a[j * f + i] * mult
        return tuple(c % M for c in out)

    def ounshift(self, a):
        """Divide by pi an O-element whose pi^0 component is 0 mod p."""
        f, e, p = self.f, self.e, self.p
        out = [0] * (e * f)
        for j in range(1, e):
            out[(j - 1) * f:j * f] = a[j * f:(j + 1) * f]
        out[(e - 1) * f:e * f] = [c // p for c in a[:f]]
        return tuple(out)

    def ois_unit(self, a) -> bool:
        return any(c % self.p for c in a[:self.f])

    def oinv(self, a):
        if not self.ois_unit(a):
            raise ZeroDivisionError("not a unit")
        t = self.opow(a, self.q - 2) if self.q > 2 else a
        two = self.oscalar(2)
        reached = 1
        while reached < self.e * self.digits:
            t = self.omul(t, self.oadd(two, self.oneg(self.omul(a, t))))
            reached *= 2
        return t

    def ocanon(self, a, r: int):
        """Canonical representative of an O-element known modulo pi^r."""
        return tuple(c % m for c, m in zip(a, _canon_moduli(self.p, self.e, self.f, r)))

    def oval(self, a, cap: int):
        """pi-adic valuation of an O-element, capped at ``cap``."""
        f, e, p = self.f, self.e, self.p
        best = cap
        for j in range(e):
            if j >= best:
                break
            for c in a[j * f:(j + 1) * f]:
                if c:
                    v = j
                    while c % p == 0 and v < best:
                        c //= p
                        v += e
                    best = min(best, v)
        return best

    def otheta(self, a):
        """theta on an O-element given by coefficients."""
        f, e, M = self.f, self.e, self.modulus
        out = []
        z = 1
        for j in range(e):
            acc = [0] * f
            for i in range(f):
                c = a[j * f + i]
                if c:
                    for k, ph in enumerate(self._phi_pows[i]):
                        acc[k] += c * ph
            out.extend(c * z % M for c in acc)
            z = z * self.zeta_e % M
        return tuple(out)

    # -- element constructors -----------------------------------------------
    def zero(self) -> PadicElem:
        return PadicElem(self, INF, None, INF)

    def one(self) -> PadicElem:
        return self._one

    @functools.cached_property
    def _one(self) -> PadicElem:
        return self.from_int(1)

    def from_int(self, n: int) -> PadicElem:
        return self.from_rational(n)

    def from_rational(self, x) -> PadicElem:
        x = Fraction(x)
        if x == 0:
            return self.zero()
        v = vp(x, self.p)
        u = to_zp(x / Fraction(self.p) ** v, self.p, self.modulus)
        return PadicElem._make(self, v * self.e, self.oscalar(u), self.precision)

    def from_ocoeffs(self, coeffs, val: int = 0, prec: int | None = None) -> PadicElem:
        """pi^val * (sum c_k b_k) for integer coefficients (not nec. a unit)."""
        prec = self.precision if prec is None else prec
        a = tuple(int(c) % self.modulus for c in coeffs)
        return PadicElem._make(self, val, a, prec)

    def from_coords(self, coords, prec: int | None = None) -> PadicElem:
        """Element with the given rational coordinates on the basis x^i pi^j."""
        coords = [Fraction(c) for c in coords]
        vals = [vp(c, self.p) for c in coords]
        a = min(vals)
        if a == INF:
            return self.zero()
        scale = Fraction(self.p) ** (-a)
        ints = [to_zp(c * scale, self.p, self.modulus) for c in coords]
        return self.from_ocoeffs(ints, a * self.e, prec)

    def pi(self) -> PadicElem:
        return self.from_ocoeffs(self.oshift(self.oone(), 1) if self.e > 1 else self.oscalar(self.p),
                                 0)

    def gen_x(self) -> PadicElem:
        """The generator x of the unramified part (x = 0 when f = 1)."""
        if self.f == 1:
            return self.zero()
        return self.from_ocoeffs((0, 1) + (0,) * (self.d - 2))


def make_tower(p: int, e: int, f: int, precision: int, *, zeta_override: int | None = None) -> TowerSpec:
    """Build the tame cyclic tower of ramification e and inertia f over Q_p.

    ``zeta_override`` replaces the root of unity used by theta; it exists
    only for fault-injection checks.
    """
    if not is_prime(p) or p < 3:
        raise UnsupportedExtension(f"p = {p} must be an odd prime")
    if e < 1 or f < 1 or precision < 1:
        raise UnsupportedExtension("e, f and precision must be positive")
    if (e * f) % p == 0:
        raise UnsupportedExtension(f"p = {p} divides the degree d = {e * f}")
    if (p - 1) % e:
        raise UnsupportedExtension(f"e = {e} does not divide p - 1")
    if math.gcd(e, f) != 1:
        raise UnsupportedExtension(f"gcd(e, f) = {math.gcd(e, f)} != 1: Galois group not cyclic")
    t = TowerSpec(p, e, f, precision)
    s = object.__setattr__
    s(t, "d", e * f)
    s(t, "q", p ** f)
    s(t, "digits", -(-precision // e) + 2)
    s(t, "modulus", p ** t.digits)
    s(t, "unram_poly", least_irreducible(p, f))
    M = t.modulus

    a = next(a for a in range(1, p) if _exact_order(a, p) == e)
    z = a
    for _ in range(t.digits + 1):
        z = pow(z, p, M)
    s(t, "zeta_e", z if zeta_override is None else zeta_override % M)

    # Frobenius lift: root of h congruent to x^p, by Newton iteration in W
    if f == 1:
        s(t, "frob_x", (0,))
        s(t, "_phi_pows", ((1,),))
        return t
    h = t.unram_poly
    xw = (0, 1) + (0,) * (f - 2)

    def wpow(a, k):
        r, base = (1,) + (0,) * (f - 1), a
        while k:
            if k & 1:
                r = t.wmul(r, base)
            base = t.wmul(base, base)
            k >>= 1
        return r

    def weval(poly, r):
        acc = (0,) * f
        for c in reversed(poly):
            acc = t.wmul(acc, r)
            acc = (acc[0] + c,) + acc[1:]
        return tuple(c % M for c in acc)

    dh = [i * h[i] for i in range(1, f + 1)]
    # W is O with e = 1; borrow the unit inverse through a helper tower view
    def winv(a):
        tq = p ** f
        inv = wpow(a, tq - 2)
        reached = 1
        while reached < t.digits:
            corr = t.wmul(a, inv)
            corr = ((2 - corr[0]) % M,) + tuple(-c % M for c in corr[1:])
            inv = t.wmul(inv, corr)
            reached *= 2
        return inv

    r = wpow(xw, p)
    for _ in range(t.digits.bit_length() + 2):
        num = weval(h, r)
        den = weval(dh, r)
        step = t.wmul(num, winv(den))
        r = tuple((x - y) % M for x, y in zip(r, step))
    s(t, "frob_x", r)
    pows = [(1,) + (0,) * (f - 1)]
    for _ in range(1, f):
        pows.append(t.wmul(pows[-1], r))
    s(t, "_phi_pows", tuple(pows))
    return t


# ---------------------------------------------------------------------------
# elements

class PadicElem:
    """pi^val * unit + O(pi^prec).  Zero has ``unit is None``."""

    __slots__ = ("tower", "val", "unit", "prec")

    def __init__(self, tower, val, unit, prec):
        self.tower = tower
        self.val = val
        self.unit = unit
        self.prec = prec

    @classmethod
    def _make(cls, tower: TowerSpec, val, a, prec) -> PadicElem:
        prec = min(prec, tower.precision)
        if a is None:
            return cls(tower, INF, None, prec)
        r = prec - val
        if r <= 0:
            return cls(tower, INF, None, prec)
        a = tower.ocanon(a, r)
        v = tower.oval(a, r)
        if v >= r:
            return cls(tower, INF, None, prec)
        if v == 0:
            return cls(tower, val, a, prec)
        for _ in range(v):
            a = tower.ounshift(a)
        return cls(tower, val + v, tower.ocanon(a, r - v), prec)

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return self.unit is None

    def is_exact_zero(self) -> bool:
        return self.unit is None and self.prec == INF

    def is_integral(self) -> bool:
        return self.unit is None or self.val >= 0

    def is_unit(self) -> bool:
        return self.unit is not None and self.val == 0

    @property
    def relprec(self):
        return self.prec - self.val

    def _coerce(self, other) -> PadicElem:
        if isinstance(other, PadicElem):
            if other.tower is not self.tower and other.tower.key != self.tower.key:
                raise ValueError("elements from different towers")
            return other
        if isinstance(other, (int, Fraction)):
            return self.tower.from_rational(other)
        return NotImplemented

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = self.tower
        prec = min(self.prec, other.prec)
        if self.is_zero() and other.is_zero():
            return PadicElem(t, INF, None, prec)
        if self.is_zero():
            return PadicElem._make(t, other.val, other.unit, prec)
        if other.is_zero():
            return PadicElem._make(t, self.val, self.unit, prec)
        a = min(self.val, other.val)
        if a >= prec:
            return PadicElem(t, INF, None, prec)
        u = t.oadd(t.oshift(self.unit, self.val - a), t.oshift(other.unit, other.val - a))
        return PadicElem._make(t, a, u, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return PadicElem(self.tower, self.val, self.tower.ocanon(self.tower.oneg(self.unit), self.relprec), self.prec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            return self + other
        return self + PadicElem(other.tower, other.val, other.tower.oneg(other.unit), other.prec)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = self.tower
        if self.is_exact_zero() or other.is_exact_zero():
            return t.zero()
        if self.is_zero() or other.is_zero():
            if self.is_zero() and other.is_zero():
                prec = self.prec + other.prec
            elif self.is_zero():
                prec = self.prec + other.val
            else:
                prec = other.prec + self.val
            return PadicElem(t, INF, None, min(prec, t.precision))
        val = self.val + other.val
        rel = min(self.relprec, other.relprec)
        return PadicElem._make(t, val, t.omul(self.unit, other.unit), val + rel)

    __rmul__ = __mul__

    def inverse(self) -> PadicElem:
        if self.is_exact_zero():
            raise ZeroDivisionError("inverse of exact zero")
        if self.is_zero():
            raise PrecisionExhausted("element is zero at working precision")
        t = self.tower
        inv = t.oinv(self.unit)
        return PadicElem._make(t, -self.val, inv, -self.val + self.relprec)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        r, base = self.tower.one(), self
        while k:
            if k & 1:
                r = r * base
            base = base * base
            k >>= 1
        return r

    def equals(self, other) -> bool:
        """Equality at the common precision."""
        return (self - other).is_zero()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.equals(other)

    __hash__ = None

    # -- structure ----------------------------------------------------------
    def ocoeffs(self):
        """Coefficients of an integral element as an O-vector."""
        if self.is_zero():
            return self.tower.ozero()
        if self.val < 0:
            raise ValueError("element is not integral")
        return self.tower.oshift(self.unit, self.val)

    def residue_key(self, m: int) -> tuple:
        """Canonical key of the class of an integral element modulo pi^m."""
        t = self.tower
        if self.prec < m:
            raise PrecisionExhausted(f"precision {self.prec} < {m}")
        return t.ocanon(self.ocoeffs(), m)

    def residue(self) -> tuple:
        """Image in the residue field, as coefficients of a polynomial in x mod p."""
        return self.residue_key(1)[:self.tower.f]

    def coords(self) -> list[Fraction]:
        """Rational coordinates on the F-basis x^i pi^j (truncated digits)."""
        t = self.tower
        if self.is_zero():
            return [Fraction(0)] * t.d
        f, e, p = t.f, t.e, t.p
        r = self.relprec
        # symmetric lift of each digit block, then exact multiplication by pi^s
        lifted = []
        for j in range(e):
            k = -(-(r - j) // e)
            m = p ** k if k > 0 else 1
            for c in self.unit[j * f:(j + 1) * f]:
                c %= m
                lifted.append(c - m if c > m // 2 else c)
        qv, s = divmod(self.val, e)
        out = [0] * t.d
        for j in range(e):
            tj, mult = j + s, 1
            if tj >= e:
                tj, mult = tj - e, p
            for i in range(f):
                out[tj * f + i] = lifted[j * f + i] * mult
        sc = Fraction(p) ** qv
        return [Fraction(c) * sc for c in out]

    def is_theta_fixed(self) -> bool:
        return apply_theta(self).equals(self)

    def to_fraction(self) -> Fraction:
        """Rational approximant of an element of F = Q_p."""
        c = self.coords()
        if any(c[1:]):
            raise ValueError("element does not lie in F")
        return c[0]

    def abs_F(self) -> Fraction:
        """|x|_F = p^(-v_E(x)/e) as an exact rational (x must be nonzero)."""
        if self.is_zero():
            raise PrecisionExhausted("absolute value of zero at precision")
        if self.val % self.tower.e:
            raise ValueError("valuation not in v_F-units")
        return Fraction(1, self.tower.p) ** (self.val // self.tower.e)

    # -- text -----------------------------------------------------------------
    def __str__(self):
        return serialize(self)

    def __repr__(self):
        return f"PadicElem({serialize(self)})"


# ---------------------------------------------------------------------------
# operations

def teichmuller(tower: TowerSpec, c) -> PadicElem:
    """Teichmuller lift of a residue-field element (int or x-polynomial)."""
    if isinstance(c, int):
        c = (c,)
    c = tuple(int(a) % tower.p for a in c) + (0,) * (tower.f - len(c))
    if not any(c):
        raise ZeroResidue("zero has no Teichmuller lift")
    a = c + (0,) * (tower.d - tower.f)
    for _ in range(tower.digits + 1):
        a = tower.opow(a, tower.q)
    return PadicElem._make(tower, 0, a, tower.precision)


def apply_theta(x: PadicElem) -> PadicElem:
    t = x.tower
    if x.is_zero():
        return x
    u = t.otheta(x.unit)
    k = x.val % t.e
    if k:
        z = pow(t.zeta_e, k, t.modulus)
        u = tuple(c * z % t.modulus for c in u)
    return PadicElem._make(t, x.val, u, x.prec)


def theta_power(x: PadicElem, k: int) -> PadicElem:
    """theta^k(x) for k >= 0, applied literally (no reduction of k mod d)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    for _ in range(k):
        x = apply_theta(x)
    return x


def norm_trace(x: PadicElem) -> tuple[PadicElem, PadicElem]:
    n, tr, y = x, x, x
    for _ in range(x.tower.d - 1):
        y = apply_theta(y)
        n = n * y
        tr = tr + y
    return n, tr


def valuation_invert(x: PadicElem) -> tuple[int, PadicElem]:
    if x.is_zero():
        raise PrecisionExhausted("value is indistinguishable from 0 at working precision")
    return x.val, x.inverse()


# ---------------------------------------------------------------------------
# text form

def serialize(x: PadicElem) -> str:
    t = x.tower
    tail = "" if x.prec == INF else f" + O(pi^{x.prec})"
    if x.is_zero():
        return "0" + tail
    terms = []
    for j in range(t.e):
        for i in range(t.f):
            c = x.unit[j * t.f + i]
            if c:
                s = str(c)
                if i:
                    s += f"*x^{i}"
                if j:
                    s += f"*pi^{j}"
                terms.append(s)
    return f"pi^{x.val} * ({' + '.join(terms)})" + tail


_TERM = re.compile(r"^(-?\d+)(?:\*x\^(\d+))?(?:\*pi\^(\d+))?$")


def parse(tower: TowerSpec, s: str) -> PadicElem:
    s = s.strip()
    prec = INF
    m = re.search(r"\+ O\(pi\^(-?\d+)\)$", s)
    if m:
        prec = int(m.group(1))
        s = s[:m.start()].strip()
    if s == "0":
        return PadicElem(tower, INF, None, prec)
    m = re.fullmatch(r"pi\^(-?\d+) \* \((.*)\)", s)
    if not m:
        raise ValueError(f"cannot parse {s!r}")
    val = int(m.group(1))
    coeffs = [0] * tower.d
    for term in m.group(2).split(" + "):
        tm = _TERM.match(term.strip())
        if not tm:
            raise ValueError(f"bad term {term!r}")
        i = int(tm.group(2) or 0)
        j = int(tm.group(3) or 0)
        coeffs[j * tower.f + i] += int(tm.group(1))
    return PadicElem._make(tower, val, tuple(c % tower.modulus for c in coeffs), prec)
