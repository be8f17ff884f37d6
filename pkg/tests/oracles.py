"""Independent reference computations used by the tests.

None of these import the engine internals: they work from explicit formulas
for quadratic fields, walk the Bruhat-Tits tree directly, or use sympy.
"""
from __future__ import annotations

from collections import deque
from fractions import Fraction

import sympy


def vp(x, p):
    x = Fraction(x)
    if x == 0:
        return float("inf")
    v, num, den = 0, x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def is_square_unit_mod_p(u, p):
    u = Fraction(u)
    r = u.numerator * pow(u.denominator, -1, p) % p
    return pow(r, (p - 1) // 2, p) == 1


# ---------------------------------------------------------------------------
# sympy linear algebra

def sympy_charpoly(rows):
    M = sympy.Matrix([[sympy.Rational(a.numerator, a.denominator) for a in r] for r in rows])
    lam = sympy.Symbol("lam")
    poly = M.charpoly(lam)
    return [Fraction(int(c.p), int(c.q)) for c in poly.all_coeffs()]


def sympy_det(rows):
    M = sympy.Matrix([[sympy.Rational(a.numerator, a.denominator) for a in r] for r in rows])
    d = M.det()
    return Fraction(int(d.p), int(d.q))


# ---------------------------------------------------------------------------
# n = 1 norms

def quadratic_norm_form(p, e, f, h=None):
    """N(a + b w) for E = Q_p(w): w = pi (pi^2 = p) or w = x (root of monic h)."""
    if e == 2:
        return lambda a, b: a * a - p * b * b
    c0, c1 = h[0], h[1]
    return lambda a, b: a * a - c1 * a * b + c0 * b * b


def is_norm_oracle(gamma, p, e, f, h=None):
    """Whether the rational gamma is a norm from the quadratic extension E.

    Valuations of norms: all of Z (e = 2, N(pi) = -p) or 2Z (f = 2).  Unit
    norms are enumerated as residues mod p^2 of the norm form; 1 + pZ_p is in
    the norm group, so this decides membership.
    """
    v = vp(gamma, p)
    N = quadratic_norm_form(p, e, f, h)
    if e == 2:
        unit = Fraction(gamma) / Fraction(-p) ** v
    else:
        if v % 2:
            return False
        unit = Fraction(gamma) / Fraction(p) ** v
    mod = p * p
    target = unit.numerator * pow(unit.denominator, -1, mod) % mod
    norms = {N(a, b) % mod for a in range(mod) for b in range(mod) if N(a, b) % p}
    return target in norms


# ---------------------------------------------------------------------------
# unit index of orders in a quadratic algebra

def quadratic_unit_index(disc, p, c):
    """[O_A^x : (Z_p + p^c O_A)^x] for A = Q_p[x]/(x^2 - disc), from the
    classical formula p^(c-1) (p - chi) with chi = 1, -1, 0 for split,
    inert, ramified."""
    if c == 0:
        return Fraction(1)
    v = vp(disc, p)
    if v % 2:
        chi = 0
    else:
        chi = 1 if is_square_unit_mod_p(Fraction(disc) / Fraction(p) ** v, p) else -1
    return Fraction(p) ** (c - 1) * (p - chi)


# ---------------------------------------------------------------------------
# brute-force untwisted orbital integral for elliptic n = 2

def _class_key(B, p):
    """Homothety class of the lattice spanned by the columns of B, as
    (K, normalized primitive vector mod p^K)."""
    s = min(vp(x, p) for r in B for x in r)
    B = [[x / Fraction(p) ** s for x in r] for r in B]
    det = B[0][0] * B[1][1] - B[0][1] * B[1][0]
    K = vp(det, p)
    if K == 0:
        return (0, None)
    mod = p ** K

    def red(x):
        return x.numerator * pow(x.denominator, -1, mod) % mod

    for col in range(2):
        v1, v2 = B[0][col], B[1][col]
        if vp(v1, p) == 0:
            return (K, (1, red(v2 / v1)))
        if vp(v2, p) == 0:
            return (K, (red(v1 / v2), 1))
    raise AssertionError("no primitive basis column")


def _basis_from_key(key, p):
    K, v = key
    if K == 0:
        return [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
    if v[0] == 1:
        return [[Fraction(1), Fraction(0)], [Fraction(v[1]), Fraction(p ** K)]]
    return [[Fraction(v[0]), Fraction(p ** K)], [Fraction(1), Fraction(0)]]


def _mm(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def _inv2(A):
    det = A[0][0] * A[1][1] - A[0][1] * A[1][0]
    return [[A[1][1] / det, -A[0][1] / det], [-A[1][0] / det, A[0][0] / det]]


def tree_ball(p, radius):
    """Vertices of the tree of PGL_2(Q_p) within ``radius`` of the standard
    vertex, by breadth-first search through index-p sublattices."""
    start = (0, None)
    seen = {start: 0}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        dist = seen[key]
        if dist == radius:
            continue
        B = _basis_from_key(key, p)
        moves = [[[Fraction(1), Fraction(0)], [Fraction(c), Fraction(p)]] for c in range(p)]
        moves.append([[Fraction(p), Fraction(0)], [Fraction(0), Fraction(1)]])
        for M in moves:
            nk = _class_key(_mm(B, M), p)
            if nk not in seen:
                seen[nk] = dist + 1
                queue.append(nk)
    return seen


def gl2_order(q):
    return (q * q - 1) * (q * q - q)


def brute_force_orbital_elliptic(gamma, p, k, radius):
    """Untwisted orbital integral of vol(K_F(k))^-1 1_{K_F(k)} at an elliptic
    2x2 rational gamma: (1/e_A) * sum over vertices of [K0:K] * 1[good].

    Uses vol(GL_2(Z_p)) = 1, vol of the maximal compact of T = 1 and the
    fact that T/Z has volume e_A (the ramification index of F[gamma])."""
    tr = gamma[0][0] + gamma[1][1]
    det = gamma[0][0] * gamma[1][1] - gamma[0][1] * gamma[1][0]
    disc = tr * tr - 4 * det
    v = vp(disc, p)
    if v % 2 == 0 and is_square_unit_mod_p(disc / Fraction(p) ** v, p):
        raise ValueError("gamma is not elliptic")
    e_A = 2 if v % 2 else 1
    index = gl2_order(p) * p ** (4 * (k - 1)) if k >= 1 else 1
    total = 0
    for key in tree_ball(p, radius):
        B = _basis_from_key(key, p)
        Y = _mm(_mm(_inv2(B), gamma), B)
        if k == 0:
            good = all(vp(x, p) >= 0 for r in Y for x in r) and vp(
                Y[0][0] * Y[1][1] - Y[0][1] * Y[1][0], p) == 0
        else:
            good = all(vp(Y[i][j] - (1 if i == j else 0), p) >= k for i in range(2) for j in range(2))
        total += good
    return Fraction(index * total, e_A)


# ---------------------------------------------------------------------------
# twisted residue classes by enumeration

def twisted_residue_image(tower, n, m):
    """({k theta(k)^-1 mod pi^m}, #{k : theta(k) = k mod pi^m}) by listing
    GL_n(O_E / pi^m).  Keys are tuples of residue keys, row-major."""
    import itertools

    from basechange import MatrixE

    p, e, f = tower.p, tower.e, tower.f
    digits = []
    for j in range(e):
        k = -(-(m - j) // e)
        digits.extend([range(p ** k if k > 0 else 1)] * f)
    elems = [tower.from_ocoeffs(c) for c in itertools.product(*digits)]
    image, fixed = set(), 0
    for flat in itertools.product(elems, repeat=n * n):
        k = MatrixE(tower, [list(flat[i * n:(i + 1) * n]) for i in range(n)])
        det = k.det()
        if det.is_zero() or det.val > 0:
            continue
        th = k.theta()
        key = tuple(a.residue_key(m) for a in k.entries())
        if key == tuple(a.residue_key(m) for a in th.entries()):
            fixed += 1
        image.add(tuple(a.residue_key(m) for a in (k @ th.inverse()).entries()))
    return image, fixed
