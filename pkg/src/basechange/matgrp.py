"""Matrices over E, congruence subgroups, twisted conjugation and norms."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import IrregularInput, NotTopologicallyUnipotent, PrecisionExhausted
from .localfield import INF, PadicElem, TowerSpec, apply_theta, parse, serialize

REGULARITY_SLACK = 2


class MatrixE:
    """An n x n matrix with PadicElem entries, stored row-major."""

    __slots__ = ("tower", "n", "rows")

    def __init__(self, tower: TowerSpec, rows):
        self.tower = tower
        self.rows = tuple(tuple(tower.from_rational(a) if not isinstance(a, PadicElem) else a for a in r)
                          for r in rows)
        self.n = len(self.rows)

    # -- constructors -------------------------------------------------------
    @classmethod
    def identity(cls, tower, n):
        one, zero = tower.one(), tower.zero()
        return cls(tower, [[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, tower, n):
        z = tower.zero()
        return cls(tower, [[z] * n for _ in range(n)])

    @classmethod
    def diag(cls, tower, entries):
        n = len(entries)
        z = tower.zero()
        return cls(tower, [[entries[i] if i == j else z for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, MatrixE):
            other = MatrixE.identity(self.tower, self.n).scale(other)
        return MatrixE(self.tower, [[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    __radd__ = __add__

    def __neg__(self):
        return MatrixE(self.tower, [[-a for a in r] for r in self.rows])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        return MatrixE(self.tower, [[a * c for a in r] for r in self.rows])

    def __matmul__(self, other):
        n = self.n
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = r[0] * c[0]
                for k in range(1, n):
                    acc = acc + r[k] * c[k]
                row.append(acc)
            out.append(row)
        return MatrixE(self.tower, out)

    def __mul__(self, other):
        if isinstance(other, MatrixE):
            return self @ other
        return self.scale(other)

    __rmul__ = scale

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        r, base = MatrixE.identity(self.tower, self.n), self
        while k:
            if k & 1:
                r = r @ base
            base = base @ base
            k >>= 1
        return r

    def _eliminate(self, rhs=None):
        """Gaussian elimination with minimal-valuation pivots.

        Returns (det, inverse-or-None).
        """
        n, t = self.n, self.tower
        a = [list(r) for r in self.rows]
        b = [list(r) for r in MatrixE.identity(t, n).rows] if rhs else None
        det = t.one()
        for col in range(n):
            piv = min(range(col, n), key=lambda i: a[i][col].val)
            if a[piv][col].is_zero():
                if a[piv][col].is_exact_zero():
                    return t.zero(), None
                if b:
                    raise PrecisionExhausted("singular at working precision")
                # zero at precision: bound what the remaining minor can contribute
                bound = det.val + min(a[i][col].prec for i in range(col, n))
                for j in range(col + 1, n):
                    bound += min(a[i][j].val if not a[i][j].is_zero() else a[i][j].prec
                                 for i in range(col, n))
                return PadicElem(t, INF, None, bound), None
            if piv != col:
                a[col], a[piv] = a[piv], a[col]
                if b:
                    b[col], b[piv] = b[piv], b[col]
                det = -det
            pv = a[col][col]
            det = det * pv
            inv = pv.inverse()
            for i in range(0 if b else col + 1, n):
                if i == col:
                    continue
                fct = a[i][col] * inv
                if fct.is_zero():
                    continue
                a[i] = [x - fct * y for x, y in zip(a[i], a[col])]
                if b:
                    b[i] = [x - fct * y for x, y in zip(b[i], b[col])]
            if b:
                a[col] = [x * inv for x in a[col]]
                b[col] = [x * inv for x in b[col]]
        return det, (MatrixE(t, b) if b else None)

    def det(self) -> PadicElem:
        return self._eliminate()[0]

    def inverse(self) -> MatrixE:
        det, inv = self._eliminate(rhs=True)
        if inv is None:
            raise ZeroDivisionError("singular matrix")
        return inv

    def charpoly(self) -> list[PadicElem]:
        """Coefficients of det(X I - A), highest degree first (Berkowitz)."""
        return berkowitz(self.rows, self.tower)

    def theta(self) -> MatrixE:
        return MatrixE(self.tower, [[apply_theta(a) for a in r] for r in self.rows])

    def trace(self) -> PadicElem:
        acc = self.rows[0][0]
        for i in range(1, self.n):
            acc = acc + self.rows[i][i]
        return acc

    # -- predicates ---------------------------------------------------------
    def equals(self, other) -> bool:
        return all(a.equals(b) for r, s in zip(self.rows, other.rows) for a, b in zip(r, s))

    def is_zero(self) -> bool:
        return all(a.is_zero() for r in self.rows for a in r)

    def min_val(self):
        return min(a.val for r in self.rows for a in r)

    def min_prec(self):
        return min(a.prec for r in self.rows for a in r)

    def is_integral(self) -> bool:
        return all(a.is_integral() for r in self.rows for a in r)

    def is_theta_fixed(self) -> bool:
        return self.theta().equals(self)

    def entries(self):
        return [a for r in self.rows for a in r]

    def residue_key(self, m: int) -> tuple:
        return tuple(a.residue_key(m) for a in self.entries())

    def serialize(self) -> list[str]:
        return [serialize(a) for a in self.entries()]

    @classmethod
    def parse(cls, tower, items, n=None):
        n = n or int(round(len(items) ** 0.5))
        vals = [parse(tower, s) for s in items]
        return cls(tower, [vals[i * n:(i + 1) * n] for i in range(n)])

    def __repr__(self):
        return "MatrixE(" + "; ".join(", ".join(str(a) for a in r) for r in self.rows) + ")"


def berkowitz(rows, tower) -> list[PadicElem]:
    n = len(rows)
    one = tower.one()
    coeffs = [one, -rows[0][0]]
    for r in range(1, n):
        R = [rows[r][k] for k in range(r)]
        S = [rows[k][r] for k in range(r)]
        a = rows[r][r]
        toep = [one, -a]
        v = S
        for _ in range(r):
            acc = R[0] * v[0]
            for k in range(1, r):
                acc = acc + R[k] * v[k]
            toep.append(-acc)
            nv = []
            for i in range(r):
                s = rows[i][0] * v[0]
                for k in range(1, r):
                    s = s + rows[i][k] * v[k]
                nv.append(s)
            v = nv
        new = []
        for i in range(r + 2):
            acc = None
            for j in range(r + 1):
                if 0 <= i - j < len(toep):
                    term = toep[i - j] * coeffs[j]
                    acc = term if acc is None else acc + term
            new.append(acc)
        coeffs = new
    return coeffs


@dataclass(frozen=True)
class TwistedElem:
    """The point g x| theta of the twisted space, stored by its coordinate g.

    ``frame`` optionally records (g0, h) with h in GL_n(F) such that the
    twisted centralizer is g0^-1 F[h]^x g0; it is filled in by
    ``twisted_conjugate`` when the input has a known centralizer.
    """

    g: MatrixE
    frame: tuple | None = field(default=None, compare=False)

    @property
    def tower(self):
        return self.g.tower

    @property
    def n(self):
        return self.g.n


@dataclass(frozen=True)
class CongruenceLevel:
    """K_E(m) (field='E') or K_F(m) (field='F'); m = 0 is GL_n of the integers."""

    field: str
    m: int

    def __post_init__(self):
        if self.field not in ("E", "F"):
            raise ValueError("field must be 'E' or 'F'")
        if self.m < 0:
            raise ValueError("level must be >= 0")


def theta_fixed_level(e: int, m: int) -> int:
    """F-level k' with K_E(m) cap GL_n(F) = K_F(k')."""
    if e < 1 or m < 1:
        raise ValueError("e and m must be positive")
    k, r = divmod(m, e)
    return k + 1 if r else k


def in_congruence(M: MatrixE, level: CongruenceLevel) -> bool:
    t = M.tower
    need = level.m if level.field == "E" else level.m * t.e
    if M.min_prec() < max(need, 1):
        raise PrecisionExhausted(f"precision {M.min_prec()} < required {need}")
    if level.field == "F" and not M.is_theta_fixed():
        return False
    if level.m == 0:
        if not M.is_integral():
            return False
        return M.det().val == 0
    one = t.one()
    return all((a - one if i == j else a).val >= need
               for i, row in enumerate(M.rows) for j, a in enumerate(row))


def _charpoly_unipotent_mod_pi(g: MatrixE) -> bool:
    from math import comb
    n = g.n
    cp = g.charpoly()
    for k, c in enumerate(cp):
        target = comb(n, k) * (-1) ** k
        diff = c - target
        if diff.is_zero():
            if diff.prec < 1:
                raise PrecisionExhausted("charpoly reduction ambiguous")
            continue
        if diff.val < 1:
            return False
    return True


def is_top_unipotent(g: MatrixE, slack: int = REGULARITY_SLACK) -> bool:
    """Topological unipotence via the residual characteristic polynomial.

    A positive answer is cross-checked against the defining limit g^(p^k) -> 1.
    """
    if not g.is_integral():
        return False
    if g.det().val != 0:
        return False
    if not _charpoly_unipotent_mod_pi(g):
        return False
    _tu_exponent(g, slack)
    return True


def _tu_exponent(g: MatrixE, slack: int = 0) -> int:
    """Least K with g^(p^K) = 1 up to ``slack`` digits of working precision."""
    t = g.tower
    target = g.min_prec() - slack
    one = MatrixE.identity(t, g.n)
    h = g
    for k in range(g.n * t.precision * t.e + 2):
        if (h - one).min_val() >= target:
            return k
        h = h ** t.p
    raise PrecisionExhausted("p-power iterates do not reach the identity")


def dth_root_tu(gamma: MatrixE, d: int | None = None) -> MatrixE:
    """The topologically unipotent d-th root, gamma^(d^-1 mod p^K)."""
    t = gamma.tower
    d = t.d if d is None else d
    if d % t.p == 0:
        raise ValueError("p divides d")
    if not is_top_unipotent(gamma):
        raise NotTopologicallyUnipotent("input is not topologically unipotent")
    K = _tu_exponent(gamma)
    u = pow(d, -1, t.p ** K) if K else 1
    return gamma ** u


def twisted_norm(delta) -> MatrixE:
    """N(delta) = delta theta(delta) ... theta^(d-1)(delta)."""
    g = delta.g if isinstance(delta, TwistedElem) else delta
    out, cur = g, g
    for _ in range(g.tower.d - 1):
        cur = cur.theta()
        out = out @ cur
    return out


def twisted_conjugate(g: MatrixE, delta) -> TwistedElem:
    """Coordinate of g^-1 (delta x| theta) g, i.e. g^-1 delta theta(g)."""
    dg = delta.g if isinstance(delta, TwistedElem) else delta
    frame = delta.frame if isinstance(delta, TwistedElem) else None
    if frame is None and dg.is_theta_fixed():
        frame = (MatrixE.identity(g.tower, g.n), dg)
    if frame is not None:
        frame = (frame[0] @ g, frame[1])
    return TwistedElem(g.inverse() @ dg @ g.theta(), frame)


def poly_discriminant(coeffs: list[PadicElem]) -> PadicElem:
    """Discriminant of a monic polynomial (highest degree first)."""
    n = len(coeffs) - 1
    tower = coeffs[0].tower
    if n <= 1:
        return tower.one()
    deriv = [c * (n - i) for i, c in enumerate(coeffs[:-1])]
    size = 2 * n - 1
    zero = tower.zero()
    rows = []
    for i in range(n - 1):
        rows.append([zero] * i + list(coeffs) + [zero] * (size - n - 1 - i))
    for i in range(n):
        rows.append([zero] * i + deriv + [zero] * (size - n - i))
    res = MatrixE(tower, rows).det()
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return res * sign


def is_regular(gamma: MatrixE, slack: int = REGULARITY_SLACK) -> bool:
    """Distinct characteristic roots, certified at precision; raises if ambiguous."""
    try:
        disc = poly_discriminant(gamma.charpoly())
    except PrecisionExhausted as exc:
        raise IrregularInput("discriminant not resolved at working precision") from exc
    if disc.is_zero():
        return False
    if disc.val >= disc.prec - slack:
        raise IrregularInput("discriminant too close to zero at working precision")
    return True


def is_norm_of(gamma: MatrixE, delta, slack: int = REGULARITY_SLACK) -> bool:
    """Whether gamma is a norm of delta (regular semisimple regime)."""
    N = twisted_norm(delta)
    for m in (gamma, N):
        try:
            ok = is_regular(m, slack)
        except IrregularInput:
            ok = False
        if not ok:
            raise IrregularInput("norm test needs regular semisimple inputs")
    return all(a.equals(b) for a, b in zip(gamma.charpoly(), N.charpoly()))
