"""Cayley transform, d(theta)-eigenspace splitting and semisimple descent at theta."""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass

from .errors import NonConvergence, NotInDomain, RootOfUnityUnavailable
from .localfield import PadicElem, teichmuller
from .matgrp import MatrixE, _charpoly_unipotent_mod_pi, is_top_unipotent


def _as_matrix(X) -> MatrixE:
    return X.X if isinstance(X, LieElement) else X


@dataclass(frozen=True)
class LieElement:
    """An element of g = M_n(E), used additively."""

    X: MatrixE

    @property
    def top_nilpotent(self) -> bool:
        """charpoly(X) = X^n mod pi (X integral)."""
        X = self.X
        if not X.is_integral():
            return False
        for c in X.charpoly()[1:]:
            if not c.is_zero() and c.val < 1:
                return False
        return True


def is_top_nilpotent(X) -> bool:
    return LieElement(_as_matrix(X)).top_nilpotent


def cayley(X) -> MatrixE:
    """c(X) = (1 + X/2)(1 - X/2)^-1 on topologically nilpotent X."""
    X = _as_matrix(X)
    if not is_top_nilpotent(X):
        raise NotInDomain("Cayley transform needs a topologically nilpotent element")
    one = MatrixE.identity(X.tower, X.n)
    half = X.scale(X.tower.from_rational(1) / 2)
    return (one + half) @ (one - half).inverse()


def cayley_inv(g: MatrixE) -> LieElement:
    """2(g - 1)(g + 1)^-1 on topologically unipotent g."""
    if not is_top_unipotent(g):
        raise NotInDomain("inverse Cayley transform needs a topologically unipotent element")
    one = MatrixE.identity(g.tower, g.n)
    return LieElement(((g - one) @ (g + one).inverse()).scale(2))


def theta_average(X: MatrixE) -> MatrixE:
    """Projection onto h = g^theta: (1/d) sum_i d(theta)^i X."""
    t = X.tower
    acc, cur = X, X
    for _ in range(t.d - 1):
        cur = cur.theta()
        acc = acc + cur
    return acc.scale(t.one() / t.d)


def root_of_unity(tower, d: int) -> PadicElem:
    """Teichmuller lift of the least residue of exact order d in F_p^x."""
    p = tower.p
    if (p - 1) % d:
        raise RootOfUnityUnavailable(f"mu_{d} is not contained in Q_{p}")
    for a in range(1, p):
        x, k = a, 1
        while x != 1:
            x = x * a % p
            k += 1
        if k == d:
            return teichmuller(tower, a)
    raise AssertionError("unreachable")


def split_theta_eigen(X) -> list[tuple[PadicElem, LieElement]]:
    """Decompose X into d(theta)-eigencomponents; zero components are dropped."""
    X = _as_matrix(X)
    t = X.tower
    d = t.d
    zeta = root_of_unity(t, d)
    iterates = [X]
    for _ in range(d - 1):
        iterates.append(iterates[-1].theta())
    inv_d = t.one() / d
    out = []
    for i in range(d):
        comp = None
        for k, Xk in enumerate(iterates):
            term = Xk.scale(zeta ** (-i * k % d))
            comp = term if comp is None else comp + term
        comp = comp.scale(inv_d)
        if not comp.is_zero():
            out.append((zeta ** i, LieElement(comp)))
    return out


@dataclass(frozen=True)
class LatticePair:
    """L = varpi_E^m M_n(O_E) with its splitting L = L1 + L2 by the theta-average."""

    m: int
    n: int
    e: int = 1

    def __post_init__(self):
        if self.m < max(1, self.e):
            raise ValueError(f"level m = {self.m} must be >= max(1, e) so that L.L lies in varpi_F L")

    def contains(self, X: MatrixE) -> bool:
        return all(a.is_zero() or a.val >= self.m for a in X.entries())

    def split(self, X: MatrixE) -> tuple[MatrixE, MatrixE]:
        X1 = theta_average(X)
        return X1, X - X1


def solve_one_minus_theta(X2: MatrixE) -> MatrixE:
    """The unique Y with P(Y) = 0 and (1 - d theta) Y = X2, for P(X2) = 0.

    Equals sum_i (1 - zeta^{n_i})^-1 X_{2,i} without adjoining roots of unity:
    (1 - T) sum_k k T^k X2 = -d X2 whenever sum_k T^k X2 = 0.
    """
    t = X2.tower
    d = t.d
    acc, cur = None, X2
    for k in range(1, d):
        cur = cur.theta()
        term = cur.scale(k)
        acc = term if acc is None else acc + term
    if acc is None:
        return MatrixE.zeros(t, X2.n)
    Y = acc.scale(-(t.one() / d))
    return Y - theta_average(Y)


def _depth(X: MatrixE):
    return min((a.val if not a.is_zero() else a.prec) for a in X.entries())


def descend(k: MatrixE, L: LatticePair, trace: list | None = None, emit: bool = False):
    """Write k = g h theta(g)^-1 with h theta-fixed, for k in c(L) = 1 + L.

    Returns (g, h).  ``trace`` collects one dict per iteration; ``emit``
    also prints each as a JSON line on stderr.
    """
    t = k.tower
    one = MatrixE.identity(t, k.n)
    X = k - one
    if not L.contains(X):
        raise NotInDomain(f"k - 1 does not lie in varpi_E^{L.m} M_n(O_E)")
    g, cur = one, k
    last = None
    for it in range(t.precision + 1):
        X1, X2 = L.split(cur - one)
        if X2.is_zero():
            return g, one + X1
        depth = _depth(X2)
        if last is not None and depth < last + t.e:
            raise NonConvergence(f"X2 depth went from {last} to {depth}")
        if it == t.precision:
            break
        Y = solve_one_minus_theta(X2)
        c = cayley(Y)
        cur = c.inverse() @ cur @ c.theta()
        g = g @ c
        if trace is not None or emit:
            rec = {"iteration": it, "x2_depth": depth,
                   "y_valuations": [None if a.is_zero() else a.val for a in Y.entries()]}
            if trace is not None:
                trace.append(rec)
            if emit:
                print(json.dumps(rec), file=sys.stderr)
        last = depth
    raise NonConvergence("X2 component did not vanish within the iteration cap")
