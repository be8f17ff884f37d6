"""Seeded random elements for experiments and property tests.

All randomness flows from ``numpy.random.default_rng(seed)`` (PCG64).  Elements
are digit-uniform: every p-adic digit of every coordinate is drawn uniformly
from 0..p-1.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .descent import cayley
from .errors import IrregularInput, PrecisionExhausted
from .localfield import PadicElem, TowerSpec
from .matgrp import REGULARITY_SLACK, MatrixE, is_regular


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def _digits_to_int(digits, p):
    out = 0
    for dgt in reversed(digits):
        out = out * p + int(dgt)
    return out


def random_integer(rng, p: int, ndigits: int) -> int:
    bound = p ** ndigits
    if bound < 2 ** 62:
        return int(rng.integers(0, bound))
    return _digits_to_int(rng.integers(0, p, size=ndigits), p)


def random_o(rng, tower: TowerSpec, val: int = 0) -> PadicElem:
    """pi^val times a digit-uniform element of O_E."""
    coeffs = [random_integer(rng, tower.p, tower.digits) for _ in range(tower.d)]
    return tower.from_ocoeffs(coeffs, val)


def random_zp(rng, tower: TowerSpec, val: int = 0) -> PadicElem:
    """p^val times a digit-uniform element of Z_p, as an element of E."""
    c = random_integer(rng, tower.p, tower.digits)
    return tower.from_ocoeffs([c] + [0] * (tower.d - 1), val * tower.e)


def random_matrix(rng, tower, n: int, val: int = 0) -> MatrixE:
    return MatrixE(tower, [[random_o(rng, tower, val) for _ in range(n)] for _ in range(n)])


def random_F_matrix(rng, tower, n: int, val: int = 0) -> MatrixE:
    """Matrix in p^val M_n(Z_p), a theta-fixed matrix."""
    return MatrixE(tower, [[random_zp(rng, tower, val) for _ in range(n)] for _ in range(n)])


def random_top_nilpotent(rng, tower, n: int, level: int = 1) -> MatrixE:
    """Element of varpi_E^level M_n(O_E); topologically nilpotent for level >= 1."""
    return random_matrix(rng, tower, n, level)


def random_gl(rng, tower, n: int) -> MatrixE:
    """Digit-uniform element of GL_n(O_E), by rejection."""
    while True:
        g = random_matrix(rng, tower, n)
        det = g.det()
        if not det.is_zero() and det.val == 0:
            return g


def random_congruence(rng, tower, n: int, m: int) -> MatrixE:
    """Element of K_E(m) = 1 + varpi_E^m M_n(O_E)."""
    return MatrixE.identity(tower, n) + random_matrix(rng, tower, n, m)


def random_tu_regular(rng, tower, n: int, level: int = 1, max_tries: int = 200,
                      slack: int = REGULARITY_SLACK) -> MatrixE:
    """Topologically unipotent regular gamma in GL_n(F): the Cayley image of a
    random X in p^level M_n(Z_p), resampled until the discriminant is
    resolved at precision with ``slack`` digits to spare."""
    for _ in range(max_tries):
        X = random_F_matrix(rng, tower, n, level)
        g = cayley(X)
        try:
            if is_regular(g, slack):
                return g
        except (IrregularInput, PrecisionExhausted):
            continue
    raise IrregularInput(f"no regular sample within {max_tries} tries")


def random_scalar(rng, tower, vmin: int = -2, vmax: int = 2) -> PadicElem:
    """p^v * u with v uniform in [vmin, vmax] and u a digit-uniform unit of Z_p."""
    v = int(rng.integers(vmin, vmax + 1))
    p = tower.p
    u = 1 + int(rng.integers(0, p - 1))
    u += p * random_integer(rng, p, tower.digits - 1)
    return tower.from_rational(Fraction(u) * Fraction(p) ** v)
