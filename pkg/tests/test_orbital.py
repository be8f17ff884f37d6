import itertools
import json
from fractions import Fraction

import pytest

from oracles import brute_force_orbital_elliptic, twisted_residue_image

from basechange import (CongruenceLevel, IrregularInput, MatrixE, NotANorm, NotInDomain,
                        TwistedElem, UncertifiedComparison, check_matching, dth_root_tu,
                        make_tower, norm_witness, normalizing_factor_H, normalizing_factor_twisted,
                        orbital_integral, transfer_factor, twisted_conjugate, twisted_norm, volume)
from basechange.orbital import (DEFAULT_NORMALIZATION, HaarNormalization, TestFunction,
                                _TwistedResidue)
from basechange import sampling


def scalar(t, x):
    return MatrixE(t, [[t.from_rational(x)]])


def rat(t, rows):
    return MatrixE(t, [[t.from_rational(x) for x in r] for r in rows])


@pytest.fixture(scope="module")
def t312():
    return make_tower(3, 1, 2, 10)


@pytest.fixture(scope="module")
def tu_pair(t312):
    rng = sampling.make_rng(41)
    gamma = sampling.random_tu_regular(rng, t312, 2)
    return gamma, TwistedElem(dth_root_tu(gamma))


# -- volumes and normalizing factors ------------------------------------------

@pytest.mark.parametrize("n, q, m, expected", [(1, 3, 0, 1), (2, 3, 0, 1), (1, 3, 1, Fraction(1, 2)),
                                               (2, 3, 1, Fraction(1, 48)),
                                               (1, 5, 2, Fraction(1, 20)),
                                               (2, 3, 2, Fraction(1, 48 * 81))])
def test_volume(n, q, m, expected):
    assert volume(CongruenceLevel("E", m), DEFAULT_NORMALIZATION, n, q) == expected


def test_normalizing_factor_H_examples():
    t = make_tower(3, 1, 1, 10)
    assert normalizing_factor_H(rat(t, [[4, 0], [0, -2]])) == Fraction(1, 9)
    assert normalizing_factor_H(rat(t, [[2, 0], [0, 2]])) == 0
    for u in (2, 5, 8, Fraction(1, 2)):
        assert normalizing_factor_H(rat(t, [[1, 0], [0, u]])) == 1


def test_normalizing_factor_H_by_adjoint_determinant():
    # the 4x4 matrix of Ad(gamma) - 1 on M_2 for diagonal gamma is diagonal
    a, b = Fraction(4), Fraction(-2)
    eig = [a / b - 1, b / a - 1]
    prod = eig[0] * eig[1]
    assert abs(prod) == Fraction(9, 2)  # |9/2|_3 = 1/9
    t = make_tower(3, 1, 1, 10)
    assert normalizing_factor_H(rat(t, [[a, 0], [0, b]])) == Fraction(1, 9)


def test_twisted_factor_of_theta_itself():
    for pef in [(3, 2, 1), (3, 1, 2), (7, 3, 1)]:
        t = make_tower(*pef, 8)
        assert normalizing_factor_twisted(TwistedElem(MatrixE.identity(t, 1))) == 1


def test_twisted_factor_is_conjugation_invariant(tu_pair, t312):
    _, delta = tu_pair
    rng = sampling.make_rng(42)
    base = normalizing_factor_twisted(delta)
    for _ in range(3):
        g = sampling.random_gl(rng, t312, 2)
        assert normalizing_factor_twisted(twisted_conjugate(g, delta)) == base


# -- orbital integrals ---------------------------------------------------------

def test_n1_untwisted_examples():
    t = make_tower(3, 2, 1, 10)
    fn = TestFunction("H", CongruenceLevel("F", 1))
    v = orbital_integral(fn, scalar(t, 4))
    assert v.value == 2 and v.normalizing_factor == 1 and v.certified
    assert orbital_integral(fn, scalar(t, 2)).value == 0


def test_non_compact_element_gives_zero():
    t = make_tower(3, 2, 1, 10)
    fn = TestFunction("H", CongruenceLevel("F", 1))
    v = orbital_integral(fn, scalar(t, Fraction(1, 3)))
    assert v.value == 0 and v.certified
    t = make_tower(3, 1, 1, 10)
    v = orbital_integral(TestFunction("H", CongruenceLevel("F", 0)), rat(t, [[3, 0], [0, 1]]))
    assert v.value == 0 and v.certified


def test_irregular_element_is_rejected():
    t = make_tower(3, 1, 1, 10)
    with pytest.raises(IrregularInput):
        orbital_integral(TestFunction("H", CongruenceLevel("F", 1)), MatrixE.identity(t, 2))


def test_test_function_side_checks():
    with pytest.raises(ValueError):
        TestFunction("H", CongruenceLevel("E", 1))
    with pytest.raises(ValueError):
        TestFunction("G", CongruenceLevel("E", 1))


def test_engine_against_tree_oracle():
    t = make_tower(3, 1, 1, 14)
    # elliptic topologically unipotent: charpoly x^2 - 2x + (1 - 3 * 2) has disc 24, |24|_3 = 1/3
    gamma = rat(t, [[1, 6], [1, 1]])
    G = [[Fraction(1), Fraction(6)], [Fraction(1), Fraction(1)]]
    for k in (0, 1):
        ref = brute_force_orbital_elliptic(G, 3, k, 3)
        assert ref == brute_force_orbital_elliptic(G, 3, k, 4)
        assert orbital_integral(TestFunction("H", CongruenceLevel("F", k)), gamma, depth=6).value == ref


def test_twisted_conjugation_invariance():
    # q = 3 keeps the lattice balls small enough to move delta a few steps away
    t = make_tower(3, 2, 1, 12)
    rng = sampling.make_rng(44)
    delta = TwistedElem(dth_root_tu(sampling.random_tu_regular(rng, t, 2)))
    fn = TestFunction("G-twisted", CongruenceLevel("E", 1))
    base = orbital_integral(fn, delta, depth=8)
    assert base.certified and base.value != 0
    one, zero, pi = t.one(), t.zero(), t.pi()
    movers = [MatrixE(t, [[one, pi.inverse()], [zero, one]]),
              MatrixE(t, [[one, t.from_rational(Fraction(1, 3))], [zero, one]]),
              MatrixE(t, [[pi, zero], [one, one]]),
              sampling.random_gl(rng, t, 2)]
    for g in movers:
        v = orbital_integral(fn, twisted_conjugate(g, delta), depth=8)
        assert v.certified and v.value == base.value
        assert v.normalizing_factor == base.normalizing_factor


def test_depth_monotonicity(tu_pair):
    gamma, delta = tu_pair
    for fn, at in [(TestFunction("H", CongruenceLevel("F", 1)), gamma),
                   (TestFunction("G-twisted", CongruenceLevel("E", 1)), delta)]:
        first = orbital_integral(fn, at, depth=6)
        assert first.certified
        later = orbital_integral(fn, at, depth=first.depth_used + 4)
        assert later.value == first.value and later.certified


def test_dth_root_witness_invariance(tu_pair):
    # I at gamma' x| theta equals I at gamma x| theta for gamma' the d-th root of gamma
    gamma, delta = tu_pair
    fn = TestFunction("G-twisted", CongruenceLevel("E", 1))
    a = orbital_integral(fn, delta, depth=8)
    b = orbital_integral(fn, TwistedElem(gamma), depth=8)
    assert a.certified and b.certified
    assert a.value == b.value and a.normalizing_factor == b.normalizing_factor


def test_normalized_square_bookkeeping(tu_pair):
    gamma, _ = tu_pair
    v = orbital_integral(TestFunction("H", CongruenceLevel("F", 1)), gamma, depth=8)
    assert v.normalized_squared() == v.normalizing_factor * v.value ** 2


def test_normalization_scales_torus_measure(tu_pair):
    gamma, _ = tu_pair
    fn = TestFunction("H", CongruenceLevel("F", 1))
    half = HaarNormalization(torus_vol=Fraction(1, 2))
    assert (orbital_integral(fn, gamma, half, depth=8).value * 2
            == orbital_integral(fn, gamma, depth=8).value)


# -- transfer factor, witnesses, matching ---------------------------------------

def test_transfer_factor():
    t = make_tower(3, 2, 1, 10)
    pi = t.pi()
    assert transfer_factor(scalar(t, -3), TwistedElem(MatrixE(t, [[pi]]))) == 1
    assert transfer_factor(rat(t, [[-3, 0], [0, -2]]), TwistedElem(MatrixE.diag(t, [pi, 1 + pi]))) == 1
    with pytest.raises(NotANorm):
        transfer_factor(scalar(t, 3), TwistedElem(MatrixE(t, [[pi]])))


def test_norm_witness_cases():
    t = make_tower(3, 2, 1, 10)
    w = norm_witness(scalar(t, 4))
    assert twisted_norm(w)[0, 0].equals(t.from_int(4))
    assert norm_witness(scalar(t, -1)) is None
    assert norm_witness(scalar(t, 3)) is None
    diag = rat(t, [[-3, 0], [0, -2]])
    w = norm_witness(diag)
    assert transfer_factor(diag, w) == 1
    with pytest.raises(NotInDomain):
        norm_witness(rat(t, [[0, 5], [1, 0]]))


def test_check_matching_n1_examples():
    t = make_tower(3, 2, 1, 10)
    rep = check_matching(scalar(t, 4), 2)
    assert rep.verdict == "PASS" and rep.is_norm and rep.lhs == rep.rhs != 0
    rep = check_matching(scalar(t, -1), 2)
    assert rep.verdict == "PASS" and not rep.is_norm and rep.lhs == 0


def test_check_matching_n2(tu_pair):
    gamma, _ = tu_pair
    rep = check_matching(gamma, 1, depth=8)
    assert rep.verdict == "PASS" and rep.certified
    assert rep.D_H == rep.D_G and rep.lhs == rep.rhs


def test_check_matching_irregular_reports_zero():
    t = make_tower(3, 1, 1, 10)
    rep = check_matching(MatrixE.identity(t, 2), 1)
    assert rep.irregular and rep.verdict == "PASS" and rep.lhs == rep.rhs == 0


def test_check_matching_demands_certification(tu_pair):
    gamma, _ = tu_pair
    with pytest.raises(UncertifiedComparison):
        check_matching(gamma, 1, depth=1)
    rep = check_matching(gamma, 1, depth=1, require_certified=False)
    assert not rep.certified


def test_match_report_json():
    t = make_tower(3, 2, 1, 10)
    d = json.loads(check_matching(scalar(t, 4), 2).to_json())
    assert d["lhs"] == "2/1" and d["rhs"] == "2/1" and d["D_H"] == "1/1"
    assert d["tower"] == {"p": 3, "e": 2, "f": 1, "precision": 10}
    assert d["verdict"] == "PASS" and d["certified_H"] and d["certified_G"]
    assert "torus" in d["normalization"] and isinstance(d["wall_ms"], float)


@pytest.mark.parametrize("pefnm", [(3, 2, 1, 2, 2), (3, 1, 2, 2, 1), (3, 1, 2, 1, 3), (5, 2, 1, 1, 3),
                                   (7, 3, 1, 1, 4), (5, 1, 2, 1, 2)])
def test_twisted_residue_classes_match_enumeration(pefnm):
    p, e, f, n, m = pefnm
    t = make_tower(p, e, f, m + 2 * e)
    image, fixed = twisted_residue_image(t, n, m)
    res = _TwistedResidue(p, e, f, n, m)
    assert res.fixed == fixed
    keys = {a.residue_key(m) for a in (t.from_ocoeffs(c) for c in itertools.product(
        *[range(p ** -(-(m - j) // e) if m > j else 1) for j in range(e) for _ in range(f)]))}
    for flat in itertools.product(sorted(keys), repeat=n * n):
        assert res.contains(flat) == (flat in image)
