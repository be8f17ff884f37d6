from fractions import Fraction

import pytest

from oracles import sympy_charpoly, sympy_det

from basechange import (CongruenceLevel, IrregularInput, MatrixE, NotTopologicallyUnipotent,
                        PrecisionExhausted, TwistedElem, dth_root_tu, in_congruence, is_norm_of,
                        is_regular, is_top_unipotent, make_tower, theta_fixed_level,
                        twisted_conjugate, twisted_norm)
from basechange import sampling


def rat(t, rows):
    return MatrixE(t, [[t.from_rational(x) for x in r] for r in rows])


@pytest.mark.parametrize("e, m, expected", [(2, 3, 2), (3, 6, 2), (1, 5, 5), (1, 1, 1), (2, 1, 1),
                                            (3, 4, 2)])
def test_theta_fixed_level(e, m, expected):
    assert theta_fixed_level(e, m) == expected


def test_congruence_membership():
    t = make_tower(3, 2, 1, 8)
    one = MatrixE.identity(t, 2)
    for m in range(1, 9):
        assert in_congruence(one, CongruenceLevel("E", m))
    E12 = MatrixE(t, [[t.zero(), t.pi() ** 3], [t.zero(), t.zero()]])
    assert in_congruence(one + E12, CongruenceLevel("E", 3))
    assert not in_congruence(one + E12, CongruenceLevel("E", 4))
    # an F-level needs theta-fixed entries
    assert not in_congruence(one + E12, CongruenceLevel("F", 1))
    with pytest.raises(PrecisionExhausted):
        in_congruence(one, CongruenceLevel("E", 9))


def test_congruence_is_theta_stable():
    t = make_tower(5, 2, 1, 8)
    rng = sampling.make_rng(21)
    for _ in range(30):
        M = sampling.random_congruence(rng, t, 2, 2)
        assert in_congruence(M.theta(), CongruenceLevel("E", 2))


def test_charpoly_and_det_match_sympy():
    t = make_tower(7, 1, 1, 12)
    rng = sampling.make_rng(22)
    for n in (2, 3):
        for _ in range(5):
            rows = [[Fraction(int(rng.integers(-20, 20)), int(rng.integers(1, 5))) for _ in range(n)]
                    for _ in range(n)]
            M = rat(t, rows)
            for a, b in zip(M.charpoly(), sympy_charpoly(rows)):
                assert a.equals(t.from_rational(b))
            assert M.det().equals(t.from_rational(sympy_det(rows)))


def test_inverse():
    t = make_tower(3, 1, 2, 8)
    rng = sampling.make_rng(23)
    g = sampling.random_gl(rng, t, 3)
    assert (g @ g.inverse()).equals(MatrixE.identity(t, 3))


def test_singular_determinant_is_zero_at_precision():
    t = make_tower(3, 1, 1, 8)
    M = rat(t, [[2, 2], [2, 2]])
    assert M.det().is_zero()
    with pytest.raises(PrecisionExhausted):
        M.inverse()


def test_topological_unipotence_examples():
    t = make_tower(3, 1, 1, 8)
    assert is_top_unipotent(MatrixE.identity(t, 2))
    assert not is_top_unipotent(rat(t, [[-1, 0], [0, 1]]))
    assert is_top_unipotent(rat(t, [[1, 1], [0, 1]]))
    assert not is_top_unipotent(rat(t, [[Fraction(1, 3), 0], [0, 1]]))


def test_dth_root_examples():
    t = make_tower(3, 2, 1, 8)
    r = dth_root_tu(rat(t, [[4]]))
    assert r[0, 0].to_fraction() == -2
    assert dth_root_tu(MatrixE.identity(t, 2)).equals(MatrixE.identity(t, 2))
    r = dth_root_tu(rat(t, [[1, 3], [0, 1]]))
    assert r.equals(rat(t, [[1, Fraction(3, 2)], [0, 1]]))
    assert (r @ r).equals(rat(t, [[1, 3], [0, 1]]))
    with pytest.raises(NotTopologicallyUnipotent):
        dth_root_tu(rat(t, [[2]]))


def test_twisted_norm_examples():
    t = make_tower(3, 2, 1, 8)
    assert twisted_norm(TwistedElem(MatrixE(t, [[t.pi()]])))[0, 0].equals(t.from_int(-3))
    h = rat(t, [[1, 3], [2, 5]])
    assert twisted_norm(TwistedElem(h)).equals(h @ h)


def test_twisted_norm_covariance_and_rationality():
    t = make_tower(5, 2, 1, 10)
    rng = sampling.make_rng(24)
    for _ in range(10):
        delta = sampling.random_gl(rng, t, 2)
        g = sampling.random_gl(rng, t, 2)
        N = twisted_norm(delta)
        moved = twisted_conjugate(g, TwistedElem(delta))
        assert twisted_norm(moved).equals(g.inverse() @ N @ g)
        assert all(c.is_theta_fixed() for c in N.charpoly())


def test_is_norm_of_examples():
    t = make_tower(3, 2, 1, 8)
    pi = t.pi()
    assert is_norm_of(rat(t, [[-3]]), TwistedElem(MatrixE(t, [[pi]])))
    assert is_norm_of(rat(t, [[-3, 0], [0, -2]]), TwistedElem(MatrixE.diag(t, [pi, 1 + pi])))
    # 3 is not a norm: nothing of valuation 1 and no unit u with N(u) = -1
    for u in range(1, 9):
        for a in range(3):
            delta = t.from_int(u) * pi + t.from_int(a) * pi ** 2
            if not delta.is_zero():
                assert not is_norm_of(rat(t, [[3]]), TwistedElem(MatrixE(t, [[delta]])))


def test_is_norm_of_rejects_irregular():
    t = make_tower(3, 2, 1, 8)
    with pytest.raises(IrregularInput):
        is_norm_of(rat(t, [[2, 0], [0, 2]]), TwistedElem(rat(t, [[1, 0], [0, 1]])))


def test_regularity():
    t = make_tower(3, 1, 1, 8)
    assert is_regular(rat(t, [[1, 0], [0, 2]]))
    assert not is_regular(rat(t, [[2, 0], [0, 2]]))
    with pytest.raises(IrregularInput):
        is_regular(rat(t, [[1, 0], [0, 1 + 3 ** 3]]))


def test_twisted_conjugation():
    t = make_tower(3, 1, 2, 8)
    rng = sampling.make_rng(25)
    delta = TwistedElem(sampling.random_gl(rng, t, 2))
    one = MatrixE.identity(t, 2)
    assert twisted_conjugate(one, delta).g.equals(delta.g)
    g1, g2 = sampling.random_gl(rng, t, 2), sampling.random_gl(rng, t, 2)
    assert twisted_conjugate(g2, twisted_conjugate(g1, delta)).g.equals(
        twisted_conjugate(g1 @ g2, delta).g)
    h, k = rat(t, [[1, 3], [0, 2]]), rat(t, [[2, 1], [1, 1]])
    assert twisted_conjugate(k, TwistedElem(h)).g.equals(k.inverse() @ h @ k)


def test_untwisting_a_theta_conjugate():
    # g^-1 h1 theta(g) theta-fixed and topologically unipotent forces it to equal g^-1 h1 g
    t = make_tower(5, 2, 1, 10)
    rng = sampling.make_rng(26)
    seen = 0
    for _ in range(40):
        h1 = MatrixE.identity(t, 2) + sampling.random_F_matrix(rng, t, 2, 1)
        g = MatrixE.identity(t, 2) + sampling.random_F_matrix(rng, t, 2, 1)
        if int(rng.integers(0, 2)):
            g = g + sampling.random_matrix(rng, t, 2, 3)
        h2 = g.inverse() @ h1 @ g.theta()
        if h2.is_theta_fixed() and is_top_unipotent(h2):
            assert (g.inverse() @ h1 @ g).equals(h2)
            seen += 1
    assert seen > 0


def test_dth_root_is_a_bijection_on_tu():
    for p, e, f in [(3, 1, 2), (7, 3, 1)]:
        t = make_tower(p, e, f, 8)
        rng = sampling.make_rng(27)
        for _ in range(10):
            g = MatrixE.identity(t, 2) + sampling.random_F_matrix(rng, t, 2, 1)
            r = dth_root_tu(g)
            assert (r ** t.d).equals(g)
            assert dth_root_tu(g ** t.d).equals(g)
