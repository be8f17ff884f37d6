"""Matching of orbital integrals for GL_2, on both sides of base change.

For a topologically unipotent regular gamma in GL_2(F) the witness delta is
the square root of gamma, and the two orbital integrals, each weighted by
D^(1/2), agree.  Values are exact rationals.

Run:  python demos/03_matching.py
"""
from basechange import (CongruenceLevel, MatrixE, TwistedElem, check_matching, dth_root_tu, make_tower,
                        orbital_integral, sampling, twisted_conjugate)
from basechange.orbital import TestFunction

for p, e, f in [(3, 1, 2), (5, 2, 1)]:
    E = make_tower(p, e, f, precision=12)
    rng = sampling.make_rng(2024)
    gamma = sampling.random_tu_regular(rng, E, 2)
    rep = check_matching(gamma, m=1, depth=8)
    print(f"E/Q_{p} with e={e}, f={f}")
    print(f"  H side   : I = {rep.lhs}, D_H = {rep.D_H}, certified {rep.certified_H}")
    print(f"  twisted  : I = {rep.rhs}, D_G = {rep.D_G}, certified {rep.certified_G}")
    print(f"  verdict  : {rep.verdict} (lattice ball radius used: {rep.depth_used})")

    # the twisted side does not see which representative of the class we use
    delta = TwistedElem(dth_root_tu(gamma))
    moved = twisted_conjugate(sampling.random_gl(rng, E, 2), delta)
    fn = TestFunction("G-twisted", CongruenceLevel("E", 1))
    print(f"  after twisted conjugation: I = {orbital_integral(fn, moved, depth=8).value}")
    print()

# n = 1: 4 = N(2) is a norm from Q_3(sqrt 3), -1 is not.
E = make_tower(3, 2, 1, precision=10)
for g in (4, -1):
    rep = check_matching(MatrixE(E, [[E.from_rational(g)]]), m=2)
    print(f"gamma = {g:>2}: norm {rep.is_norm}, I_H = {rep.lhs}, I_G = {rep.rhs}, {rep.verdict}")
