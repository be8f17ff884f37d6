"""A short tour of the tame towers E / Q_p and the automorphism theta.

Run:  python demos/01_local_fields.py
"""
from fractions import Fraction

from basechange import apply_theta, make_tower, norm_trace, serialize, teichmuller, theta_power

# Q_3(sqrt 3): totally ramified of degree 2, pi^2 = 3 and theta(pi) = -pi.
E = make_tower(3, 2, 1, precision=8)
pi = E.pi()
print(E, "d =", E.d)
print("theta(pi)          =", serialize(apply_theta(pi)))
print("N(pi), Tr(pi)      =", *map(serialize, norm_trace(pi)))
print("N(1 + pi)          =", serialize(norm_trace(1 + pi)[0]))

# Q_9 = Q_3(x), x^2 + 1 = 0: unramified, theta is the Frobenius lift.
U = make_tower(3, 1, 2, precision=8)
x = U.gen_x()
print()
print(U, "defining polynomial (low to high):", U.unram_poly)
print("theta(x) == x^3    :", apply_theta(x).equals(x ** 3))
print("theta^2(x) == x    :", theta_power(x, 2).equals(x))

# Teichmuller lifts: the root of unity congruent to 2 mod 5.
Q5 = make_tower(5, 1, 1, precision=6)
w = teichmuller(Q5, 2)
print()
print("omega(2) in Z_5    =", w.to_fraction(), "=", serialize(w))
print("omega(2)^4 == 1    :", (w ** 4).equals(Q5.one()))

# Absolute values stay exact rationals.
print("|9/2|_3            =", E.from_rational(Fraction(9, 2)).abs_F())
