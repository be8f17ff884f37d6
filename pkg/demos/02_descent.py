"""Semisimple descent at theta, one iteration at a time.

Every k in 1 + varpi_E^m M_n(O_E) is theta-conjugate to a theta-fixed h:
k = g h theta(g)^-1.  Each step removes the part of k - 1 that is moved by
theta, and the remainder shrinks by at least one power of varpi_F.

Run:  python demos/02_descent.py
"""
from basechange import LatticePair, MatrixE, descend, make_tower, sampling

E = make_tower(5, 2, 1, precision=12)
L = LatticePair(m=2, n=2, e=E.e)
k = sampling.random_congruence(sampling.make_rng(7), E, 2, L.m)
print("k =", k)

trace = []
g, h = descend(k, L, trace=trace)
for step in trace:
    print(f"  iteration {step['iteration']}: non-fixed part has valuation {step['x2_depth']}")

print("h theta-fixed            :", h.is_theta_fixed())
print("g h theta(g)^-1 == k     :", (g @ h @ g.theta().inverse()).equals(k))
print("h =", h)

# A theta-fixed input needs no work at all.
g0, h0 = descend(h, L)
print("descend(h) returns (1, h):", g0.equals(MatrixE.identity(E, 2)) and h0.equals(h))
