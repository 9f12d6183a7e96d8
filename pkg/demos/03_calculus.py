"""Differentiating under the integral sign and swapping integration order."""

import math

from scipy import special

from zintegral.calculus import (
    WeightedInterchangeProblem,
    cos_xy_over_x_family,
    interchange_check,
    leibniz_check,
    sin_xy_family,
)

# d/dy of the integral of sin(xy) from 0 is minus 1/y^2, and the integral of x cos(xy) agrees.
for y in (0.5, 1.0, 2.0):
    rep = leibniz_check(sin_xy_family(), 0.0, y)
    print(f"sin(xy), y={y}: finite difference {rep.lhs:+.9f}, integral of derivative {rep.rhs:+.9f}")

rep = leibniz_check(cos_xy_over_x_family(), 1.0, 1.0)
print(f"cos(xy)/x from 1 at y=1: {rep.lhs:+.9f} vs {rep.rhs:+.9f} (exact {-math.cos(1):+.9f})")

prob = WeightedInterchangeProblem(w=lambda y: 1.0, f=sin_xy_family(), y_lo=1.0, y_hi=2.0, a=1.0)
rep = interchange_check(prob)
oracle = special.sici(2.0)[1] - special.sici(1.0)[1]
print(f"integrate in x first then y: {rep.lhs:.12f}")
print(f"integrate in y first then x: {rep.rhs:.12f}")
print(f"Ci(2) - Ci(1)              : {oracle:.12f}")
