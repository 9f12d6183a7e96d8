"""Linear substitutions are safe; a nonlinear one can move the value.

The square wave keeps its sign pattern under x = u + alpha sin(pi u), yet the
substituted integrand picks up a cosine term whose antiderivative has nonzero
mean. The regularized value shifts by 2 alpha / pi.
"""

import math

from zintegral import evaluate
from zintegral.calculus import linear_change_of_variable, substitution_counterexample
from zintegral.integrand import catalog_get
from zintegral.termination import make_pair

g = catalog_get("sin_ax", {"alpha": 1.0})
for r, s in [(0.0, 2.0), (1.5, 0.75)]:
    h, zd, a = linear_change_of_variable(g, make_pair(math.pi), r, s)
    print(f"u = {r} + {s} x: original {evaluate(g, 0.0, make_pair(math.pi)).value:.12f}, substituted {evaluate(h, a, zd).value:.12f}")

for alpha in (0.25, -0.25):
    rep = substitution_counterexample(alpha)
    print(
        f"alpha={alpha:+}: before {rep.base:.6f}, after {rep.substituted:.6f}, "
        f"difference {rep.difference:+.6f} (2 alpha/pi = {2 * alpha / math.pi:+.6f}, 2 alpha = {2 * alpha:+.6f})"
    )
