"""Different terminations, same answer; sums split term by term."""

import math

from zintegral import evaluate
from zintegral.evaluator import linearity_check, uniqueness_report
from zintegral.integrand import catalog_get
from zintegral.termination import make_box, make_pair, make_step

alpha = 1.7
g = catalog_get("sin_ax", {"alpha": alpha})
rep = uniqueness_report(g, 0.0, [make_pair(math.pi / alpha), make_box(2 * math.pi / alpha)], labels=["pair", "box"])
print(f"sin({alpha} x) from 0, expected {1 / alpha:.12f}")
for label, res in rep.members:
    print(f"  {label:14} {res.value:.12f}")
print(f"  largest discrepancy {rep.discrepancy:.1e}")

# A square wave of period 2 has a triangular antiderivative of period 2,
# so a box one unit wide leaves an oscillation behind.
sq = catalog_get("square_wave", {})
print("square wave, box(1):", evaluate(sq, 0.0, make_box(1.0)).status)
print("square wave, box(2):", evaluate(sq, 0.0, make_box(2.0)).value)

# Linearity: each part keeps its own termination.
g1, g2 = catalog_get("sin_ax", {"alpha": 1.0}), catalog_get("exp_decay", {"lambda": 1.0})
lin = linearity_check(g1, g2, 2.0, -1.0, 0.0, make_pair(math.pi), make_step())
print(f"2 sin(x) - exp(-x): combined {lin.lhs:.12f}, split {lin.rhs:.12f}")
