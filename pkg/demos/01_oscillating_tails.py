"""Why a termination function is needed, and what it buys.

The integral of sin(x) from 0 to b swings between 0 and 2 forever. Cutting the
range off with a hard step never settles; spreading the cut over half a period
with two half-weight atoms cancels the swing exactly.
"""

import math

from zintegral import evaluate
from zintegral.integrand import catalog_get
from zintegral.termination import make_exp_pair, make_pair, make_step, make_triple

g = catalog_get("sin_ax", {"alpha": 1.0})

hard = evaluate(g, 0.0, make_step())
print(f"sin(x), hard cut-off : status {hard.status}")
print("  last tails:", ", ".join(f"{s.value:+.3f}" for s in hard.limit_report.samples[-4:]))

soft = evaluate(g, 0.0, make_pair(math.pi))
print(f"sin(x), pair(pi)     : {soft.value:.12f}  (status {soft.status})")

# x cos(x) has a growing antiderivative; the pair leaves a linear drift that a triple removes.
h = catalog_get("x_cos_ax", {"alpha": 1.0})
print(f"x cos(x), pair(pi)   : status {evaluate(h, 0.0, make_pair(math.pi)).status}")
print(f"x cos(x), triple(pi) : {evaluate(h, 0.0, make_triple(math.pi)).value:.12f}")

# Damped oscillation: the ordinary integral exists and every termination agrees with it.
d = catalog_get("exp_sin", {"alpha": 1.0, "beta": -0.5})
for label, zd in [("step", make_step()), ("exppair", make_exp_pair(math.pi, -0.5))]:
    print(f"exp(-x/2) sin(x), {label:8}: {evaluate(d, 0.0, zd).value:.12f}   exact 0.8")
