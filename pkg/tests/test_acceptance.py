"""Acceptance criteria 1-11.

Every test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from zintegral import plane2d
from zintegral.calculus import (
    WeightedInterchangeProblem,
    cos_xy_over_x_family,
    interchange_check,
    leibniz_check,
    linear_change_of_variable,
    sin_xy_family,
    substitution_counterexample,
)
from zintegral.evaluator import DRIFTING, LimitPolicy, evaluate, linearity_check, uniqueness_report
from zintegral.integrand import catalog_get
from zintegral.termination import combine, make_box, make_exp_pair, make_pair, make_step, make_triple

PI = math.pi
GRID = [(alpha, a) for alpha in (1.0, 2.5) for a in (0.0, 1.0)]
criterion = pytest.mark.criterion


def example3_value(alpha, beta, a):
    return math.exp(beta * a) * (alpha * math.cos(alpha * a) - beta * math.sin(alpha * a)) / (alpha**2 + beta**2)


# --- 1-4: worked examples -------------------------------------------------------------


@criterion(1, "sin(alpha x) under pair(pi/alpha) gives cos(alpha a)/alpha, under 1 s per case")
@pytest.mark.parametrize("alpha, a", GRID)
def test_c1_sine(alpha, a):
    start = time.perf_counter()
    res = evaluate(catalog_get("sin_ax", {"alpha": alpha}), a, make_pair(PI / alpha))
    elapsed = time.perf_counter() - start
    assert res.converged
    assert abs(res.value - math.cos(alpha * a) / alpha) <= 1e-8
    assert elapsed < 1.0


@criterion(2, "x cos(alpha x) under triple(pi/alpha)")
@pytest.mark.parametrize("alpha, a", GRID)
def test_c2_x_cosine(alpha, a):
    res = evaluate(catalog_get("x_cos_ax", {"alpha": alpha}), a, make_triple(PI / alpha))
    expected = -math.cos(alpha * a) / alpha**2 - a * math.sin(alpha * a) / alpha
    assert res.converged
    assert abs(res.value - expected) <= 1e-8


@criterion(3, "exp(beta x) sin(alpha x) for beta = -0.5, 0.1 and 0")
@pytest.mark.parametrize("alpha, a", GRID)
def test_c3_decaying(alpha, a):
    beta = -0.5
    res = evaluate(catalog_get("exp_sin", {"alpha": alpha, "beta": beta}), a, make_exp_pair(PI / alpha, beta))
    assert res.converged
    assert abs(res.value - example3_value(alpha, beta, a)) <= 1e-8


@criterion(3, "exp(beta x) sin(alpha x) for beta = -0.5, 0.1 and 0")
@pytest.mark.parametrize("alpha, a", GRID)
def test_c3_growing_capped_policy(alpha, a):
    beta = 0.1
    g = catalog_get("exp_sin", {"alpha": alpha, "beta": beta})
    policy = LimitPolicy.for_integrand(g)
    assert policy.grid()[-1] <= 25 / beta + 1e-9
    res = evaluate(g, a, make_exp_pair(PI / alpha, beta), policy)
    expected = example3_value(alpha, beta, a)
    assert res.converged
    assert abs(res.value - expected) <= 1e-6 * abs(expected)


@criterion(3, "exp(beta x) sin(alpha x) for beta = -0.5, 0.1 and 0")
@pytest.mark.parametrize("alpha, a", GRID)
def test_c3_beta_zero_is_example1(alpha, a):
    zero = evaluate(catalog_get("exp_sin", {"alpha": alpha, "beta": 0.0}), a, make_exp_pair(PI / alpha, 0.0))
    plain = evaluate(catalog_get("sin_ax", {"alpha": alpha}), a, make_pair(PI / alpha))
    assert zero.converged and plain.converged
    assert abs(zero.value - plain.value) <= 1e-12


@criterion(4, "exp(-x) from 0 is 1 under step, pair and box")
@pytest.mark.parametrize("zd", [make_step(), make_pair(PI), make_box(2.0)], ids=["step", "pair", "box"])
def test_c4_conventional(zd):
    res = evaluate(catalog_get("exp_decay", {"lambda": 1.0}), 0.0, zd)
    assert res.converged
    assert abs(res.value - 1.0) <= 1e-9


# --- 5-6: uniqueness and linearity -------------------------------------------------------------


@criterion(5, "uniqueness across pair, box and their combination, 10 random alpha")
def test_c5_uniqueness():
    rng = np.random.default_rng(20240505)
    for alpha in rng.uniform(0.3, 4.0, 10):
        g = catalog_get("sin_ax", {"alpha": alpha})
        rep = uniqueness_report(g, 0.0, [make_pair(PI / alpha), make_box(2 * PI / alpha)], labels=["pair", "box"])
        values = [r.value for _, r in rep.members]
        assert len(values) == 3 and not rep.nonconvergent
        assert max(values) - min(values) < 1e-8, alpha
        assert abs(values[0] - 1 / alpha) < 1e-8


def _random_terminated(rng):
    kind = rng.integers(4)
    alpha = float(rng.uniform(0.5, 3.0))
    if kind == 0:
        return catalog_get("sin_ax", {"alpha": alpha}), make_pair(PI / alpha)
    if kind == 1:
        return catalog_get("x_cos_ax", {"alpha": alpha}), make_triple(PI / alpha)
    if kind == 2:
        beta = float(rng.uniform(-0.5, -0.05))
        return catalog_get("exp_sin", {"alpha": alpha, "beta": beta}), make_exp_pair(PI / alpha, beta)
    return catalog_get("exp_decay", {"lambda": alpha}), make_step()


@criterion(6, "linearity on 20 random combinations")
def test_c6_linearity():
    rng = np.random.default_rng(36)
    for _ in range(20):
        (g1, z1), (g2, z2) = _random_terminated(rng), _random_terminated(rng)
        w1, w2 = rng.uniform(-3, 3, 2)
        a = float(rng.uniform(-1, 1))
        rep = linearity_check(g1, g2, float(w1), float(w2), a, z1, z2)
        assert rep.lhs is not None and rep.rhs is not None, (g1.label, g2.label)
        assert abs(rep.lhs - rep.rhs) <= 1e-8, (g1.label, g2.label)


# --- 7-9: calculus ---------------------------------------------------------------------------------


@criterion(7, "differentiation under the integral sign for cos(xy)/x and sin(xy)")
@pytest.mark.parametrize("family", [cos_xy_over_x_family, sin_xy_family], ids=["cos_xy_over_x", "sin_xy"])
@pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("a", [1.0, 2.0])
def test_c7_leibniz(family, y, a):
    h = 1e-4
    rep = leibniz_check(family(), a, y, h)
    assert abs(rep.lhs - rep.rhs) <= max(10 * h * h, 1e-6)


@criterion(8, "interchange of integration order for sin(xy) on [1, 2]")
@pytest.mark.parametrize("nodes", [33, 65])
def test_c8_interchange(nodes):
    from scipy import special

    oracle = special.sici(2.0)[1] - special.sici(1.0)[1]
    prob = WeightedInterchangeProblem(w=lambda y: 1.0, f=sin_xy_family(), y_lo=1.0, y_hi=2.0, a=1.0, partition_count=nodes)
    rep = interchange_check(prob)
    assert abs(rep.lhs - rep.rhs) <= 1e-6
    assert abs(rep.lhs - oracle) <= 1e-6 and abs(rep.rhs - oracle) <= 1e-6
    assert abs(rep.lhs_refined - rep.lhs) <= 1e-7


@criterion(9, "linear change of variable, and the square-wave substitution difference 2 alpha")
def test_c9_linear_change():
    rng = np.random.default_rng(9)
    for _ in range(20):
        r, s = float(rng.uniform(-3, 3)), float(rng.uniform(0.5, 4.0))
        alpha, lower = float(rng.uniform(0.5, 3.0)), float(rng.uniform(-1, 1))
        g, zeta = catalog_get("sin_ax", {"alpha": alpha}), make_pair(PI / alpha)
        original = evaluate(g, lower, zeta)
        h, zd, a_new = linear_change_of_variable(g, zeta, r, s, alpha=lower)
        moved = evaluate(h, a_new, zd)
        assert original.converged and moved.converged
        assert abs(original.value - moved.value) <= 1e-8, (r, s)


@criterion(9, "linear change of variable, and the square-wave substitution difference 2 alpha")
@pytest.mark.parametrize("alpha", [0.25, -0.25])
def test_c9_counterexample_changes_value(alpha):
    rep = substitution_counterexample(alpha)
    assert abs(rep.base - 0.5) <= 1e-10
    assert rep.value_changed
    assert abs(rep.direct - rep.substituted) <= 1e-8


@criterion(9, "linear change of variable, and the square-wave substitution difference 2 alpha")
@pytest.mark.parametrize("alpha", [0.25, -0.25])
def test_c9_counterexample_difference_is_two_alpha(alpha):
    # Stated target. The computed difference is 2 alpha / pi (0.159 at alpha = 0.25),
    # confirmed by an independent evaluation of the warped integrand; this stays red.
    rep = substitution_counterexample(alpha)
    assert abs(rep.difference - 2 * alpha) <= 1e-8, f"difference {rep.difference!r}, 2 alpha/pi = {2 * alpha / PI!r}"


# --- 10: the plane ------------------------------------------------------------------------------------


@criterion(10, "2-D: Gaussian, smoothed sin(r^2) and the drifting constant")
def test_c10_gaussian():
    res = plane2d.evaluate2d(plane2d.gaussian2d(), plane2d.point_kernel(), [plane2d.circle_family(), plane2d.square_family()])
    assert res.converged
    for rep in res.per_family.values():
        assert abs(rep.limit - PI) <= 1e-6
    assert abs(res.value - PI) <= 1e-6


@criterion(10, "2-D: Gaussian, smoothed sin(r^2) and the drifting constant")
def test_c10_sin_r2_disk_smoothed():
    policy = plane2d.default_policy2d(1e-2)
    assert max(policy.grid()) <= 40
    fams = [plane2d.circle_family(), plane2d.offset_circle_family(1.0, 0.0)]
    res = plane2d.evaluate2d(plane2d.sin_r2(), plane2d.disk_kernel(2.0), fams, policy)
    assert res.converged
    for rep in res.per_family.values():
        assert abs(rep.limit - PI) <= 1e-2
    assert res.agreement_spread <= 1e-2


@criterion(10, "2-D: Gaussian, smoothed sin(r^2) and the drifting constant")
def test_c10_constant_drifts():
    fams = [plane2d.circle_family(), plane2d.square_family()]
    res = plane2d.evaluate2d(plane2d.constant2d(), plane2d.point_kernel(), fams)
    assert res.value is None
    assert all(rep.status == DRIFTING for rep in res.per_family.values())


# --- 11: property suites --------------------------------------------------------------------------


@criterion(11, "property suites, 100 fixed-seed cases each, suite under 5 min")
def test_c11_property_suite_runs_green():
    # runs the hypothesis suite on its own so this file is a complete gate
    path = Path(__file__).with_name("test_properties.py")
    start = time.perf_counter()
    out = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(path)],
        capture_output=True, text=True, check=False,
    )
    assert out.returncode == 0, out.stdout[-2000:]
    assert "6 passed" in out.stdout
    assert time.perf_counter() - start < 300
