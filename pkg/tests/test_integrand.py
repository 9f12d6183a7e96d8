import math
import threading

import numpy as np
import pytest
from scipy import special

from zintegral.integrand import (
    CATALOG,
    Integrand,
    IntegrandError,
    NumericAntiderivative,
    catalog_get,
    linear_combination,
    numeric_antiderivative,
    shift_antiderivative,
    square_wave,
    square_wave_antiderivative,
)
from zintegral.quadrature import QuadratureError

PARAMS = {
    "sin_ax": {"alpha": 1.3},
    "x_cos_ax": {"alpha": 0.7},
    "exp_sin": {"alpha": 2.0, "beta": -0.05},
    "square_wave": {},
    "sin_xy": {"y": 1.5},
    "x_cos_xy": {"y": 0.5},
    "cos_xy_over_x": {"y": 2.0},
    "square_wave_warped": {"alpha": 0.25},
    "gaussian": {"sigma": 1.0},
    "exp_decay": {"lambda": 1.0},
}


def test_catalog_covers_every_name():
    assert set(PARAMS) == set(CATALOG)


def test_catalog_examples():
    g = catalog_get("sin_ax", {"alpha": 1.0})
    assert g.f(0.3) == pytest.approx(math.sin(0.3))
    assert g.F(0.3) == pytest.approx(-math.cos(0.3))
    assert g.period_hint == pytest.approx(2 * math.pi)
    sq = catalog_get("square_wave", {})
    assert sq.period_hint == 2.0
    assert list(square_wave(np.array([0.5, 1.5, 2.5, -0.5]))) == [1.0, -1.0, 1.0, -1.0]
    e = catalog_get("exp_decay", {"lambda": 1.0})
    assert e.F(2.0) == pytest.approx(-math.exp(-2.0))


@pytest.mark.parametrize("name", sorted(PARAMS))
def test_F_differentiates_to_f(name):
    """Central difference of F matches f at 100 random points in [a, a + 100]."""
    g = catalog_get(name, PARAMS[name])
    rng = np.random.default_rng(7)
    a = 1.0
    xs = a + 100 * rng.random(100)
    if name.startswith("square_wave"):
        # keep away from the jumps of f
        xs = np.floor(xs) + 0.05 + 0.9 * (xs - np.floor(xs))
    h = 1e-5
    for x in xs:
        num = (g.F(x + h) - g.F(x - h)) / (2 * h)
        ref = float(g.f(x))
        assert num == pytest.approx(ref, rel=1e-6, abs=1e-6 * max(1.0, abs(float(g.F(x))))), x


@pytest.mark.parametrize(
    "name, params",
    [
        ("nope", {}),
        ("sin_ax", {}),
        ("sin_ax", {"alpha": 0.0}),
        ("sin_ax", {"alpha": 1.0, "beta": 2.0}),
        ("exp_sin", {"alpha": 1.0}),
        ("square_wave_warped", {"alpha": 0.5}),
        ("gaussian", {"sigma": -1.0}),
        ("sin_xy", {"y": float("nan")}),
    ],
)
def test_catalog_rejects(name, params):
    with pytest.raises(IntegrandError):
        catalog_get(name, params)


def test_warped_square_wave_invariance():
    rng = np.random.default_rng(3)
    u = rng.uniform(-20, 20, 1000)
    for alpha in (-1 / math.pi, -0.2, 0.25, 1 / math.pi):
        warped = u + alpha * np.sin(np.pi * u)
        # floor(u) is preserved except at the integers themselves
        assert np.array_equal(square_wave(warped), square_wave(u))


def test_square_wave_antiderivative_is_triangle():
    x = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 2.25])
    assert square_wave_antiderivative(x) == pytest.approx([0, 0.5, 1.0, 0.5, 0.0, 0.25])


# --- numeric antiderivative ---------------------------------------------------


def test_numeric_cos():
    N = numeric_antiderivative(np.cos, 0.0)
    assert N(0.0) == 0.0
    assert N(math.pi / 2) == pytest.approx(1.0, abs=1e-9)


def test_numeric_fresnel():
    N = numeric_antiderivative(lambda x: np.sin(x * x), 0.0)
    s, _ = special.fresnel(5.0 * math.sqrt(2 / math.pi))
    assert N(5.0) == pytest.approx(math.sqrt(math.pi / 2) * s, abs=1e-8)


def test_numeric_exp():
    N = numeric_antiderivative(lambda x: np.exp(-x), 0.0)
    assert N(50.0) == pytest.approx(1.0 - math.exp(-50.0), abs=1e-12)


def test_numeric_additivity_and_checkpoints():
    N = NumericAntiderivative(np.sin, base_point=2.0)
    assert N(7.3) - N(4.1) == pytest.approx(math.cos(4.1) - math.cos(7.3), abs=1e-11)
    assert len(N.checkpoints) >= 6
    assert N(np.array([2.0, 3.0])) == pytest.approx([0.0, math.cos(2) - math.cos(3)])


def test_numeric_rejects_below_base():
    with pytest.raises(ValueError):
        numeric_antiderivative(np.sin, 1.0)(0.5)


def test_numeric_reports_failing_panel():
    N = numeric_antiderivative(lambda x: 1.0 / (x - 0.5) if x != 0.5 else 0.0, 0.0)
    with pytest.raises(QuadratureError) as info:
        N(0.9)
    assert info.value.panel[0] <= 0.5 <= info.value.panel[1]


def test_numeric_matches_closed_form_up_to_constant():
    g = catalog_get("x_cos_ax", {"alpha": 1.0})
    N = numeric_antiderivative(g.f, 0.0)
    xs = np.linspace(0.0, 60.0, 50)
    diff = np.array([g.F(x) - N(x) for x in xs])
    assert np.ptp(diff) < 1e-8


def test_numeric_concurrent_reads_match_serial():
    xs = np.linspace(0, 40, 200)
    serial = numeric_antiderivative(np.cos, 0.0)
    expected = [serial(x) for x in xs]
    shared = numeric_antiderivative(np.cos, 0.0)
    out = [None] * len(xs)

    def work(idx):
        for i in idx:
            out[i] = shared(xs[i])

    threads = [threading.Thread(target=work, args=(range(k, len(xs), 4),)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert out == expected


# --- helpers -------------------------------------------------------------------------


def test_shift_antiderivative():
    F = shift_antiderivative(lambda x: -math.cos(x), 10.0)
    assert F(0.0) == 9.0
    G = shift_antiderivative(np.cos, 0.0)
    assert G(1.234) == math.cos(1.234)


def test_linear_combination():
    g1 = catalog_get("sin_ax", {"alpha": 1.0})
    g2 = catalog_get("exp_decay", {"lambda": 1.0})
    h = linear_combination(g1, g2, 2.0, -1.0)
    assert h.f(0.5) == pytest.approx(2 * math.sin(0.5) - math.exp(-0.5))
    assert h.F(0.5) == pytest.approx(-2 * math.cos(0.5) + math.exp(-0.5))
    no_F = linear_combination(g1, Integrand(f=np.cos), 1.0, 1.0)
    assert no_F.F is None
