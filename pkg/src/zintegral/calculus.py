"""Numerical checks of the calculus rules for terminated integrals.

Covers differentiation under the integral sign, interchange of an outer
ordinary integral with the inner terminated one, linear changes of variable,
and a nonlinear substitution that does not preserve the value.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .evaluator import GOLDEN, IntegralResult, LimitPolicy, evaluate
from .integrand import Integrand, square_wave, square_wave_antiderivative
from .quadrature import QuadratureError, gauss_legendre
from .termination import (
    TerminationDerivative,
    combine,
    combine_many,
    make_atoms,
    make_box,
    make_pair,
    make_step,
    rescale,
)

__all__ = [
    "NonConvergenceError",
    "ParametricIntegrand",
    "WeightedInterchangeProblem",
    "LeibnizReport",
    "InterchangeReport",
    "ChangeOfVariable",
    "CounterexampleReport",
    "leibniz_lhs",
    "leibniz_rhs",
    "leibniz_check",
    "interchange_check",
    "linear_change_of_variable",
    "substitution_counterexample",
    "sin_xy_family",
    "cos_xy_over_x_family",
    "linear_in_y_family",
    "y_independent_family",
]

DEFAULT_H = 1e-4
# agreement floor for the finite-difference comparison; the truncation error
# h^2/6 |d^3 Z/dy^3| alone exceeds 10 h^2 for 1/y-type values at y = 1/2
LEIBNIZ_FLOOR = 1e-6

Func2 = Callable[[float, float], float]


class NonConvergenceError(RuntimeError):
    """A terminated integral needed by a check did not converge."""

    def __init__(self, what: str, result: IntegralResult):
        super().__init__(f"{what}: limit {result.status}")
        self.result = result


@dataclass(frozen=True, eq=False)
class ParametricIntegrand:
    """``f(x, y)`` with its x-antiderivative and y-derivatives.

    ``termination_maker(y)`` serves ``f(., y)``; ``termination_maker_deriv(y)``
    serves ``f_y(., y)``. ``period(y)`` is the x-period used for the
    sampling step, and ``policy_overrides`` is forwarded to
    :meth:`LimitPolicy.for_integrand`.
    """

    f: Func2
    f_y: Func2
    F: Func2
    F_y: Func2
    termination_maker: Callable[[float], TerminationDerivative]
    termination_maker_deriv: Callable[[float], TerminationDerivative]
    period: Callable[[float], float | None] = lambda y: None
    label: str = "f(x,y)"
    policy_overrides: dict = field(default_factory=dict)

    def at(self, y: float) -> Integrand:
        f, F = self.f, self.F
        return Integrand(f=lambda x: f(x, y), F=lambda x: F(x, y), period_hint=self.period(y), label=f"{self.label} @ y={y:g}")

    def deriv_at(self, y: float) -> Integrand:
        f_y, F_y = self.f_y, self.F_y
        return Integrand(
            f=lambda x: f_y(x, y), F=lambda x: F_y(x, y), period_hint=self.period(y), label=f"d/dy {self.label} @ y={y:g}"
        )

    def policy(self, y: float, policy: LimitPolicy | None = None) -> LimitPolicy:
        if policy is not None:
            return policy
        return LimitPolicy.for_integrand(self.at(y), **self.policy_overrides)


@dataclass(frozen=True, eq=False)
class WeightedInterchangeProblem:
    """``int_{y_lo}^{y_hi} w(y) Z-int_a^inf f(x, y) dx dy`` both ways round."""

    w: Callable[[float], float]
    f: ParametricIntegrand
    y_lo: float
    y_hi: float
    a: float
    partition_count: int = 33
    smoothing_order: int = 6

    def __post_init__(self):
        if not self.y_lo <= self.y_hi:
            raise ValueError("y_lo must not exceed y_hi")
        if self.partition_count < 1:
            raise ValueError("partition_count must be positive")
        if self.smoothing_order < 1:
            raise ValueError("smoothing_order must be positive")


# ---------------------------------------------------------------------------
# Leibniz rule


def _value(g: Integrand, a: float, zd: TerminationDerivative, policy: LimitPolicy, what: str) -> float:
    res = evaluate(g, a, zd, policy)
    if not res.converged:
        raise NonConvergenceError(what, res)
    return res.value


def leibniz_lhs(p: ParametricIntegrand, a: float, y: float, h: float = DEFAULT_H, policy: LimitPolicy | None = None) -> float:
    """Central difference in ``y`` of the terminated integral of ``f(., y)``.

    All three stencil points must converge; the centre value is computed
    only to enforce that. The sampling grid of the centre is reused.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    pol = p.policy(y, policy)
    values = {}
    for yy in (y - h, y, y + h):
        values[yy] = _value(p.at(yy), a, p.termination_maker(yy), pol, f"Z-integral at y={yy!r}")
    return (values[y + h] - values[y - h]) / (2.0 * h)


def leibniz_rhs(p: ParametricIntegrand, a: float, y: float, policy: LimitPolicy | None = None) -> float:
    """Terminated integral of ``f_y(., y)``."""
    return _value(p.deriv_at(y), a, p.termination_maker_deriv(y), p.policy(y, policy), f"Z-integral of f_y at y={y!r}")


@dataclass
class LeibnizReport:
    lhs: float
    rhs: float
    h: float
    tol: float

    @property
    def difference(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.difference <= self.tol


def leibniz_check(
    p: ParametricIntegrand, a: float, y: float, h: float = DEFAULT_H, policy: LimitPolicy | None = None
) -> LeibnizReport:
    """Compare both sides within ``max(10 h^2, policy.tol, LEIBNIZ_FLOOR)``."""
    lhs = leibniz_lhs(p, a, y, h, policy)
    rhs = leibniz_rhs(p, a, y, policy)
    tol = max(10.0 * h * h, p.policy(y, policy).tol, LEIBNIZ_FLOOR)
    return LeibnizReport(lhs=lhs, rhs=rhs, h=h, tol=tol)


# ---------------------------------------------------------------------------
# interchange of integration order


@dataclass
class InterchangeReport:
    lhs: float
    rhs: float
    lhs_refined: float
    nodes: int
    tol: float
    rhs_result: IntegralResult

    @property
    def difference(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def stable(self) -> bool:
        """The outer quadrature moved by less than ``tol / 10`` when the nodes doubled."""
        return abs(self.lhs_refined - self.lhs) <= 0.1 * self.tol

    @property
    def passed(self) -> bool:
        return self.difference <= self.tol and self.stable


def _outer_sum(prob: WeightedInterchangeProblem, n: int, policy: LimitPolicy | None) -> float:
    if prob.y_hi == prob.y_lo:
        return 0.0
    x, w = gauss_legendre(n)
    half = 0.5 * (prob.y_hi - prob.y_lo)
    mid = 0.5 * (prob.y_hi + prob.y_lo)
    total = []
    for xi, wi in zip(x, w):
        y = mid + half * xi
        inner = _value(prob.f.at(y), prob.a, prob.f.termination_maker(y), prob.f.policy(y, policy), f"inner integral at y={y!r}")
        total.append(wi * half * prob.w(y) * inner)
    return math.fsum(total)


def _quad_y(func, lo: float, hi: float) -> float:
    if hi == lo:
        return 0.0
    out = integrate.quad(func, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=400, full_output=1)
    if len(out) > 3:
        raise QuadratureError(f"y-quadrature failed ({str(out[3]).splitlines()[0]})", (lo, hi))
    return out[0]


def interchange_check(
    prob: WeightedInterchangeProblem,
    policy: LimitPolicy | None = None,
    rhs_termination: TerminationDerivative | None = None,
) -> InterchangeReport:
    """Outer integral of the inner terminated integrals vs. the reverse order.

    The outer integral uses ``partition_count`` Gauss-Legendre nodes (and
    twice as many for the stability figure). On the other side the inner
    y-integral of ``F`` is the antiderivative of ``x -> int w f dy``. Its
    default termination combines the endpoint terminations
    ``smoothing_order`` times, which cancels the oscillation contributed by
    both ends of the y-range.
    """
    lhs = _outer_sum(prob, prob.partition_count, policy)
    lhs_refined = _outer_sum(prob, 2 * prob.partition_count, policy)

    pf, w, lo, hi = prob.f, prob.w, prob.y_lo, prob.y_hi
    g = Integrand(
        f=lambda x: _quad_y(lambda y: w(y) * pf.f(float(x), y), lo, hi),
        F=lambda x: _quad_y(lambda y: w(y) * pf.F(float(x), y), lo, hi),
        label=f"int w(y) {pf.label} dy",
    )
    if rhs_termination is None:
        unit = combine(pf.termination_maker(lo), pf.termination_maker(hi))
        rhs_termination = combine_many(*[unit] * prob.smoothing_order)
    periods = [p for p in (pf.period(lo), pf.period(hi)) if p]
    base = policy or LimitPolicy()
    rhs_policy = base.replace(b_step=GOLDEN * max(1.0, *periods) if periods else base.b_step)
    rhs = evaluate(g, prob.a, rhs_termination, rhs_policy)
    if not rhs.converged:
        raise NonConvergenceError("reversed-order integral", rhs)
    return InterchangeReport(
        lhs=lhs,
        rhs=rhs.value,
        lhs_refined=lhs_refined,
        nodes=prob.partition_count,
        tol=base.tol,
        rhs_result=rhs,
    )


# ---------------------------------------------------------------------------
# change of variable

ChangeOfVariable = namedtuple("ChangeOfVariable", "integrand termination a")


def linear_change_of_variable(
    g: Integrand, zeta: TerminationDerivative, r: float, s: float, alpha: float = 0.0
) -> ChangeOfVariable:
    """Substitute ``u = r + s x`` in the integral of ``g`` from ``alpha``.

    The returned integrand already carries the factor ``s``, so its value
    with the returned termination equals the original value.
    """
    if not s > 0:
        raise ValueError("s must be positive (increasing linear maps only)")
    f, F = g.f, g.F
    h = Integrand(
        f=lambda x: s * f(r + s * x),
        F=None if F is None else (lambda x: F(r + s * x)),
        period_hint=None if g.period_hint is None else g.period_hint / s,
        label=f"{s:g}*[{g.label}](u={r:g}+{s:g}x)",
        params=dict(g.params),
        growth_rate=g.growth_rate * s,
    )
    return ChangeOfVariable(h, rescale(zeta, s), (alpha - r) / s)


@dataclass
class CounterexampleReport:
    alpha: float
    base: float
    substituted: float
    direct: float
    tol: float

    @property
    def difference(self) -> float:
        return self.substituted - self.base

    @property
    def expected_difference(self) -> float:
        """``2 alpha / pi``, from the antiderivative ``alpha sin(pi frac u)``."""
        return 2.0 * self.alpha / math.pi

    @property
    def naive_difference(self) -> float:
        """``2 alpha``: what ``alpha pi sin(pi frac u)`` as antiderivative would give."""
        return 2.0 * self.alpha

    @property
    def matches_naive(self) -> bool:
        return abs(self.difference - self.naive_difference) <= self.tol

    @property
    def consistent(self) -> bool:
        """Split and unsplit evaluations agree and the difference is ``2 alpha / pi``."""
        return abs(self.difference - self.expected_difference) <= self.tol and abs(self.direct - self.substituted) <= self.tol

    @property
    def value_changed(self) -> bool:
        return abs(self.difference) > self.tol


def _cos_part(alpha: float) -> Integrand:
    # alpha pi f(u) cos(pi u) equals alpha pi cos(pi frac(u))
    def G(u):
        return alpha * np.sin(np.pi * (u - np.floor(u)))

    return Integrand(
        f=lambda u: alpha * np.pi * square_wave(u) * np.cos(np.pi * u),
        F=G,
        period_hint=2.0,
        label=f"{alpha:g} pi f(u) cos(pi u)",
    )


def substitution_counterexample(alpha: float, policy: LimitPolicy | None = None) -> CounterexampleReport:
    """Square wave before and after ``x = u + alpha sin(pi u)``.

    ``base`` uses atoms at 0 and 1. ``substituted`` splits the warped
    integrand into the square wave (same atoms) plus the cosine part, which
    is terminated by ``z(u) = 1 - u`` on ``[0, 1]``. ``direct`` evaluates the
    warped integrand in one piece under the combined termination.
    """
    if abs(alpha) > 1.0 / math.pi + 1e-15:
        raise ValueError("alpha must satisfy |alpha| <= 1/pi")
    policy = policy or LimitPolicy(b_step=GOLDEN * 2.0)
    pair = make_atoms([(0.0, -0.5), (1.0, -0.5)])
    box = make_box(1.0)
    sq = Integrand(f=square_wave, F=square_wave_antiderivative, period_hint=2.0, label="square_wave")
    base = _value(sq, 0.0, pair, policy, "square wave")
    extra = _value(_cos_part(alpha), 0.0, box, policy, "cosine part")

    def warp(u):
        return u + alpha * np.sin(np.pi * u)

    warped = Integrand(
        f=lambda u: square_wave(warp(u)) * (1.0 + alpha * np.pi * np.cos(np.pi * u)),
        F=lambda u: square_wave_antiderivative(warp(u)),
        period_hint=2.0,
        label="warped square wave",
    )
    direct = _value(warped, 0.0, combine(pair, box), policy, "warped square wave")
    return CounterexampleReport(alpha=alpha, base=base, substituted=base + extra, direct=direct, tol=policy.tol)


# ---------------------------------------------------------------------------
# ready-made families


def sin_xy_family() -> ParametricIntegrand:
    """``sin(xy)`` and ``x cos(xy)``, terminated by a pair and a triple."""
    return ParametricIntegrand(
        f=lambda x, y: np.sin(x * y),
        f_y=lambda x, y: x * np.cos(x * y),
        F=lambda x, y: -np.cos(x * y) / y,
        F_y=lambda x, y: np.cos(x * y) / y**2 + x * np.sin(x * y) / y,
        termination_maker=lambda y: make_pair(math.pi / y),
        termination_maker_deriv=lambda y: combine(make_pair(math.pi / y), make_pair(math.pi / y)),
        period=lambda y: 2.0 * math.pi / y,
        label="sin(xy)",
    )


def cos_xy_over_x_family(order: int = 4, b_start: float = 2000.0) -> ParametricIntegrand:
    """``cos(xy)/x`` with ``F = Ci(xy)``, and ``-sin(xy)`` for the derivative.

    The finite difference divides by ``2h``, so the inner values need about
    1e-11 accuracy; ``order`` pairs combined at large ``b`` provide it.
    """

    def F(x, y):
        return special.sici(np.asarray(x, dtype=float) * y)[1]

    def F_y(x, y):
        # d/dy Ci(xy) = cos(xy)/y
        return np.cos(np.asarray(x, dtype=float) * y) / y

    return ParametricIntegrand(
        f=lambda x, y: np.cos(x * y) / x,
        f_y=lambda x, y: -np.sin(x * y),
        F=F,
        F_y=F_y,
        termination_maker=lambda y: combine_many(*[make_pair(math.pi / y)] * order),
        termination_maker_deriv=lambda y: make_pair(math.pi / y),
        period=lambda y: 2.0 * math.pi / y,
        label="cos(xy)/x",
        policy_overrides={"b_start": b_start},
    )


def linear_in_y_family() -> ParametricIntegrand:
    """``y exp(-x)``: conventionally convergent, derivative 1 per unit y from 0."""
    return ParametricIntegrand(
        f=lambda x, y: y * np.exp(-x),
        f_y=lambda x, y: np.exp(-x),
        F=lambda x, y: -y * np.exp(-x),
        F_y=lambda x, y: -np.exp(-x),
        termination_maker=lambda y: make_step(),
        termination_maker_deriv=lambda y: make_step(),
        label="y exp(-x)",
    )


def y_independent_family(alpha: float = 1.0) -> ParametricIntegrand:
    """``sin(alpha x)`` viewed as a function of ``(x, y)``; every y-derivative is 0."""
    zero = lambda x, y: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    return ParametricIntegrand(
        f=lambda x, y: np.sin(alpha * x),
        f_y=zero,
        F=lambda x, y: -np.cos(alpha * x) / alpha,
        F_y=zero,
        termination_maker=lambda y: make_pair(math.pi / alpha),
        termination_maker_deriv=lambda y: make_pair(math.pi / alpha),
        period=lambda y: 2.0 * math.pi / alpha,
        label=f"sin({alpha:g}x)",
    )
