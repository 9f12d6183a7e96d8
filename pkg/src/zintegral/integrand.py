"""Integrands with closed-form antiderivatives, plus a numeric fallback."""

from __future__ import annotations

import math
import threading
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate, special

from .quadrature import QuadratureError

__all__ = [
    "Integrand",
    "IntegrandError",
    "NumericAntiderivative",
    "CATALOG",
    "catalog_get",
    "numeric_antiderivative",
    "shift_antiderivative",
    "linear_combination",
    "square_wave",
    "square_wave_antiderivative",
]

RealFunc = Callable[[float], float]


class IntegrandError(ValueError):
    """Unknown catalog entry or bad parameters."""


@dataclass(frozen=True, eq=False)
class Integrand:
    """A real integrand ``f`` and optionally its antiderivative ``F``.

    ``growth_rate`` is the exponential rate of ``|F|`` (0 for bounded or
    polynomially growing antiderivatives); the evaluator uses it to keep the
    sampling grid inside the range where cancellation is still resolvable.
    """

    f: RealFunc
    F: RealFunc | None = None
    period_hint: float | None = None
    label: str = "f"
    params: Mapping[str, float] = field(default_factory=dict)
    growth_rate: float = 0.0


def square_wave(x):
    """+1 on even unit intervals, -1 on odd ones."""
    return 1.0 - 2.0 * np.mod(np.floor(x), 2.0)


def square_wave_antiderivative(x):
    """Triangle wave between 0 and 1 with ``F(0) = 0``."""
    fl = np.floor(x)
    frac = x - fl
    return np.where(np.mod(fl, 2.0) == 0.0, frac, 1.0 - frac)


# ---------------------------------------------------------------------------
# catalog


def _need(params: Mapping[str, float], *names: str) -> list[float]:
    missing = [n for n in names if n not in params]
    if missing:
        raise IntegrandError(f"missing parameter(s): {', '.join(missing)}")
    values = [float(params[n]) for n in names]
    if not all(math.isfinite(v) for v in values):
        raise IntegrandError("parameters must be finite")
    return values


def _frequency(value: float, name: str) -> float:
    if value == 0.0:
        raise IntegrandError(f"{name} = 0 is not allowed for a trigonometric integrand")
    if value < 0.0:
        raise IntegrandError(f"{name} must be positive")
    return value


def _sin_ax(p):
    (a,) = _need(p, "alpha")
    _frequency(a, "alpha")
    return Integrand(
        f=lambda x: np.sin(a * x),
        F=lambda x: -np.cos(a * x) / a,
        period_hint=2 * math.pi / a,
        label=f"sin({a:g}x)",
        params={"alpha": a},
    )


def _x_cos_ax(p):
    (a,) = _need(p, "alpha")
    _frequency(a, "alpha")
    return Integrand(
        f=lambda x: x * np.cos(a * x),
        F=lambda x: np.cos(a * x) / a**2 + x * np.sin(a * x) / a,
        period_hint=2 * math.pi / a,
        label=f"x cos({a:g}x)",
        params={"alpha": a},
    )


def _exp_sin(p):
    a, b = _need(p, "alpha", "beta")
    _frequency(a, "alpha")
    norm = a * a + b * b
    return Integrand(
        f=lambda x: np.exp(b * x) * np.sin(a * x),
        F=lambda x: np.exp(b * x) / norm * (b * np.sin(a * x) - a * np.cos(a * x)),
        period_hint=2 * math.pi / a,
        label=f"exp({b:g}x) sin({a:g}x)",
        params={"alpha": a, "beta": b},
        growth_rate=max(b, 0.0),
    )


def _square_wave(p):
    _need(p)
    return Integrand(
        f=square_wave,
        F=square_wave_antiderivative,
        period_hint=2.0,
        label="square_wave",
        params={},
    )


def _sin_xy(p):
    (y,) = _need(p, "y")
    _frequency(y, "y")
    return Integrand(
        f=lambda x: np.sin(x * y),
        F=lambda x: -np.cos(x * y) / y,
        period_hint=2 * math.pi / y,
        label=f"sin({y:g}x)",
        params={"y": y},
    )


def _x_cos_xy(p):
    (y,) = _need(p, "y")
    _frequency(y, "y")
    return Integrand(
        f=lambda x: x * np.cos(x * y),
        F=lambda x: np.cos(x * y) / y**2 + x * np.sin(x * y) / y,
        period_hint=2 * math.pi / y,
        label=f"x cos({y:g}x)",
        params={"y": y},
    )


def _cos_xy_over_x(p):
    (y,) = _need(p, "y")
    _frequency(y, "y")

    def F(x):
        # cosine integral Ci(xy); d/dx Ci(xy) = cos(xy)/x
        return special.sici(np.asarray(x, dtype=float) * y)[1]

    return Integrand(
        f=lambda x: np.cos(x * y) / x,
        F=F,
        period_hint=2 * math.pi / y,
        label=f"cos({y:g}x)/x",
        params={"y": y},
    )


def _square_wave_warped(p):
    (a,) = _need(p, "alpha")
    if abs(a) > 1.0 / math.pi + 1e-15:
        raise IntegrandError("square_wave_warped needs |alpha| <= 1/pi")

    def warp(u):
        return u + a * np.sin(np.pi * u)

    return Integrand(
        f=lambda u: square_wave(warp(u)) * (1.0 + a * np.pi * np.cos(np.pi * u)),
        F=lambda u: square_wave_antiderivative(warp(u)),
        period_hint=2.0,
        label=f"square_wave(u + {a:g} sin(pi u)) (1 + {a:g} pi cos(pi u))",
        params={"alpha": a},
    )


def _gaussian(p):
    sigma = float(p.get("sigma", 1.0))
    _need({**p, "sigma": sigma}, "sigma")
    if sigma <= 0:
        raise IntegrandError("sigma must be positive")
    return Integrand(
        f=lambda x: np.exp(-((x / sigma) ** 2)),
        F=lambda x: 0.5 * sigma * math.sqrt(math.pi) * special.erf(x / sigma),
        label=f"exp(-(x/{sigma:g})^2)",
        params={"sigma": sigma},
    )


def _exp_decay(p):
    lam = float(p.get("lambda", 1.0))
    _need({**p, "lambda": lam}, "lambda")
    if lam <= 0:
        raise IntegrandError("lambda must be positive")
    return Integrand(
        f=lambda x: np.exp(-lam * x),
        F=lambda x: -np.exp(-lam * x) / lam,
        label=f"exp(-{lam:g}x)",
        params={"lambda": lam},
    )


CATALOG: dict[str, tuple[Callable[[Mapping[str, float]], Integrand], tuple[str, ...]]] = {
    "sin_ax": (_sin_ax, ("alpha",)),
    "x_cos_ax": (_x_cos_ax, ("alpha",)),
    "exp_sin": (_exp_sin, ("alpha", "beta")),
    "square_wave": (_square_wave, ()),
    "sin_xy": (_sin_xy, ("y",)),
    "x_cos_xy": (_x_cos_xy, ("y",)),
    "cos_xy_over_x": (_cos_xy_over_x, ("y",)),
    "square_wave_warped": (_square_wave_warped, ("alpha",)),
    "gaussian": (_gaussian, ("sigma",)),
    "exp_decay": (_exp_decay, ("lambda",)),
}


def catalog_get(name: str, params: Mapping[str, float] | None = None) -> Integrand:
    """Build the catalog integrand ``name`` with the given parameters."""
    if name not in CATALOG:
        raise IntegrandError(f"unknown integrand {name!r}; choose from {', '.join(CATALOG)}")
    builder, keys = CATALOG[name]
    params = dict(params or {})
    extra = set(params) - set(keys)
    if extra:
        raise IntegrandError(f"unexpected parameter(s) for {name}: {', '.join(sorted(extra))}")
    g = builder(params)
    return Integrand(
        f=g.f,
        F=g.F,
        period_hint=g.period_hint,
        label=g.label,
        params=g.params,
        growth_rate=g.growth_rate,
    )


# ---------------------------------------------------------------------------
# numeric antiderivative


class NumericAntiderivative:
    """``x -> integral of f from base_point to x`` with cached unit panels.

    Cumulative values are kept at ``base_point + k * panel``; a query adds one
    partial panel to the nearest checkpoint below it. The cache only grows,
    under a lock, so concurrent readers see the same values as a serial run.
    """

    def __init__(self, f: RealFunc, base_point: float = 0.0, tol: float = 1e-12, panel: float = 1.0):
        self.f = f
        self.base_point = float(base_point)
        self.tol = tol
        self.panel = panel
        self._checkpoints = [0.0]
        self._lock = threading.Lock()

    def _quad(self, lo: float, hi: float) -> float:
        out = integrate.quad(self.f, lo, hi, epsabs=self.tol, epsrel=self.tol, limit=200, full_output=1)
        # scipy appends a message only when ier > 0
        if len(out) > 3:
            raise QuadratureError(f"quadrature failed ({str(out[3]).splitlines()[0]})", (lo, hi))
        return out[0]

    def _extend(self, k: int) -> None:
        with self._lock:
            while len(self._checkpoints) <= k:
                j = len(self._checkpoints) - 1
                lo = self.base_point + j * self.panel
                self._checkpoints.append(self._checkpoints[-1] + self._quad(lo, lo + self.panel))

    def _value(self, x: float) -> float:
        if x < self.base_point:
            raise ValueError(f"x = {x!r} lies below the base point {self.base_point!r}")
        k = int((x - self.base_point) // self.panel)
        if k >= len(self._checkpoints):
            self._extend(k)
        lo = self.base_point + k * self.panel
        return self._checkpoints[k] + (self._quad(lo, x) if x > lo else 0.0)

    def __call__(self, x):
        if np.ndim(x) == 0:
            return self._value(float(x))
        xa = np.asarray(x, dtype=float)
        return np.array([self._value(v) for v in xa.ravel()]).reshape(xa.shape)

    @property
    def checkpoints(self) -> tuple[float, ...]:
        return tuple(self._checkpoints)


def numeric_antiderivative(f: RealFunc, base_point: float = 0.0, tol: float = 1e-12) -> NumericAntiderivative:
    return NumericAntiderivative(f, base_point=base_point, tol=tol)


def shift_antiderivative(F: RealFunc, constant: float) -> RealFunc:
    """``x -> F(x) + constant``; a no-op for the evaluated integral."""
    return lambda x: F(x) + constant


def linear_combination(g1: Integrand, g2: Integrand, w1: float, w2: float) -> Integrand:
    """Integrand ``w1*g1 + w2*g2``; closed-form only when both parts are."""
    F = None
    if g1.F is not None and g2.F is not None:
        F1, F2 = g1.F, g2.F
        F = lambda x: w1 * F1(x) + w2 * F2(x)
    f1, f2 = g1.f, g2.f
    return Integrand(
        f=lambda x: w1 * f1(x) + w2 * f2(x),
        F=F,
        period_hint=None,
        label=f"{w1:g}*[{g1.label}] + {w2:g}*[{g2.label}]",
        params={},
        growth_rate=max(g1.growth_rate if w1 else 0.0, g2.growth_rate if w2 else 0.0),
    )
