"""Evaluation of ``-F(a) - lim_b  int_0^c F(x + b) z'(x) dx``.

The limit is taken numerically: the tail functional is sampled on a grid of
``b`` values and :func:`detect_limit` classifies the samples as converged,
oscillating or drifting. That classification is an engineering proxy for
the existence of the limit; it cannot certify it from finitely many points.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .integrand import Integrand, linear_combination, numeric_antiderivative
from .quadrature import adaptive_simpson
from .termination import TerminationDerivative, combine, validate

__all__ = [
    "GOLDEN",
    "LimitPolicy",
    "TailSample",
    "LimitReport",
    "IntegralResult",
    "TailEvaluationError",
    "tail",
    "sample_tail",
    "detect_limit",
    "evaluate",
    "UniquenessReport",
    "uniqueness_report",
    "LinearityReport",
    "linearity_check",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
EPS = np.finfo(float).eps
# rounding of a tail is taken as this many ulps of its largest term
NOISE_ULPS = 8.0
SEGMENT_TOL = 1e-10

CONVERGED = "converged"
OSCILLATING = "oscillating"
DRIFTING = "drifting"


class TailEvaluationError(RuntimeError):
    """The antiderivative failed or returned a non-finite value."""

    def __init__(self, x: float, cause: BaseException | str):
        super().__init__(f"antiderivative evaluation failed at x = {x!r}: {cause}")
        self.x = x


@dataclass(frozen=True)
class LimitPolicy:
    """Sampling grid and tolerance used to decide ``lim_{b -> inf}``."""

    b_start: float = 50.0
    b_count: int = 32
    b_step: float = GOLDEN
    window: int = 8
    tol: float = 1e-8
    averaging: bool = False

    def __post_init__(self):
        if self.b_count < 8:
            raise ValueError("b_count must be at least 8")
        if self.window < 4 or self.window > self.b_count:
            raise ValueError("window must lie in [4, b_count]")
        if not self.b_step > 0:
            raise ValueError("b_step must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def grid(self) -> np.ndarray:
        return self.b_start + self.b_step * np.arange(self.b_count)

    def replace(self, **changes) -> "LimitPolicy":
        return dataclasses.replace(self, **changes)

    def check_aliasing(self, period: float, max_denominator: int = 12) -> None:
        """Reject a step that is a small-denominator rational multiple of ``period``.

        On such a grid a periodic tail is only ever seen at a handful of
        phases and can masquerade as a constant.
        """
        ratio = self.b_step / period
        approx = Fraction(ratio).limit_denominator(max_denominator)
        if abs(ratio - float(approx)) <= 1e-9 * max(1.0, ratio):
            raise ValueError(
                f"b_step = {self.b_step!r} is {approx} x the period {period!r}; "
                "the grid would alias a periodic tail"
            )

    @classmethod
    def for_integrand(cls, g: Integrand, **overrides) -> "LimitPolicy":
        """Default policy for ``g``.

        The step is ``GOLDEN * max(1, period)``. When ``F`` grows like
        ``exp(beta x)`` the grid is pulled back so that it ends before
        ``25 / beta`` and before rounding of the cancelling terms exceeds the
        tolerance.
        """
        base = cls(**{k: v for k, v in overrides.items() if k in ("tol", "window", "averaging")})
        step = GOLDEN * max(1.0, g.period_hint or 1.0)
        params = dict(b_start=base.b_start, b_count=base.b_count, b_step=step)
        beta = g.growth_rate
        if beta > 0:
            end = min(25.0 / beta, _noise_limited_end(beta, base.tol))
            count = 16
            if params["b_start"] + (count - 1) * step > end:
                start = end - (count - 1) * step
                if start < 0:
                    step = GOLDEN * end / (count - 1)
                    start = end - (count - 1) * step
                params.update(b_start=start, b_count=count, b_step=step)
        params.update(overrides)
        return cls(**{**dataclasses.asdict(base), **params})


def _noise_limited_end(beta: float, tol: float) -> float:
    # largest B with exp(beta B) (1 + B) * eps <= tol / 100
    target = math.log(tol / (100.0 * EPS))
    lo, hi = 0.0, target / beta
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if beta * mid + math.log1p(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class TailSample:
    b: float
    value: float
    # magnitude of the largest cancelling term, for the rounding floor
    scale: float = 0.0


@dataclass
class LimitReport:
    samples: tuple[TailSample, ...]
    limit: float | None
    status: str
    spread: float
    tol: float
    noise_floor: float = 0.0
    slope: float = 0.0
    cesaro_limit: float | None = None
    cesaro_spread: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


@dataclass
class IntegralResult:
    value: float | None
    a: float
    limit_report: LimitReport
    termination_used: TerminationDerivative
    f_label: str
    F_at_a: float = 0.0

    @property
    def status(self) -> str:
        return self.limit_report.status

    @property
    def converged(self) -> bool:
        return self.limit_report.converged


# ---------------------------------------------------------------------------
# tail functional


def _safe(F: Callable, x: float) -> float:
    try:
        v = float(F(x))
    except Exception as exc:  # noqa: BLE001 - re-raised with the offending point
        raise TailEvaluationError(x, exc) from exc
    if not math.isfinite(v):
        raise TailEvaluationError(x, f"non-finite value {v!r}")
    return v


def _tail_and_scale(F, zd: TerminationDerivative, b: float, f=None, tol: float = SEGMENT_TOL):
    terms = []
    scale = 0.0
    for atom in zd.atoms:
        x = atom.position + b
        Fx = _safe(F, x)
        terms.append(atom.weight * Fx)
        mag = abs(Fx)
        if f is not None:
            # argument rounding of x moves F by about |x f(x)| eps
            mag += abs(x * float(f(x)))
        scale = max(scale, abs(atom.weight) * mag)
    for seg in zd.segments:
        coeffs = seg.coefficients
        lo = seg.lo

        def integrand(x, coeffs=coeffs, lo=lo):
            return P.polyval(x - lo, coeffs) * _safe(F, x + b)

        terms.append(adaptive_simpson(integrand, seg.lo, seg.hi, tol=tol))
        weight = abs(seg.mass()) + max(abs(k) for k in coeffs) * seg.width
        for x in (seg.lo, 0.5 * (seg.lo + seg.hi), seg.hi):
            mag = abs(_safe(F, x + b))
            if f is not None:
                mag += abs((x + b) * float(f(x + b)))
            scale = max(scale, weight * mag)
    return math.fsum(terms), scale


def tail(F: Callable, zd: TerminationDerivative, b: float, tol: float = SEGMENT_TOL) -> float:
    """``int_0^c F(x + b) z'(x) dx``: atoms exactly, segments by adaptive Simpson."""
    return _tail_and_scale(F, zd, b, tol=tol)[0]


def sample_tail(F, zd, grid, f=None, workers: int = 1) -> tuple[TailSample, ...]:
    """Tail samples over ``grid``; ``workers > 1`` evaluates them in threads."""

    def one(b):
        v, s = _tail_and_scale(F, zd, float(b), f=f)
        return TailSample(float(b), v, s)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return tuple(pool.map(one, grid))
    return tuple(one(b) for b in grid)


# ---------------------------------------------------------------------------
# limit detection


def detect_limit(samples: Sequence[TailSample], policy: LimitPolicy) -> LimitReport:
    """Classify tail samples ordered by increasing ``b``.

    converged
        the last ``window`` values spread by at most ``tol`` plus the
        rounding floor of their largest cancelling term; the limit is their
        mean.
    drifting
        a least-squares line over the last window rises by more than
        ``tol`` per step and dominates the residual, or the spread of the
        last window is more than 1.5 times that of the first (growing
        envelope).
    oscillating
        anything else.
    """
    samples = tuple(samples)
    n = len(samples)
    if n < policy.window:
        raise ValueError(f"need at least {policy.window} samples, got {n}")
    b = np.array([s.b for s in samples])
    v = np.array([s.value for s in samples])
    last_b, last_v = b[-policy.window:], v[-policy.window:]
    spread = float(last_v.max() - last_v.min())
    floor = NOISE_ULPS * EPS * max(s.scale for s in samples[-policy.window:])

    cesaro_limit = cesaro_spread = None
    if policy.averaging:
        running = np.cumsum(v) / np.arange(1, n + 1)
        cesaro_limit = float(running[-1])
        tail_means = running[-policy.window:]
        cesaro_spread = float(tail_means.max() - tail_means.min())

    slope, intercept = 0.0, float(last_v.mean())
    if last_b.max() > last_b.min():
        slope, intercept = np.polyfit(last_b, last_v, 1)
        slope = float(slope)

    common = dict(
        samples=samples,
        spread=spread,
        tol=policy.tol,
        noise_floor=floor,
        slope=slope,
        cesaro_limit=cesaro_limit,
        cesaro_spread=cesaro_spread,
    )
    if spread <= policy.tol + floor:
        return LimitReport(limit=float(last_v.mean()), status=CONVERGED, **common)

    step = float(np.median(np.diff(b))) if n > 1 else policy.b_step
    resid = last_v - (slope * last_b + intercept)
    rise = abs(slope) * float(last_b.max() - last_b.min())
    trending = abs(slope) * step > policy.tol and rise > 2.0 * float(resid.max() - resid.min())
    growing = False
    if n >= 2 * policy.window:
        first = v[: policy.window]
        growing = spread > 1.5 * float(first.max() - first.min()) + policy.tol
    status = DRIFTING if (trending or growing) else OSCILLATING
    return LimitReport(limit=None, status=status, **common)


# ---------------------------------------------------------------------------
# evaluation


def evaluate(
    g: Integrand,
    a: float,
    zd: TerminationDerivative,
    policy: LimitPolicy | None = None,
    workers: int = 1,
) -> IntegralResult:
    """Integral of ``g`` from ``a`` to infinity with respect to ``zd``.

    Non-convergence is not an error: the result then has ``value = None``
    and the status of the limit report.
    """
    report = validate(zd)
    if not report.passed:
        raise ValueError("invalid termination derivative: " + "; ".join(report.messages))
    if policy is None:
        policy = LimitPolicy.for_integrand(g)
    if g.period_hint:
        policy.check_aliasing(g.period_hint)

    grid = policy.grid()
    if g.F is not None:
        F = g.F
    else:
        F = numeric_antiderivative(g.f, base_point=a)
        if grid[0] < a:
            grid = grid + (a - grid[0])
    F_a = _safe(F, a)
    samples = sample_tail(F, zd, grid, f=g.f, workers=workers)
    limit_report = detect_limit(samples, policy)
    value = None
    if limit_report.converged:
        value = -F_a - limit_report.limit
    return IntegralResult(
        value=value,
        a=a,
        limit_report=limit_report,
        termination_used=zd,
        f_label=g.label,
        F_at_a=F_a,
    )


@dataclass
class UniquenessReport:
    members: list[tuple[str, IntegralResult]]
    discrepancy: float | None
    tol: float
    nonconvergent: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        converged = [r for _, r in self.members if r.converged]
        return len(converged) >= 2 and self.discrepancy is not None and self.discrepancy <= self.tol

    @property
    def values(self) -> dict[str, float | None]:
        return {label: r.value for label, r in self.members}


def uniqueness_report(
    g: Integrand,
    a: float,
    zds: Sequence[TerminationDerivative],
    policy: LimitPolicy | None = None,
    labels: Sequence[str] | None = None,
) -> UniquenessReport:
    """Evaluate ``g`` under every ``zd`` and every pairwise combination.

    Passes when at least two members converge and all converged values
    agree within ``policy.tol``; non-convergent members are listed.
    """
    if len(zds) < 2:
        raise ValueError("uniqueness needs at least two termination derivatives")
    policy = policy or LimitPolicy.for_integrand(g)
    labels = list(labels) if labels is not None else [f"z{i}" for i in range(len(zds))]
    members = [(lab, evaluate(g, a, zd, policy)) for lab, zd in zip(labels, zds)]
    for i in range(len(zds)):
        for j in range(i + 1, len(zds)):
            members.append((f"combine({labels[i]},{labels[j]})", evaluate(g, a, combine(zds[i], zds[j]), policy)))
    values = [r.value for _, r in members if r.converged]
    discrepancy = (max(values) - min(values)) if values else None
    return UniquenessReport(
        members=members,
        discrepancy=discrepancy,
        tol=policy.tol,
        nonconvergent=[lab for lab, r in members if not r.converged],
    )


@dataclass
class LinearityReport:
    lhs: float | None
    rhs: float | None
    parts: tuple[IntegralResult, IntegralResult]
    combined: IntegralResult
    tol: float

    @property
    def difference(self) -> float | None:
        if self.lhs is None or self.rhs is None:
            return None
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.difference is not None and self.difference <= self.tol


def linearity_check(
    g1: Integrand,
    g2: Integrand,
    w1: float,
    w2: float,
    a: float,
    zd1: TerminationDerivative,
    zd2: TerminationDerivative,
    policy: LimitPolicy | None = None,
) -> LinearityReport:
    """Compare ``w1 Z[g1] + w2 Z[g2]`` with ``Z[w1 g1 + w2 g2]``.

    The right-hand side uses ``combine(zd1, zd2)``.
    """
    r1 = evaluate(g1, a, zd1, policy or LimitPolicy.for_integrand(g1))
    r2 = evaluate(g2, a, zd2, policy or LimitPolicy.for_integrand(g2))
    mixed = linear_combination(g1, g2, w1, w2)
    if policy is None:
        mixed_policy = LimitPolicy.for_integrand(mixed)
        if mixed.growth_rate == 0.0:
            # neither part's period governs the sum; keep the longer one
            periods = [g.period_hint for g in (g1, g2) if g.period_hint]
            if periods:
                mixed_policy = mixed_policy.replace(b_step=GOLDEN * max(1.0, *periods))
    else:
        mixed_policy = policy
    rc = evaluate(mixed, a, combine(zd1, zd2), mixed_policy)
    lhs = None
    if r1.converged and r2.converged:
        lhs = w1 * r1.value + w2 * r2.value
    tol = (policy or LimitPolicy()).tol
    return LinearityReport(lhs=lhs, rhs=rc.value, parts=(r1, r2), combined=rc, tol=tol)
