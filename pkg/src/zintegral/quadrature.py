"""Quadrature primitives shared by the evaluator, calculus and 2-D modules."""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when a quadrature panel fails to reach its tolerance."""

    def __init__(self, message: str, panel: tuple[float, float]):
        super().__init__(f"{message} on panel [{panel[0]!r}, {panel[1]!r}]")
        self.panel = panel


def adaptive_simpson(
    func: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 50,
) -> float:
    """Integrate ``func`` over ``[a, b]`` with adaptive Simpson refinement.

    Each accepted sub-panel carries the Richardson correction
    ``(S_right - S_whole) / 15``. The tolerance is absolute and is split
    evenly between children on every bisection.

    Raises
    ------
    QuadratureError
        If a panel is still unresolved at ``max_depth``.
    """
    if b == a:
        return 0.0
    fa, fm, fb = func(a), func(0.5 * (a + b)), func(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    total = 0.0
    # explicit stack: (lo, hi, f(lo), f(mid), f(hi), simpson estimate, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = func(lm), func(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - est
        # depth >= 2 guards against a symmetric integrand fooling the first test
        if depth >= 2 and abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError("adaptive Simpson did not converge", (lo, hi))
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return float(total)


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``n``-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def fixed_gauss(func, a: float, b: float, n: int = 32, panels: int = 1) -> float:
    """Composite ``n``-point Gauss-Legendre rule with ``panels`` equal panels.

    ``func`` must accept a numpy array of abscissae.
    """
    if b == a:
        return 0.0
    x, w = gauss_legendre(n)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    pts = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return float(np.dot(wts, np.asarray(func(pts), dtype=float)))


def composite_gauss(
    func,
    a: float,
    b: float,
    tol: float = 1e-12,
    n: int = 16,
    start_panels: int = 8,
    max_panels: int = 1 << 16,
) -> float:
    """Composite Gauss-Legendre rule, doubling the panel count until stable.

    Stops when two successive estimates agree within ``tol * max(1, |I|)``.
    ``func`` must be vectorized.
    """
    panels = start_panels
    prev = fixed_gauss(func, a, b, n, panels)
    while panels < max_panels:
        panels *= 2
        cur = fixed_gauss(func, a, b, n, panels)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError("composite Gauss-Legendre did not stabilise", (a, b))
