"""Termination functions, represented through their derivatives.

A termination function ``z`` equals 1 for ``x <= 0``, 0 for ``x >= c`` and is
finite everywhere; its derivative ``z'`` carries total mass -1 on ``[0, c]``.
Here ``z'`` is stored as a finite set of point atoms (Dirac impulses) plus a
piecewise-polynomial density, a class that is closed under convolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "Atom",
    "DensitySegment",
    "TerminationDerivative",
    "TerminationError",
    "TerminationFunction",
    "ValidationReport",
    "make_atoms",
    "make_step",
    "make_pair",
    "make_triple",
    "make_box",
    "make_exp_pair",
    "validate",
    "combine",
    "combine_many",
    "reconstruct_z",
    "rescale",
    "to_dict",
    "from_dict",
    "to_json",
    "from_json",
]

EXACT_MASS_TOL = 1e-12
COMBINED_MASS_TOL = 1e-9
# relative distance under which two positions/breakpoints are the same point
_SNAP = 1e-12


class TerminationError(ValueError):
    """Raised for an invalid termination derivative."""


@dataclass(frozen=True)
class Atom:
    """Dirac impulse of signed mass ``weight`` at ``position``."""

    position: float
    weight: float


@dataclass(frozen=True)
class DensitySegment:
    """Polynomial density on ``[lo, hi]``.

    ``coefficients[k]`` multiplies ``(x - lo)**k``.
    """

    lo: float
    hi: float
    coefficients: tuple[float, ...]

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def mass(self) -> float:
        anti = P.polyint(self.coefficients)
        return float(P.polyval(self.width, anti))

    def __call__(self, x):
        """Density at global ``x``; half-open ``[lo, hi)`` so abutting segments do not double count."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x < self.hi)
        return np.where(inside, P.polyval(x - self.lo, self.coefficients), 0.0)


@dataclass(frozen=True)
class TerminationDerivative:
    atoms: tuple[Atom, ...] = ()
    segments: tuple[DensitySegment, ...] = ()
    support: float = 1.0

    def mass(self) -> float:
        return math.fsum([a.weight for a in self.atoms] + [s.mass() for s in self.segments])

    def density(self, x):
        """Sum of the segment densities at ``x`` (atoms excluded)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for seg in self.segments:
            out = out + seg(x)
        return out

    def is_atomic(self) -> bool:
        return not self.segments


@dataclass
class ValidationReport:
    mass: float
    support: float
    conditions: dict[str, bool] = field(default_factory=dict)
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    def __bool__(self) -> bool:
        return self.passed


# ---------------------------------------------------------------------------
# constructors


def _checked(zd: TerminationDerivative, tol: float = EXACT_MASS_TOL) -> TerminationDerivative:
    report = validate(zd, tol=tol)
    if not report.passed:
        raise TerminationError("; ".join(report.messages))
    return zd


def make_atoms(entries: Iterable[tuple[float, float]], support: float | None = None) -> TerminationDerivative:
    """Termination derivative made of point atoms ``(position, weight)``.

    The support defaults to the largest position; a lone atom at 0 gets the
    nominal support 1.
    """
    entries = [(float(p), float(w)) for p, w in entries]
    if not entries:
        raise TerminationError("at least one atom is required")
    if any(p < 0 for p, _ in entries):
        raise TerminationError("atom positions must be >= 0")
    top = max(p for p, _ in entries)
    if support is None:
        support = top if top > 0 else 1.0
    elif support < top:
        raise TerminationError(f"support {support} is smaller than the largest position {top}")
    atoms = _merge_atoms(Atom(p, w) for p, w in entries)
    return _checked(TerminationDerivative(atoms=atoms, support=float(support)))


def make_step() -> TerminationDerivative:
    """Sharp cutoff; reproduces the conventional improper integral."""
    return make_atoms([(0.0, -1.0)])


def make_pair(spacing: float) -> TerminationDerivative:
    """Two half-weight atoms ``spacing`` apart."""
    if spacing <= 0:
        raise TerminationError("spacing must be positive")
    return make_atoms([(0.0, -0.5), (spacing, -0.5)])


def make_triple(spacing: float) -> TerminationDerivative:
    """Binomial weights 1/4, 1/2, 1/4; equals the pair combined with itself."""
    if spacing <= 0:
        raise TerminationError("spacing must be positive")
    return make_atoms([(0.0, -0.25), (spacing, -0.5), (2.0 * spacing, -0.25)])


def make_box(width: float) -> TerminationDerivative:
    """Uniform density ``-1/width`` on ``[0, width]``."""
    if not width > 0:
        raise TerminationError("box width must be positive")
    seg = DensitySegment(0.0, float(width), (-1.0 / width,))
    return _checked(TerminationDerivative(segments=(seg,), support=float(width)))


def make_exp_pair(spacing: float, beta: float) -> TerminationDerivative:
    """Pair weighted to cancel ``exp(beta x)`` growth over one half period."""
    if spacing <= 0:
        raise TerminationError("spacing must be positive")
    # logistic form stays finite for large |beta * spacing|
    t = beta * spacing
    w_far = -0.5 * (1.0 - math.tanh(0.5 * t))  # -1 / (1 + e^t)
    w_near = -0.5 * (1.0 + math.tanh(0.5 * t))  # -e^t / (1 + e^t)
    return make_atoms([(0.0, w_near), (spacing, w_far)])


# ---------------------------------------------------------------------------
# validation


def validate(zd: TerminationDerivative, tol: float = COMBINED_MASS_TOL) -> ValidationReport:
    """Check finiteness, support and unit negative mass of ``zd``.

    Never raises; failures are listed in the report.
    """
    c = zd.support
    finite = math.isfinite(c) and all(
        math.isfinite(a.position) and math.isfinite(a.weight) for a in zd.atoms
    ) and all(
        math.isfinite(s.lo) and math.isfinite(s.hi) and all(math.isfinite(k) for k in s.coefficients)
        for s in zd.segments
    )
    mass = zd.mass() if finite else float("nan")
    report = ValidationReport(mass=mass, support=c)
    msgs = report.messages

    report.conditions["nonempty"] = bool(zd.atoms or zd.segments)
    if not report.conditions["nonempty"]:
        msgs.append("no atoms and no segments (mass 0)")
    report.conditions["finite"] = finite
    if not finite:
        msgs.append("non-finite position, weight, coefficient or support")
    report.conditions["positive_support"] = bool(c > 0)
    if not c > 0:
        msgs.append(f"support must be positive, got {c}")

    slack = _SNAP * max(1.0, abs(c))
    left_ok = all(a.position >= 0 for a in zd.atoms) and all(s.lo >= 0 for s in zd.segments)
    right_ok = all(a.position <= c + slack for a in zd.atoms) and all(s.hi <= c + slack for s in zd.segments)
    report.conditions["starts_at_zero"] = left_ok
    if not left_ok:
        msgs.append("mass located at negative x")
    report.conditions["ends_by_support"] = right_ok
    if not right_ok:
        msgs.append(f"support violation: mass located beyond c = {c}")

    ordered = all(s.lo < s.hi for s in zd.segments) and all(
        s1.hi <= s2.lo + slack for s1, s2 in zip(zd.segments, zd.segments[1:])
    )
    report.conditions["segments_ordered"] = ordered
    if not ordered:
        msgs.append("segments must be non-empty, sorted and non-overlapping")

    mass_ok = finite and abs(mass + 1.0) <= tol
    report.conditions["unit_mass"] = mass_ok
    if not mass_ok:
        msgs.append(f"mass {mass!r} differs from -1 by more than {tol:g}")
    return report


# ---------------------------------------------------------------------------
# combination


def _same_point(x: float, y: float) -> bool:
    return abs(x - y) <= _SNAP * max(1.0, abs(x), abs(y))


def _merge_atoms(atoms: Iterable[Atom]) -> tuple[Atom, ...]:
    merged: list[list[float]] = []
    for atom in sorted(atoms, key=lambda a: a.position):
        if merged and _same_point(merged[-1][0], atom.position):
            merged[-1][1] += atom.weight
        else:
            merged.append([atom.position, atom.weight])
    return tuple(Atom(p, w) for p, w in merged if w != 0.0)


def _trim(coeffs) -> tuple[float, ...]:
    c = [float(v) for v in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c)


def _shift_poly(coeffs, d: float) -> np.ndarray:
    """Coefficients of ``p(s + d)`` in ``s``."""
    out = np.zeros(1)
    power = np.ones(1)
    for k, ck in enumerate(coeffs):
        if k:
            power = P.polymul(power, [d, 1.0])
        out = P.polyadd(out, ck * power)
    return out


def _normalize_segments(segments: Sequence[DensitySegment]) -> tuple[DensitySegment, ...]:
    """Split overlapping segments at every breakpoint and sum the pieces."""
    if not segments:
        return ()
    points: list[float] = []
    for x in sorted(v for s in segments for v in (s.lo, s.hi)):
        if not points or not _same_point(points[-1], x):
            points.append(x)
    out: list[DensitySegment] = []
    for lo, hi in zip(points, points[1:]):
        acc = np.zeros(1)
        for s in segments:
            if s.lo <= lo + _SNAP * max(1.0, abs(lo)) and s.hi >= hi - _SNAP * max(1.0, abs(hi)):
                acc = P.polyadd(acc, _shift_poly(s.coefficients, lo - s.lo))
        coeffs = _trim(acc)
        if any(coeffs):
            out.append(DensitySegment(lo, hi, coeffs))
    return tuple(out)


def _convolve_polys(p, len_p: float, q, len_q: float) -> list[DensitySegment]:
    """Exact convolution of ``p`` on ``[0, len_p]`` with ``q`` on ``[0, len_q]``.

    Both polynomials are in local coordinates. Returns pieces on
    ``[0, len_p + len_q]`` in local coordinates of the result.
    """
    X = np.polynomial.Polynomial
    x = X([0.0, 1.0])
    # p(x - y) = sum_k p_k sum_j C(k, j) x^(k-j) (-y)^j
    # R_j = antiderivative of y^j q(y)
    anti = []
    for j in range(len(p)):
        yj_q = P.polymul(np.eye(1, j + 1, j).ravel(), q)
        anti.append(X(P.polyint(yj_q)))

    def piece(lower, upper) -> X:
        total = X([0.0])
        for k, pk in enumerate(p):
            if pk == 0.0:
                continue
            for j in range(k + 1):
                coef = pk * math.comb(k, j) * (-1.0) ** j
                total = total + coef * x ** (k - j) * (anti[j](upper) - anti[j](lower))
        return total

    const = lambda v: X([float(v)])
    short, long_ = sorted((len_p, len_q))
    pieces = [(0.0, short, piece(const(0.0), x))]
    if len_p <= len_q:
        middle = piece(x - len_p, x)
    else:
        middle = piece(const(0.0), const(len_q))
    if long_ > short:
        pieces.append((short, long_, middle))
    pieces.append((long_, len_p + len_q, piece(x - len_p, const(len_q))))

    out = []
    for lo, hi, poly in pieces:
        if hi > lo:
            coeffs = _trim(_shift_poly(poly.coef, lo))
            out.append(DensitySegment(lo, hi, coeffs))
    return out


def combine(z1: TerminationDerivative, z2: TerminationDerivative) -> TerminationDerivative:
    """Combined termination derivative ``-(z1' * z2')`` (convolution).

    Support is ``c1 + c2`` and the mass stays -1.
    """
    for z in (z1, z2):
        report = validate(z)
        if not report.passed:
            raise TerminationError("cannot combine invalid input: " + "; ".join(report.messages))

    atoms = [Atom(a.position + b.position, -a.weight * b.weight) for a in z1.atoms for b in z2.atoms]
    segments: list[DensitySegment] = []
    for atoms_side, segs_side in ((z1.atoms, z2.segments), (z2.atoms, z1.segments)):
        for a in atoms_side:
            for s in segs_side:
                segments.append(
                    DensitySegment(
                        s.lo + a.position,
                        s.hi + a.position,
                        tuple(-a.weight * k for k in s.coefficients),
                    )
                )
    for s1 in z1.segments:
        for s2 in z2.segments:
            offset = s1.lo + s2.lo
            for piece in _convolve_polys(s1.coefficients, s1.width, s2.coefficients, s2.width):
                segments.append(
                    DensitySegment(
                        piece.lo + offset,
                        piece.hi + offset,
                        tuple(-k for k in piece.coefficients),
                    )
                )

    result = TerminationDerivative(
        atoms=_merge_atoms(atoms),
        segments=_normalize_segments(segments),
        support=z1.support + z2.support,
    )
    return _checked(result, tol=COMBINED_MASS_TOL)


def combine_many(*zds: TerminationDerivative) -> TerminationDerivative:
    """Left fold of :func:`combine`."""
    if not zds:
        raise TerminationError("nothing to combine")
    out = zds[0]
    for z in zds[1:]:
        out = combine(out, z)
    return out


def rescale(zd: TerminationDerivative, s: float) -> TerminationDerivative:
    """Derivative of ``x -> zeta(s x)`` where ``zd`` is ``zeta'``.

    Positions shrink by ``s``; densities are scaled so the mass stays -1.
    """
    if not s > 0:
        raise TerminationError("scale factor must be positive")
    atoms = tuple(Atom(a.position / s, a.weight) for a in zd.atoms)
    # d/dx zeta(s x) = s zeta'(s x); local coordinate t maps to s t
    segments = tuple(
        DensitySegment(seg.lo / s, seg.hi / s, tuple(k * s ** (i + 1) for i, k in enumerate(seg.coefficients)))
        for seg in zd.segments
    )
    return TerminationDerivative(atoms=atoms, segments=segments, support=zd.support / s)


# ---------------------------------------------------------------------------
# reconstruction


def reconstruct_z(zd: TerminationDerivative, x):
    """Termination function ``z(x) = 1 + (mass of z' on (-inf, x])``.

    Atoms count fully at their own position, so an atom at 0 already acts
    at ``x = 0`` while ``z(0-) = 1``. Accepts scalars or arrays.
    """
    xa = np.asarray(x, dtype=float)
    z = np.ones_like(xa)
    for a in zd.atoms:
        z = z + np.where(xa >= a.position, a.weight, 0.0)
    for s in zd.segments:
        anti = P.polyint(s.coefficients)
        z = z + P.polyval(np.clip(xa, s.lo, s.hi) - s.lo, anti)
    return float(z) if np.ndim(x) == 0 else z


@dataclass(frozen=True)
class TerminationFunction:
    """``z`` itself, reconstructed from its derivative on demand."""

    derivative: TerminationDerivative

    @property
    def support(self) -> float:
        return self.derivative.support

    def __call__(self, x):
        return reconstruct_z(self.derivative, x)


# ---------------------------------------------------------------------------
# serialization


def to_dict(zd: TerminationDerivative) -> dict:
    return {
        "support": zd.support,
        "atoms": [{"pos": a.position, "w": a.weight} for a in zd.atoms],
        "segments": [{"lo": s.lo, "hi": s.hi, "coeffs": list(s.coefficients)} for s in zd.segments],
    }


def from_dict(data: dict) -> TerminationDerivative:
    """Inverse of :func:`to_dict`. The result is not validated."""
    try:
        atoms = tuple(Atom(float(a["pos"]), float(a["w"])) for a in data.get("atoms", []))
        segments = tuple(
            DensitySegment(float(s["lo"]), float(s["hi"]), tuple(float(k) for k in s["coeffs"]))
            for s in data.get("segments", [])
        )
        support = float(data["support"])
    except (KeyError, TypeError) as exc:
        raise TerminationError(f"malformed termination document: {exc}") from exc
    return TerminationDerivative(atoms=atoms, segments=segments, support=support)


def to_json(zd: TerminationDerivative, **kwargs) -> str:
    return json.dumps(to_dict(zd), **kwargs)


def from_json(text: str) -> TerminationDerivative:
    return from_dict(json.loads(text))
