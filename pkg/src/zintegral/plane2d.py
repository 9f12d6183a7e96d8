"""Two-dimensional prototype: kernels, growing regions and smoothed indicators.

A kernel ``z'(r)`` of mass -1 (point atoms plus uniform disks) smooths the
indicator of a growing region ``Gamma(r, b)`` into

    w(r, b) = -(z' * Gamma)(r, b),

and the value of the integral of ``f`` over the plane is the limit of
``int int f(r) w(r, b) d^2 r`` as ``b -> inf``. It only counts when several
region families agree.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .evaluator import CONVERGED, GOLDEN, LimitPolicy, LimitReport, TailSample, detect_limit
from .quadrature import gauss_legendre

__all__ = [
    "KernelAtom",
    "KernelDisk",
    "Kernel2D",
    "KernelError",
    "CurveFamily",
    "QuadConfig",
    "Radial2D",
    "Result2D",
    "point_kernel",
    "pair_kernel",
    "disk_kernel",
    "annulus_kernel",
    "circle_family",
    "square_family",
    "offset_circle_family",
    "combine2d",
    "w_field",
    "tail2d",
    "evaluate2d",
    "default_policy2d",
    "lens_area",
    "disk_rect_area",
    "linear_combination2d",
    "gaussian2d",
    "sin_r2",
    "constant2d",
    "kernel_to_dict",
    "kernel_from_dict",
    "family_to_dict",
    "family_from_dict",
    "KERNEL_SCHEMA",
    "FAMILY_SCHEMA",
]

MASS_TOL = 1e-10
FAMILY_DISAGREEMENT = "family_disagreement"

Vec = tuple[float, float]


class KernelError(ValueError):
    """Invalid kernel or unsupported kernel operation."""


@dataclass(frozen=True)
class KernelAtom:
    offset: Vec
    weight: float


@dataclass(frozen=True)
class KernelDisk:
    """Uniform ``density`` on the disk of ``radius`` about ``center``."""

    center: Vec
    radius: float
    density: float

    @property
    def mass(self) -> float:
        return self.density * math.pi * self.radius**2


@dataclass(frozen=True)
class Kernel2D:
    atoms: tuple[KernelAtom, ...] = ()
    disks: tuple[KernelDisk, ...] = ()
    support_radius: float = 0.0

    def mass(self) -> float:
        return math.fsum([a.weight for a in self.atoms] + [d.mass for d in self.disks])

    def problems(self) -> list[str]:
        out = []
        if not (self.atoms or self.disks):
            out.append("kernel is empty")
        if abs(self.mass() + 1.0) > MASS_TOL:
            out.append(f"mass {self.mass()!r} differs from -1")
        slack = 1e-12 * max(1.0, self.support_radius)
        for a in self.atoms:
            if math.hypot(*a.offset) > self.support_radius + slack:
                out.append(f"atom at {a.offset} lies outside the support radius")
        for d in self.disks:
            if not d.radius > 0:
                out.append("disk radius must be positive")
            elif math.hypot(*d.center) + d.radius > self.support_radius + slack:
                out.append(f"disk at {d.center} lies outside the support radius")
        return out

    def validate(self) -> "Kernel2D":
        msgs = self.problems()
        if msgs:
            raise KernelError("; ".join(msgs))
        return self


def point_kernel() -> Kernel2D:
    """Single atom of weight -1 at the origin: ``w`` is the indicator itself."""
    return Kernel2D(atoms=(KernelAtom((0.0, 0.0), -1.0),), support_radius=0.0)


def pair_kernel(offset: Vec) -> Kernel2D:
    ox, oy = float(offset[0]), float(offset[1])
    atoms = (KernelAtom((0.0, 0.0), -0.5), KernelAtom((ox, oy), -0.5))
    return Kernel2D(atoms=atoms, support_radius=math.hypot(ox, oy)).validate()


def disk_kernel(radius: float, center: Vec = (0.0, 0.0)) -> Kernel2D:
    if not radius > 0:
        raise KernelError("disk radius must be positive")
    c = (float(center[0]), float(center[1]))
    disk = KernelDisk(c, float(radius), -1.0 / (math.pi * radius**2))
    return Kernel2D(disks=(disk,), support_radius=math.hypot(*c) + radius).validate()


def annulus_kernel(inner: float, outer: float) -> Kernel2D:
    """Uniform annulus, stored as a disk minus a smaller disk."""
    if not 0 < inner < outer:
        raise KernelError("need 0 < inner < outer")
    d = -1.0 / (math.pi * (outer**2 - inner**2))
    disks = (KernelDisk((0.0, 0.0), float(outer), d), KernelDisk((0.0, 0.0), float(inner), -d))
    return Kernel2D(disks=disks, support_radius=float(outer)).validate()


def combine2d(k1: Kernel2D, k2: Kernel2D) -> Kernel2D:
    """``-(k1 * k2)``; atom-atom and atom-disk pairs only."""
    for k in (k1, k2):
        k.validate()
    if k1.disks and k2.disks:
        raise KernelError("disk x disk convolution is not representable with atoms and disks")
    merged: dict[Vec, float] = {}
    for a in k1.atoms:
        for b in k2.atoms:
            key = (a.offset[0] + b.offset[0], a.offset[1] + b.offset[1])
            merged[key] = merged.get(key, 0.0) - a.weight * b.weight
    atoms = tuple(KernelAtom(p, w) for p, w in merged.items() if w != 0.0)
    disks = []
    for atoms_k, disks_k in ((k1.atoms, k2.disks), (k2.atoms, k1.disks)):
        for a in atoms_k:
            for d in disks_k:
                c = (d.center[0] + a.offset[0], d.center[1] + a.offset[1])
                disks.append(KernelDisk(c, d.radius, -a.weight * d.density))
    return Kernel2D(atoms=atoms, disks=tuple(disks), support_radius=k1.support_radius + k2.support_radius)


# ---------------------------------------------------------------------------
# curve families

FAMILY_KINDS = ("circle", "square", "offset_circle")


@dataclass(frozen=True)
class CurveFamily:
    """Growing region: a disk of radius ``scale*b`` or a square of half-side ``scale*b``.

    ``offset`` moves the centre and is only used by ``offset_circle``.
    """

    kind: str
    offset: Vec = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind != "offset_circle" and tuple(self.offset) != (0.0, 0.0):
            raise ValueError("only offset_circle takes an offset")

    @property
    def name(self) -> str:
        if self.kind == "offset_circle":
            return f"offset_circle({self.offset[0]:g},{self.offset[1]:g})"
        return self.kind

    def size(self, b: float) -> float:
        return self.scale * b

    def contains(self, x, y, b: float):
        """1 inside or on the boundary, 0 outside."""
        x = np.asarray(x, dtype=float) - self.offset[0]
        y = np.asarray(y, dtype=float) - self.offset[1]
        R = self.size(b)
        if self.kind == "square":
            inside = (np.abs(x) <= R) & (np.abs(y) <= R)
        else:
            inside = x * x + y * y <= R * R
        return inside.astype(float)

    def inscribed_radius(self, b: float) -> float:
        """Radius of the largest origin-centred disk inside the region."""
        return self.size(b) - math.hypot(*self.offset)

    def outer_radius(self, b: float) -> float:
        """Radius of the smallest origin-centred disk containing the region."""
        R = self.size(b)
        return (R * math.sqrt(2.0) if self.kind == "square" else R) + math.hypot(*self.offset)


def circle_family(scale: float = 1.0) -> CurveFamily:
    return CurveFamily("circle", scale=scale)


def square_family(scale: float = 1.0) -> CurveFamily:
    return CurveFamily("square", scale=scale)


def offset_circle_family(dx: float, dy: float = 0.0, scale: float = 1.0) -> CurveFamily:
    return CurveFamily("offset_circle", offset=(float(dx), float(dy)), scale=scale)


# ---------------------------------------------------------------------------
# areas


def lens_area(d, r1: float, r2: float):
    """Area of the intersection of two disks of radii ``r1``, ``r2`` whose centres are ``d`` apart."""
    d = np.asarray(d, dtype=float)
    small = math.pi * min(r1, r2) ** 2
    dd = np.where(d > 0, d, 1.0)
    c1 = np.clip((dd * dd + r1 * r1 - r2 * r2) / (2 * dd * r1), -1.0, 1.0)
    c2 = np.clip((dd * dd + r2 * r2 - r1 * r1) / (2 * dd * r2), -1.0, 1.0)
    k = (-dd + r1 + r2) * (dd + r1 - r2) * (dd - r1 + r2) * (dd + r1 + r2)
    partial = r1 * r1 * np.arccos(c1) + r2 * r2 * np.arccos(c2) - 0.5 * np.sqrt(np.maximum(k, 0.0))
    out = np.where(d >= r1 + r2, 0.0, np.where(d <= abs(r1 - r2), small, partial))
    return out if out.ndim else float(out)


def _chord_integral(t, R):
    # int_0^t sqrt(R^2 - s^2) ds
    t = np.clip(t, -R, R)
    return 0.5 * (t * np.sqrt(np.maximum(R * R - t * t, 0.0)) + R * R * np.arcsin(t / R))


def _quadrant(x, y, R):
    """Area of the disk ``|p| <= R`` with ``p_x <= x`` and ``p_y <= y``."""
    x = np.clip(np.asarray(x, dtype=float), -R, R)
    y = np.asarray(y, dtype=float)
    yc = np.clip(y, -R, R)
    t0 = np.sqrt(np.maximum(R * R - yc * yc, 0.0))
    A = lambda u, v: _chord_integral(v, R) - _chord_integral(u, R)  # noqa: E731
    c1 = np.clip(x, -R, -t0)
    c2 = np.clip(x, -t0, t0)
    c3 = np.clip(x, t0, R)
    middle = yc * (c2 + t0) + A(-t0, c2)
    outer = 2.0 * A(-R, c1) + 2.0 * A(t0, c3)
    return np.where(yc >= 0, middle + outer, middle)


def disk_rect_area(px, py, radius: float, x0: float, x1: float, y0: float, y1: float):
    """Area of the disk of ``radius`` about ``(px, py)`` inside ``[x0, x1] x [y0, y1]``."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    X0, X1, Y0, Y1 = x0 - px, x1 - px, y0 - py, y1 - py
    Q = lambda u, v: _quadrant(u, v, radius)  # noqa: E731
    out = Q(X1, Y1) - Q(X0, Y1) - Q(X1, Y0) + Q(X0, Y0)
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def _region_disk_area(fam: CurveFamily, b: float, px, py, radius: float):
    R = fam.size(b)
    if fam.kind == "square":
        return disk_rect_area(px, py, radius, -R, R, -R, R)
    d = np.hypot(np.asarray(px) - fam.offset[0], np.asarray(py) - fam.offset[1])
    return lens_area(d, radius, R)


def w_field(k: Kernel2D, fam: CurveFamily, b: float, r):
    """Smoothed indicator ``w(r, b)``; ``r`` is a 2-vector or an array of shape ``(..., 2)``."""
    r = np.asarray(r, dtype=float)
    x, y = r[..., 0], r[..., 1]
    out = np.zeros_like(x)
    for a in k.atoms:
        out = out - a.weight * fam.contains(x - a.offset[0], y - a.offset[1], b)
    for d in k.disks:
        out = out - d.density * _region_disk_area(fam, b, x - d.center[0], y - d.center[1], d.radius)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# integrands


class Radial2D:
    """``f(x, y) = profile(sqrt(x^2 + y^2))``; enables the 1-D radial path."""

    def __init__(self, profile: Callable, label: str = "radial"):
        self.profile = profile
        self.label = label

    def __call__(self, x, y):
        return self.profile(np.hypot(x, y))

    def __repr__(self) -> str:
        return f"Radial2D({self.label})"


def gaussian2d() -> Radial2D:
    return Radial2D(lambda rho: np.exp(-rho * rho), "exp(-(x^2+y^2))")


def sin_r2() -> Radial2D:
    return Radial2D(lambda rho: np.sin(rho * rho), "sin(x^2+y^2)")


def constant2d(value: float = 1.0) -> Radial2D:
    return Radial2D(lambda rho: np.full_like(np.asarray(rho, dtype=float), value), f"{value:g}")


def linear_combination2d(f, g, wf: float, wg: float):
    """``wf f + wg g``; radial when both parts are."""
    if isinstance(f, Radial2D) and isinstance(g, Radial2D):
        pf, pg = f.profile, g.profile
        return Radial2D(lambda rho: wf * pf(rho) + wg * pg(rho), f"{wf:g}*[{f.label}] + {wg:g}*[{g.label}]")
    return lambda x, y: wf * f(x, y) + wg * g(x, y)


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadConfig:
    """Node budget for :func:`tail2d`.

    ``panel`` is the target panel width for the ``n``-point Gauss rules,
    ``theta_points`` the trapezoid count around circles and ``max_points``
    caps tensor grids (the panel widens to fit).
    """

    n: int = 16
    panel: float = 0.25
    theta_points: int = 256
    max_points: int = 4_000_000


def _gl_nodes(lo: float, hi: float, cfg: QuadConfig, panels: int | None = None):
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    if panels is None:
        panels = max(1, math.ceil((hi - lo) / cfg.panel))
    x, w = gauss_legendre(cfg.n)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


def _ring_nodes(lo: float, hi: float, cfg: QuadConfig):
    # s = mid - half cos t turns sqrt-type endpoint kinks into smooth behaviour
    if hi <= lo:
        return np.zeros(0), np.zeros(0)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    t, wt = _gl_nodes(0.0, math.pi, cfg, panels=max(1, math.ceil(math.pi * half / cfg.panel)))
    return mid - half * np.cos(t), wt * half * np.sin(t)


def _angular_mean(f, cx: float, cy: float, s: np.ndarray, cfg: QuadConfig) -> np.ndarray:
    """``int_0^{2 pi} f(c + s e^{i theta}) d theta`` for each ``s``."""
    if isinstance(f, Radial2D) and cx == 0.0 and cy == 0.0:
        return 2.0 * math.pi * np.asarray(f.profile(s), dtype=float)
    nt = cfg.theta_points
    th = 2.0 * math.pi * np.arange(nt) / nt
    out = np.empty_like(s)
    # chunk to bound memory
    step = max(1, cfg.max_points // nt)
    for i in range(0, len(s), step):
        ss = s[i : i + step, None]
        out[i : i + step] = np.asarray(f(cx + ss * np.cos(th), cy + ss * np.sin(th)), dtype=float).mean(axis=1)
    return 2.0 * math.pi * out


def _polar_integral(f, cx: float, cy: float, profile_nodes, cfg: QuadConfig) -> float:
    s, ws = profile_nodes
    if s.size == 0:
        return 0.0
    return float(np.dot(ws * s, _angular_mean(f, cx, cy, s, cfg)))


def _tensor_nodes(lo: float, hi: float, breaks: Sequence[float], cfg: QuadConfig, per_dim: int):
    pts = sorted({lo, hi, *[p for p in breaks if lo < p < hi]})
    total = hi - lo
    xs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        panels = max(1, round(per_dim * (b - a) / total / cfg.n))
        x, w = _gl_nodes(a, b, cfg, panels=panels)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def _tensor_integral(weight_fn, lo: float, hi: float, breaks, cfg: QuadConfig, x0: float, y0: float) -> float:
    wanted = math.ceil((hi - lo) / cfg.panel) * cfg.n
    per_dim = max(cfg.n, min(wanted, int(math.isqrt(cfg.max_points))))
    x, wx = _tensor_nodes(lo, hi, breaks, cfg, per_dim)
    y, wy = _tensor_nodes(lo, hi, breaks, cfg, per_dim)
    total = 0.0
    step = max(1, cfg.max_points // max(1, len(y)))
    for i in range(0, len(x), step):
        X, Y = np.meshgrid(x[i : i + step] + x0, y + y0, indexing="ij")
        total += float(np.einsum("i,ij,j->", wx[i : i + step], weight_fn(X, Y), wy))
    return total


def _atom_region_integral(f, fam: CurveFamily, b: float, ux: float, uy: float, cfg: QuadConfig) -> float:
    """Integral of ``f`` over the region translated by ``(ux, uy)``."""
    R = fam.size(b)
    if fam.kind == "square":
        return _tensor_integral(lambda X, Y: f(X, Y), -R, R, (), cfg, ux, uy)
    cx, cy = ux + fam.offset[0], uy + fam.offset[1]
    return _polar_integral(f, cx, cy, _gl_nodes(0.0, R, cfg), cfg)


def _disk_region_integral(f, fam: CurveFamily, b: float, disk: KernelDisk, cfg: QuadConfig) -> float:
    """``int f(r) area(disk(r - c, rho) & region) d^2 r``."""
    R, rho = fam.size(b), disk.radius
    if fam.kind == "square":
        cx, cy = disk.center
        reach = R + rho
        breaks = (-R + rho, R - rho, -R - rho + 2 * rho, R + rho - 2 * rho) if R > rho else ()
        weight = lambda X, Y: f(X, Y) * disk_rect_area(X - cx, Y - cy, rho, -R, R, -R, R)  # noqa: E731
        return _tensor_integral(weight, -reach, reach, breaks, cfg, cx, cy)
    cx, cy = disk.center[0] + fam.offset[0], disk.center[1] + fam.offset[1]
    inner = abs(R - rho)
    full = math.pi * min(R, rho) ** 2
    core = full * _polar_integral(f, cx, cy, _gl_nodes(0.0, inner, cfg), cfg)
    s, ws = _ring_nodes(inner, R + rho, cfg)
    ring = float(np.dot(ws * s * lens_area(s, rho, R), _angular_mean(f, cx, cy, s, cfg))) if s.size else 0.0
    return core + ring


def _tail_parts(f, k: Kernel2D, fam: CurveFamily, b: float, cfg: QuadConfig) -> list[float]:
    parts = []
    for a in k.atoms:
        parts.append(-a.weight * _atom_region_integral(f, fam, b, a.offset[0], a.offset[1], cfg))
    for d in k.disks:
        parts.append(-d.density * _disk_region_integral(f, fam, b, d, cfg))
    return parts


def tail2d(f, k: Kernel2D, fam: CurveFamily, b: float, quad: QuadConfig | None = None) -> float:
    """``int int f(r) w(r, b) d^2 r`` via one region integral per kernel element."""
    return math.fsum(_tail_parts(f, k.validate(), fam, b, quad or QuadConfig()))


# ---------------------------------------------------------------------------
# evaluation


def default_policy2d(tol: float = 1e-6) -> LimitPolicy:
    """b from 20 to about 38.5 in 16 steps of ``2 * GOLDEN``."""
    return LimitPolicy(b_start=20.0, b_count=16, b_step=2.0 * GOLDEN, window=8, tol=tol)


@dataclass
class Result2D:
    value: float | None
    per_family: dict[str, LimitReport]
    agreement_spread: float | None
    status: str
    disagreeing: list[str] = field(default_factory=list)
    tol: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def families_tested(self) -> list[str]:
        return list(self.per_family)


def evaluate2d(
    f,
    k: Kernel2D,
    fams: Sequence[CurveFamily],
    policy: LimitPolicy | None = None,
    quad: QuadConfig | None = None,
    workers: int = 1,
) -> Result2D:
    """Limit of :func:`tail2d` for each family, and their agreement.

    Needs a circle and a second, different family. A value is reported only
    when every family converges and their limits agree within
    ``policy.tol``; otherwise the status names the failure.
    """
    kinds = {fam.kind for fam in fams}
    if len(fams) < 2 or "circle" not in kinds or not kinds & {"square", "offset_circle"}:
        raise ValueError("need at least a circle family and a square or offset_circle family")
    k.validate()
    policy = policy or default_policy2d()
    cfg = quad or QuadConfig()
    grid = policy.grid()

    def one(job):
        fam, b = job
        parts = _tail_parts(f, k, fam, float(b), cfg)
        return TailSample(float(b), math.fsum(parts), max(abs(p) for p in parts))

    jobs = [(fam, b) for fam in fams for b in grid]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(one, jobs))
    else:
        samples = [one(j) for j in jobs]

    per_family: dict[str, LimitReport] = {}
    for i, fam in enumerate(fams):
        per_family[fam.name] = detect_limit(samples[i * len(grid) : (i + 1) * len(grid)], policy)

    failed = [name for name, rep in per_family.items() if not rep.converged]
    if failed:
        status = per_family[failed[0]].status
        return Result2D(None, per_family, None, status, failed, policy.tol)
    limits = {name: rep.limit for name, rep in per_family.items()}
    spread = max(limits.values()) - min(limits.values())
    if spread > policy.tol:
        centre = float(np.median(list(limits.values())))
        worst = max(limits, key=lambda n: abs(limits[n] - centre))
        return Result2D(None, per_family, spread, FAMILY_DISAGREEMENT, [worst], policy.tol)
    value = float(np.mean(list(limits.values())))
    return Result2D(value, per_family, spread, CONVERGED, [], policy.tol)


# ---------------------------------------------------------------------------
# JSON

KERNEL_SCHEMA = {
    "type": "object",
    "required": ["support_radius"],
    "properties": {
        "support_radius": {"type": "number", "minimum": 0},
        "atoms": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [{"type": "array"}, {"type": "number"}], "minItems": 2, "maxItems": 2},
        },
        "disks": {
            "type": "array",
            "items": {"type": "array", "minItems": 3, "maxItems": 3},
        },
    },
}

FAMILY_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(FAMILY_KINDS)},
        "offset": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "scale": {"type": "number", "exclusiveMinimum": 0},
    },
}


def kernel_to_dict(k: Kernel2D) -> dict:
    return {
        "support_radius": k.support_radius,
        "atoms": [[list(a.offset), a.weight] for a in k.atoms],
        "disks": [[list(d.center), d.radius, d.density] for d in k.disks],
    }


def kernel_from_dict(data: dict) -> Kernel2D:
    try:
        atoms = tuple(KernelAtom((float(p[0]), float(p[1])), float(w)) for p, w in data.get("atoms", []))
        disks = tuple(KernelDisk((float(c[0]), float(c[1])), float(r), float(d)) for c, r, d in data.get("disks", []))
        k = Kernel2D(atoms=atoms, disks=disks, support_radius=float(data["support_radius"]))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise KernelError(f"malformed kernel: {exc}") from exc
    return k.validate()


def family_to_dict(fam: CurveFamily) -> dict:
    return {"kind": fam.kind, "offset": list(fam.offset), "scale": fam.scale}


def family_from_dict(data: dict) -> CurveFamily:
    off = data.get("offset", [0.0, 0.0])
    return CurveFamily(data["kind"], offset=(float(off[0]), float(off[1])), scale=float(data.get("scale", 1.0)))


def kernel_to_json(k: Kernel2D) -> str:
    return json.dumps(kernel_to_dict(k), sort_keys=True)
