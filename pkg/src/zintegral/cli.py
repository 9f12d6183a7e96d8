"""Command-line interface.

Exit status: 0 when the result converged or the check passed, 2 when the
computation ran but did not converge or the check failed, 1 on usage errors.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import sys
import time
from typing import Any, Sequence

from . import calculus, plane2d
from .evaluator import LimitPolicy, evaluate, linearity_check, uniqueness_report
from .integrand import IntegrandError, catalog_get, CATALOG
from .termination import (
    TerminationError,
    combine,
    from_dict,
    make_box,
    make_exp_pair,
    make_pair,
    make_step,
    make_triple,
    to_dict,
    validate,
)

SCHEMA_VERSION = 1
POLICY_ENV = "ZINTEGRAL_POLICY_FILE"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    """Bad command line; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# small expression and spec languages

_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


def parse_number(text: str) -> float:
    """Arithmetic on numbers and ``pi``, e.g. ``pi/2`` or ``2*pi``."""

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError

    try:
        value = ev(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise UsageError(f"not a finite number: {text!r}")
    return value


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _num_args(spec: str, body: str, count: int) -> list[float]:
    args = _split_top(body)
    if len(args) != count or not all(a.strip() for a in args):
        raise UsageError(f"termination {spec!r} expects {count} argument(s)")
    return [parse_number(a) for a in args]


def parse_termination(spec: str):
    """Parse ``step``, ``pair:<s>``, ``triple:<s>``, ``box:<w>``,
    ``exppair:<s>,<beta>``, ``combine(<spec>,<spec>)`` or inline JSON."""
    text = spec.strip()
    try:
        if text.startswith("{"):
            try:
                zd = from_dict(json.loads(text))
            except (json.JSONDecodeError, AttributeError) as exc:
                raise UsageError(f"bad termination JSON: {exc}") from None
            report = validate(zd)
            if not report.passed:
                raise UsageError(f"invalid termination {spec!r}: {'; '.join(report.messages)}")
            return zd
        if text.startswith("combine(") and text.endswith(")"):
            inner = _split_top(text[len("combine(") : -1])
            if len(inner) != 2:
                raise UsageError(f"combine needs two arguments: {spec!r}")
            return combine(parse_termination(inner[0]), parse_termination(inner[1]))
        name, _, body = text.partition(":")
        if name == "step" and not body:
            return make_step()
        makers = {"pair": (make_pair, 1), "triple": (make_triple, 1), "box": (make_box, 1), "exppair": (make_exp_pair, 2)}
        if name in makers:
            maker, n = makers[name]
            return maker(*_num_args(spec, body, n))
    except TerminationError as exc:
        raise UsageError(f"invalid termination {spec!r}: {exc}") from None
    raise UsageError(f"unknown termination spec {text!r}")


def parse_integrand_spec(spec: str):
    """``name`` or ``name:key=value,key=value``."""
    name, _, body = spec.partition(":")
    params = {}
    if body:
        for item in _split_top(body):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"expected key=value in {spec!r}, got {item!r}")
            params[key.strip()] = parse_number(val)
    return _catalog(name.strip(), params)


def _catalog(name: str, params: dict):
    try:
        return catalog_get(name, params)
    except IntegrandError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# policy


POLICY_FIELDS = ("b_start", "b_count", "b_step", "window", "tol", "averaging")


def _policy_overrides(args) -> dict:
    over: dict[str, Any] = {}
    path = getattr(args, "policy_file", None) or os.environ.get(POLICY_ENV)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read policy file {path!r}: {exc}") from None
        unknown = set(data) - set(POLICY_FIELDS)
        if unknown:
            raise UsageError(f"unknown policy field(s) in {path!r}: {', '.join(sorted(unknown))}")
        over.update(data)
    for key in POLICY_FIELDS:
        val = getattr(args, key, None)
        if val not in (None, False):
            over[key] = val
    return over


def _policy_for(g, args) -> LimitPolicy:
    try:
        return LimitPolicy.for_integrand(g, **_policy_overrides(args))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad policy: {exc}") from None


def _plain_policy(args, **defaults) -> LimitPolicy | None:
    over = _policy_overrides(args)
    if not over and not defaults:
        return None
    try:
        return LimitPolicy(**{**defaults, **over})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad policy: {exc}") from None


def _policy_dict(p: LimitPolicy | None) -> dict | None:
    if p is None:
        return None
    return {k: getattr(p, k) for k in POLICY_FIELDS}


# ---------------------------------------------------------------------------
# records


def _result_dict(res) -> dict:
    rep = res.limit_report
    return {
        "integrand": res.f_label,
        "a": res.a,
        "value": res.value,
        "status": res.status,
        "limit": rep.limit,
        "spread": rep.spread,
        "noise_floor": rep.noise_floor,
        "tol": rep.tol,
        "F_at_a": res.F_at_a,
        "cesaro_limit": rep.cesaro_limit,
        "termination": to_dict(res.termination_used),
    }


def _samples(rep) -> list[list[float]]:
    return [[s.b, s.value] for s in rep.samples]


def _integrand_params(args) -> dict:
    params = {}
    for key in ("alpha", "beta", "y", "sigma", "lam"):
        val = getattr(args, key, None)
        if val is not None:
            params["lambda" if key == "lam" else key] = val
    for item in args.param or []:
        key, eq, val = item.partition("=")
        if not eq:
            raise UsageError(f"--param expects key=value, got {item!r}")
        params[key.strip()] = parse_number(val)
    return params


def _get_integrand(args):
    name, _, body = args.integrand.partition(":")
    if body:
        g = parse_integrand_spec(args.integrand)
        extra = _integrand_params(args)
        if extra:
            g = _catalog(name, {**g.params, **extra})
        return g
    return _catalog(name, _integrand_params(args))


def cmd_eval(args) -> tuple[int, dict]:
    g = _get_integrand(args)
    zd = parse_termination(args.termination)
    policy = _policy_for(g, args)
    res = evaluate(g, args.a, zd, policy, workers=args.workers)
    record = {
        "config": {"integrand": args.integrand, "params": dict(g.params), "a": args.a, "termination": args.termination, "policy": _policy_dict(policy)},
        "status": res.status,
        "result": _result_dict(res),
        "samples": _samples(res.limit_report),
    }
    return (EXIT_OK if res.converged else EXIT_FAIL), record


def cmd_compare(args) -> tuple[int, dict]:
    g = _get_integrand(args)
    if len(args.termination) < 2:
        raise UsageError("compare needs at least two --termination options")
    zds = [parse_termination(t) for t in args.termination]
    policy = _policy_for(g, args)
    rep = uniqueness_report(g, args.a, zds, policy, labels=args.termination)
    record = {
        "config": {"integrand": args.integrand, "params": dict(g.params), "a": args.a, "terminations": args.termination, "policy": _policy_dict(policy)},
        "status": "pass" if rep.passed else "fail",
        "result": {
            "discrepancy": rep.discrepancy,
            "tol": rep.tol,
            "nonconvergent": rep.nonconvergent,
            "members": [{"termination": lab, "value": r.value, "status": r.status} for lab, r in rep.members],
        },
    }
    return (EXIT_OK if rep.passed else EXIT_FAIL), record


def cmd_linearity(args) -> tuple[int, dict]:
    g1, g2 = parse_integrand_spec(args.g1), parse_integrand_spec(args.g2)
    z1, z2 = parse_termination(args.z1), parse_termination(args.z2)
    policy = _plain_policy(args)
    rep = linearity_check(g1, g2, args.w1, args.w2, args.a, z1, z2, policy)
    record = {
        "config": {"g1": args.g1, "g2": args.g2, "w1": args.w1, "w2": args.w2, "a": args.a, "z1": args.z1, "z2": args.z2, "policy": _policy_dict(policy)},
        "status": "pass" if rep.passed else "fail",
        "result": {
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "difference": rep.difference,
            "tol": rep.tol,
            "part_status": [r.status for r in rep.parts],
            "combined_status": rep.combined.status,
        },
    }
    return (EXIT_OK if rep.passed else EXIT_FAIL), record


FAMILIES_1D = {
    "sin_xy": calculus.sin_xy_family,
    "cos_xy_over_x": calculus.cos_xy_over_x_family,
    "linear_in_y": calculus.linear_in_y_family,
    "y_independent": calculus.y_independent_family,
}


def _family(name: str):
    if name not in FAMILIES_1D:
        raise UsageError(f"unknown family {name!r}; choose from {', '.join(FAMILIES_1D)}")
    return FAMILIES_1D[name]()


def _nonconvergent(exc: calculus.NonConvergenceError, config: dict) -> tuple[int, dict]:
    return EXIT_FAIL, {"config": config, "status": exc.result.status, "result": {"error": str(exc)}}


def cmd_leibniz(args) -> tuple[int, dict]:
    p = _family(args.family)
    policy = _plain_policy(args) and p.policy(args.y).replace(**_policy_overrides(args))
    config = {"family": args.family, "a": args.a, "y": args.y, "h": args.h, "policy": _policy_dict(policy)}
    try:
        rep = calculus.leibniz_check(p, args.a, args.y, args.h, policy)
    except calculus.NonConvergenceError as exc:
        return _nonconvergent(exc, config)
    record = {
        "config": config,
        "status": "pass" if rep.passed else "fail",
        "result": {"lhs": rep.lhs, "rhs": rep.rhs, "difference": rep.difference, "tol": rep.tol},
    }
    return (EXIT_OK if rep.passed else EXIT_FAIL), record


def cmd_interchange(args) -> tuple[int, dict]:
    p = _family(args.family)
    if args.weight == "one":
        w = lambda y: 1.0  # noqa: E731
    else:
        centre = 0.5 * (args.y_lo + args.y_hi)
        w = lambda y: y - centre  # noqa: E731
    try:
        prob = calculus.WeightedInterchangeProblem(w=w, f=p, y_lo=args.y_lo, y_hi=args.y_hi, a=args.a, partition_count=args.nodes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    policy = _plain_policy(args)
    config = {"family": args.family, "weight": args.weight, "y_lo": args.y_lo, "y_hi": args.y_hi, "a": args.a, "nodes": args.nodes, "policy": _policy_dict(policy)}
    try:
        rep = calculus.interchange_check(prob, policy)
    except calculus.NonConvergenceError as exc:
        return _nonconvergent(exc, config)
    record = {
        "config": config,
        "status": "pass" if rep.passed else "fail",
        "result": {
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "lhs_doubled_nodes": rep.lhs_refined,
            "difference": rep.difference,
            "stable": rep.stable,
            "tol": rep.tol,
        },
    }
    return (EXIT_OK if rep.passed else EXIT_FAIL), record


def cmd_cov_linear(args) -> tuple[int, dict]:
    g = _get_integrand(args)
    zeta = parse_termination(args.termination)
    if not args.s > 0:
        raise UsageError("--s must be positive")
    policy = _policy_for(g, args)
    original = evaluate(g, args.a, zeta, policy)
    h, zd, a_new = calculus.linear_change_of_variable(g, zeta, args.r, args.s, alpha=args.a)
    transformed = evaluate(h, a_new, zd, LimitPolicy.for_integrand(h, **_policy_overrides(args)))
    ok = original.converged and transformed.converged and abs(original.value - transformed.value) <= policy.tol
    record = {
        "config": {"integrand": args.integrand, "params": dict(g.params), "a": args.a, "termination": args.termination, "r": args.r, "s": args.s},
        "status": "pass" if ok else "fail",
        "result": {
            "original": original.value,
            "transformed": transformed.value,
            "transformed_a": a_new,
            "transformed_termination": to_dict(zd),
            "difference": None if not ok else abs(original.value - transformed.value),
            "tol": policy.tol,
        },
    }
    return (EXIT_OK if ok else EXIT_FAIL), record


def cmd_cov_counterexample(args) -> tuple[int, dict]:
    if abs(args.alpha) > 1.0 / math.pi + 1e-15:
        raise UsageError("--alpha must satisfy |alpha| <= 1/pi")
    try:
        rep = calculus.substitution_counterexample(args.alpha, _plain_policy(args, b_step=2.0 * (math.sqrt(5) - 1) / 2))
    except calculus.NonConvergenceError as exc:
        return _nonconvergent(exc, {"alpha": args.alpha})
    ok = rep.consistent
    record = {
        "config": {"alpha": args.alpha},
        "status": "pass" if ok else "fail",
        "result": {
            "base": rep.base,
            "substituted": rep.substituted,
            "direct": rep.direct,
            "difference": rep.difference,
            "expected_difference": rep.expected_difference,
            "naive_difference": rep.naive_difference,
            "matches_naive": rep.matches_naive,
            "value_changed": rep.value_changed,
            "tol": rep.tol,
        },
    }
    return (EXIT_OK if ok else EXIT_FAIL), record


FUNCTIONS_2D = {"gaussian": plane2d.gaussian2d, "sin_r2": plane2d.sin_r2, "constant": plane2d.constant2d}


def parse_kernel(spec: str) -> plane2d.Kernel2D:
    text = spec.strip()
    try:
        if text.startswith("{"):
            return plane2d.kernel_from_dict(json.loads(text))
        name, _, body = text.partition(":")
        args = [parse_number(a) for a in _split_top(body)] if body else []
        if name == "point" and not args:
            return plane2d.point_kernel()
        if name == "pair" and len(args) == 2:
            return plane2d.pair_kernel((args[0], args[1]))
        if name == "disk" and len(args) == 1:
            return plane2d.disk_kernel(args[0])
        if name == "annulus" and len(args) == 2:
            return plane2d.annulus_kernel(args[0], args[1])
    except (plane2d.KernelError, json.JSONDecodeError) as exc:
        raise UsageError(f"invalid kernel {spec!r}: {exc}") from None
    raise UsageError(f"unknown kernel spec {text!r}")


def parse_family(spec: str) -> plane2d.CurveFamily:
    name, _, body = spec.strip().partition(":")
    if name == "circle" and not body:
        return plane2d.circle_family()
    if name == "square" and not body:
        return plane2d.square_family()
    if name == "offset_circle" and body:
        args = [parse_number(a) for a in _split_top(body)]
        if len(args) == 2:
            return plane2d.offset_circle_family(*args)
    raise UsageError(f"unknown family spec {spec!r}")


def cmd_eval2d(args) -> tuple[int, dict]:
    if args.f not in FUNCTIONS_2D:
        raise UsageError(f"unknown 2-D integrand {args.f!r}; choose from {', '.join(FUNCTIONS_2D)}")
    f = FUNCTIONS_2D[args.f]()
    k = parse_kernel(args.kernel)
    fams = [parse_family(s) for s in (args.family or ["circle", "square"])]
    over = _policy_overrides(args)
    try:
        policy = plane2d.default_policy2d().replace(**over)
        res = plane2d.evaluate2d(f, k, fams, policy, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    record = {
        "config": {"f": args.f, "kernel": plane2d.kernel_to_dict(k), "families": [plane2d.family_to_dict(x) for x in fams], "policy": _policy_dict(policy)},
        "status": res.status,
        "result": {
            "value": res.value,
            "agreement_spread": res.agreement_spread,
            "disagreeing": res.disagreeing,
            "per_family": {
                name: {"limit": rep.limit, "status": rep.status, "spread": rep.spread, "samples": _samples(rep)}
                for name, rep in res.per_family.items()
            },
        },
    }
    return (EXIT_OK if res.converged else EXIT_FAIL), record


def demo_rows() -> list[dict]:
    """The six worked examples end to end; each row carries its own pass flag."""
    rows = []

    def add(example, description, value, expected, passed, **extra):
        rows.append({"example": example, "description": description, "value": value, "expected": expected, "passed": bool(passed), **extra})

    def one(name, params, zd, a, expected, example, description):
        res = evaluate(catalog_get(name, params), a, zd)
        ok = res.converged and abs(res.value - expected) <= 1e-8
        add(example, description, res.value, expected, ok)

    one("sin_ax", {"alpha": 1.0}, make_pair(math.pi), 0.0, 1.0, 1, "sin(x) from 0, pair(pi)")
    one("x_cos_ax", {"alpha": 1.0}, make_triple(math.pi), 0.0, -1.0, 2, "x cos(x) from 0, triple(pi)")
    one("exp_sin", {"alpha": 1.0, "beta": -0.5}, make_pair(math.pi), 0.0, 1.0 / 1.25, 3, "exp(-x/2) sin(x) from 0, pair(pi)")

    p4 = calculus.cos_xy_over_x_family()
    r4 = calculus.leibniz_check(p4, 1.0, 1.0)
    add(4, "d/dy of cos(xy)/x from 1 at y=1 vs -sin(xy)", r4.lhs, -math.cos(1.0), r4.passed and abs(r4.rhs + math.cos(1.0)) <= 1e-8, rhs=r4.rhs)
    p5 = calculus.sin_xy_family()
    r5 = calculus.leibniz_check(p5, 0.0, 1.0)
    add(5, "d/dy of sin(xy) from 0 at y=1 vs x cos(xy)", r5.lhs, -1.0, r5.passed and abs(r5.rhs + 1.0) <= 1e-8, rhs=r5.rhs)

    c6 = calculus.substitution_counterexample(0.25)
    add(
        6,
        "square wave before/after x = u + 0.25 sin(pi u)",
        c6.substituted,
        0.5 + c6.expected_difference,
        c6.consistent and c6.value_changed,
        base=c6.base,
        naive=0.5 + c6.naive_difference,
    )
    return rows


def cmd_demo(args) -> tuple[int, dict]:
    rows = demo_rows()
    ok = all(r["passed"] for r in rows)
    return (EXIT_OK if ok else EXIT_FAIL), {"config": {}, "status": "pass" if ok else "fail", "result": {"rows": rows}}


# ---------------------------------------------------------------------------
# parser and output


def _add_policy(p):
    g = p.add_argument_group("limit policy")
    g.add_argument("--policy-file", help=f"JSON policy file (default: ${POLICY_ENV})")
    g.add_argument("--b-start", dest="b_start", type=parse_number)
    g.add_argument("--b-count", dest="b_count", type=int)
    g.add_argument("--b-step", dest="b_step", type=parse_number)
    g.add_argument("--window", type=int)
    g.add_argument("--tol", type=parse_number)
    g.add_argument("--averaging", action="store_true", help="also report the Cesaro mean")


def _add_integrand(p):
    p.add_argument("--integrand", required=True, help=f"one of {', '.join(CATALOG)}, optionally name:key=value,...")
    p.add_argument("--alpha", type=parse_number)
    p.add_argument("--beta", type=parse_number)
    p.add_argument("--y", type=parse_number)
    p.add_argument("--sigma", type=parse_number)
    p.add_argument("--lambda", dest="lam", type=parse_number)
    p.add_argument("--param", action="append", help="extra parameter key=value")
    p.add_argument("--a", type=parse_number, default=0.0, help="lower bound")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zintegral", description="Terminated improper integrals to infinity.")
    parser.add_argument("--format", choices=("json", "csv", "text"), default="text")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(p):
        p.add_argument("--format", choices=("json", "csv", "text"), default=argparse.SUPPRESS)

    p = sub.add_parser("eval", help="evaluate one integral")
    _add_integrand(p)
    p.add_argument("--termination", default="step")
    p.add_argument("--workers", type=int, default=1)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("compare", help="uniqueness across terminations")
    _add_integrand(p)
    p.add_argument("--termination", action="append", default=[])
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("linearity", help="linearity check")
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--w1", type=parse_number, default=1.0)
    p.add_argument("--w2", type=parse_number, default=1.0)
    p.add_argument("--z1", required=True)
    p.add_argument("--z2", required=True)
    p.add_argument("--a", type=parse_number, default=0.0)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("leibniz", help="differentiation under the integral sign")
    p.add_argument("--family", default="sin_xy", help=", ".join(FAMILIES_1D))
    p.add_argument("--a", type=parse_number, default=0.0)
    p.add_argument("--y", type=parse_number, default=1.0)
    p.add_argument("--h", type=parse_number, default=calculus.DEFAULT_H)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("interchange", help="interchange of integration order")
    p.add_argument("--family", default="sin_xy", help=", ".join(FAMILIES_1D))
    p.add_argument("--weight", choices=("one", "centered"), default="one")
    p.add_argument("--y-lo", dest="y_lo", type=parse_number, default=1.0)
    p.add_argument("--y-hi", dest="y_hi", type=parse_number, default=2.0)
    p.add_argument("--a", type=parse_number, default=1.0)
    p.add_argument("--nodes", type=int, default=33)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("cov-linear", help="linear change of variable u = r + s x")
    _add_integrand(p)
    p.add_argument("--termination", required=True)
    p.add_argument("--r", type=parse_number, default=0.0)
    p.add_argument("--s", type=parse_number, default=1.0)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("cov-counterexample", help="nonlinear substitution on the square wave")
    p.add_argument("--alpha", type=parse_number, default=0.25)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("eval2d", help="2-D evaluation across region families")
    p.add_argument("--f", default="gaussian", help=", ".join(FUNCTIONS_2D))
    p.add_argument("--kernel", default="point", help="point, pair:dx,dy, disk:r, annulus:r1,r2 or JSON")
    p.add_argument("--family", action="append", help="circle, square, offset_circle:dx,dy (repeatable)")
    p.add_argument("--workers", type=int, default=1)
    _add_policy(p)
    fmt(p)

    p = sub.add_parser("demo", help="reproduce the six worked examples")
    fmt(p)
    return parser


COMMANDS = {
    "eval": cmd_eval,
    "compare": cmd_compare,
    "linearity": cmd_linearity,
    "leibniz": cmd_leibniz,
    "interchange": cmd_interchange,
    "cov-linear": cmd_cov_linear,
    "cov-counterexample": cmd_cov_counterexample,
    "eval2d": cmd_eval2d,
    "demo": cmd_demo,
}


def run(argv: Sequence[str]) -> tuple[int, dict | None, str]:
    """Parse and execute; returns (exit status, record, output format)."""
    args = build_parser().parse_args(list(argv))
    start = time.perf_counter()
    code, record = COMMANDS[args.command](args)
    full = {"schema_version": SCHEMA_VERSION, "command": args.command, **record}
    full["sidecar"] = {"wall_time_s": time.perf_counter() - start}
    return code, full, args.format


def _flatten(prefix: str, obj, out: list):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, obj))


def render(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, indent=2, sort_keys=False, allow_nan=False)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if record.get("samples"):
            writer.writerow(["b", "tail"])
            writer.writerows(record["samples"])
        else:
            writer.writerow(["key", "value"])
            rows: list = []
            _flatten("", {k: v for k, v in record.items() if k != "sidecar"}, rows)
            writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    if record["command"] == "demo":
        lines = [f"{'ex':>2}  {'status':6}  {'value':>20}  {'expected':>20}  description"]
        for r in record["result"]["rows"]:
            mark = "pass" if r["passed"] else "FAIL"
            lines.append(f"{r['example']:>2}  {mark:6}  {r['value']!r:>20}  {r['expected']!r:>20}  {r['description']}")
            if r["example"] == 6:
                lines.append(
                    f"    base {r['base']!r}, substituted {r['value']!r}; the naive {r['naive']!r} "
                    "needs the cosine part to give 2 alpha, it gives 2 alpha/pi"
                )
        return "\n".join(lines)
    rows = []
    _flatten("", {k: v for k, v in record.items() if k not in ("sidecar", "samples")}, rows)
    return "\n".join(f"{k}: {v}" for k, v in rows)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        code, record, fmt = run(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(render(record, fmt))
    return code


if __name__ == "__main__":
    sys.exit(main())
