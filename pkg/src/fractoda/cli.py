"""Command-line entry point: ``fractoda <command> [options]``.

Commands: ``constants``, ``threshold``, ``curve`` and ``verify``.  Exit
codes: 0 success, 1 a verification check failed, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import constants as C
from .constants import DomainError, NoCrossingError, Params
from .energy import energy_report
from .fraclap import hardy_kernel_integral
from .homog import (
    bubble_family, decay_check, make_constant_profile, representation_check,
    residual_main, sphere_identity, translated_family,
)
from .stability import witness_search

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

FAMILY_DEFAULTS = {
    "homogeneous": (5.0, 0.5, 2),
    "perturbed": (1.0, 0.25, 2),
    "bubble": (1.0, 0.5, 2),
}
SUITES = ("homog", "decay", "representation", "monotonicity", "stability")


class UsageError(Exception):
    pass


def _sig(v):
    """Round floats to 12 significant digits for output."""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_sig(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _sig(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_sig(x) for x in v]
    return v


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _color(text: str, ok: bool) -> str:
    if os.environ.get("NO_COLOR") is not None or not sys.stdout.isatty():
        return text
    return f"\033[{32 if ok else 31}m{text}\033[0m"


def _dump_json(obj) -> str:
    return json.dumps(_sig(obj), sort_keys=True, indent=2)


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r} must be a:b:step")
        a, b, h = map(float, parts)
        if h <= 0:
            raise UsageError("grid step must be positive")
        if b < a:
            return np.array([])
        k = int(math.floor((b - a) / h + 1e-9))
        return np.round(a + h * np.arange(k + 1), 12)
    if not text:
        return np.array([])
    return np.array([float(x) for x in text.split(",") if x.strip()])


def _params(ns) -> Params:
    return Params(ns.n, ns.s, ns.q)


# ---------------------------------------------------------------------------
# commands


def cmd_constants(ns) -> int:
    p = _params(ns)
    cs = C.constant_set(p)
    rows = [("kappa", cs.kappa, "Gamma(1-s)/(2^(2s-1)Gamma(s))", None),
            ("a_ns", cs.a_ns, "2^(2s)Gamma(n/2)Gamma(1+s)/Gamma((n-2s)/2)", None),
            ("lambda_ns", cs.lambda_ns, "2^(2s)Gamma((n+2s)/4)^2/Gamma((n-2s)/4)^2", None)]
    if p.s < 1:
        hk = hardy_kernel_integral(p) * cs.gagliardo_c
        rows[-1] = rows[-1][:3] + (hk / cs.lambda_ns - 1.0,)
    for a, v in enumerate(cs.lambda_alpha, 1):
        rows.append((f"lambda_alpha[{a}]", v, "2^(2s-1) G alpha(Q-alpha)", None))
    for a, v in enumerate(cs.calA_alpha, 1):
        rows.append((f"calA_alpha[{a}]", v, "2^(2s-1) G (2alpha-1-Q)", None))
    rows.append(("riesz_c", cs.riesz_c, "Gamma((n-2s)/2)/(4^s pi^(n/2) Gamma(s))", None))
    if cs.poisson_d is not None:
        d = cs.poisson_d
        n, s = p.n, p.s
        head = integrate.quad(lambda r: r ** (n - 1) * (r * r + 1) ** (-(n + 2 * s) / 2), 0, 1)[0]
        tail = integrate.quad(lambda t: t ** (2 * s - 1) * (1 + t * t) ** (-(n + 2 * s) / 2), 0, 1)[0]
        rows.append(("poisson_d", d, "Gamma((n+2s)/2)/(pi^(n/2)Gamma(s))",
                     d * C.sphere_area(n) * (head + tail) - 1.0))
    else:
        rows.append(("poisson_d", None, "undefined at s=1", None))
    rows.append(("gagliardo_c", cs.gagliardo_c,
                 "s 4^s Gamma(n/2+s)/(pi^(n/2)Gamma(1-s))" if cs.gagliardo_c else "undefined at s=1",
                 None))
    if ns.format == "json":
        out = {"config": _config(ns), "constants": [
            {"name": r[0], "value": r[1], "closed_form": r[2], "check_delta": r[3]}
            for r in rows]}
        _emit(_dump_json(out), ns.output)
    else:
        lines = [f"# n={_fmt(p.n)} s={_fmt(p.s)} Q={p.Q}",
                 f"{'name':<16} {'value':>20}  {'check':>12}  closed form"]
        for name, v, form, delta in rows:
            val = "undefined at s=1" if v is None else _fmt(v)
            chk = "" if delta is None else f"{delta:.3e}"
            lines.append(f"{name:<16} {val:>20}  {chk:>12}  {form}")
        _emit("\n".join(lines), ns.output)
    return EXIT_OK


def cmd_threshold(ns) -> int:
    p = _params(ns)
    p.require_supercritical()
    lhs, rhs = C.threshold_sides(p)
    status = C.threshold_status(p)
    label = {"holds": "holds", "fails": "fails", "boundary": "boundary (equality)"}[status]
    if ns.format == "json":
        _emit(_dump_json({"config": _config(ns), "lhs": lhs, "rhs": rhs,
                          "holds": status == "holds", "status": label}), ns.output)
    else:
        _emit(f"n={_fmt(p.n)} s={_fmt(p.s)} Q={p.Q}: lhs={_fmt(lhs)} rhs={_fmt(rhs)} "
              f"-> {label}", ns.output)
    return EXIT_OK


def cmd_curve(ns) -> int:
    grid = parse_grid(ns.s_grid)
    qs = [int(q) for q in str(ns.q).split(",")]
    if grid.size == 0 or not qs:
        raise UsageError("empty grid")
    rows = []
    for q in qs:
        for s in grid:
            if not 0 < s <= 1:
                raise DomainError(f"s={s} outside (0, 1]")
            try:
                nstar = C.critical_dimension(float(s), q)
            except NoCrossingError:
                nstar = float("nan")
            rows.append((float(s), q, nstar))
    if ns.format == "json":
        _emit(_dump_json({"config": _config(ns),
                          "rows": [{"s": a, "q": b, "n_star": c} for a, b, c in rows]}),
              ns.output)
    else:
        lines = ["s,q,n_star"] + [f"{_fmt(a)},{b},{_fmt(c)}" for a, b, c in rows]
        _emit("\n".join(lines), ns.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suites


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


def _suite_homog(p, ns) -> list[Check]:
    fam = make_constant_profile(p)
    radii = parse_grid(ns.radii)
    res = residual_main(fam, radii)
    out = [Check("residual_main", res.max_relative <= ns.tol,
                 {"max_relative": res.max_relative, "tol": ns.tol})]
    x = np.geomspace(1e-3, 1e3, 61)
    zs = float(np.max(np.abs(fam.traces(x).sum(axis=0))))
    out.append(Check("zero_sum", zs <= 1e-10, {"max_abs_sum": zs}))
    anti = float(np.max(np.abs(fam.traces(x) + fam.traces(x)[::-1])))
    out.append(Check("antisymmetry", anti <= 1e-10, {"max_abs": anti}))
    ident = sphere_identity(fam)
    dev = max(abs(a / b - 1.0) for a, b in ident)
    out.append(Check("sphere_identity", dev <= 1e-12, {"max_rel_dev": dev}))
    return out


def _suite_decay(p, ns) -> list[Check]:
    fam = make_constant_profile(p)
    radii = 2.0 ** np.arange(0, 7)
    out = []
    upper = min(5.0, 1.0 + p.n / (2.0 * p.s))
    for pe in (1.0, 2.0):
        if pe >= upper:
            continue
        mode = "ball" if p.n > 2.0 * pe * p.s else "annulus"
        t = decay_check(fam, pe, radii, mode=mode)
        var = float(np.max(t.variation))
        dev = float(np.max(np.abs(t.ratios.mean(axis=1) / t.oracle - 1.0)))
        out.append(Check(f"decay_p{pe:g}", var < 0.01 and dev < 1e-6,
                         {"mode": mode, "variation": var, "oracle_rel_dev": dev}))
    return out


def _suite_representation(p, ns) -> list[Check]:
    fam = make_constant_profile(p)
    rep = representation_check(fam, [0.5, 1.0, 2.0, 4.0])
    sp = float(np.max(rep.spread))
    return [Check("representation_constancy", sp <= 1e-2,
                  {"spread": rep.spread, "constants": rep.constant})]


def _family(ns, p):
    if ns.family == "homogeneous":
        return make_constant_profile(p)
    if ns.family == "perturbed":
        return translated_family(p)
    return bubble_family(1.0)


def _suite_monotonicity(p, ns) -> list[Check]:
    fam = _family(ns, p)
    lams = parse_grid(ns.lambdas)
    rep = energy_report(fam, fam.params, lams)
    detail = {"lambdas": rep.lambdas, "E": rep.E, "I": rep.I,
              "dE_numeric": rep.dE_numeric, "dE_closed": rep.dE_closed}
    out = [Check("E_nondecreasing", rep.monotone, detail)]
    if fam.kind == "homogeneous":
        flat = float(np.max(np.abs(rep.E - rep.E[0])) / (1.0 + abs(rep.E[0])))
        out.append(Check("E_flat", flat <= 1e-3, {"max_rel_dev": flat}))
        dc = float(np.max(np.abs(rep.dE_closed)))
        out.append(Check("dE_closed_zero", dc <= 1e-6, {"max_abs": dc}))
    else:
        sel = np.abs(rep.dE_closed) > 1e-8
        rel = np.abs(rep.dE_numeric - rep.dE_closed)[sel] / np.abs(rep.dE_closed[sel])
        worst = float(rel.max()) if rel.size else 0.0
        out.append(Check("dE_match", worst <= 0.02, {"max_rel_dev": worst}))
    return out


def _suite_stability(p, ns) -> list[Check]:
    fam = make_constant_profile(p)
    eps = tuple(parse_grid(ns.eps_ladder))
    w = witness_search(fam, p, eps_ladder=eps)
    holds = C.threshold_holds(p)
    consistent = w.found == holds
    return [Check("witness_consistent_with_threshold", consistent,
                  {"threshold_holds": holds, **w.to_dict()})]


_SUITE_FUNCS = {
    "homog": _suite_homog,
    "decay": _suite_decay,
    "representation": _suite_representation,
    "monotonicity": _suite_monotonicity,
    "stability": _suite_stability,
}


def cmd_verify(ns) -> int:
    n0, s0, q0 = FAMILY_DEFAULTS[ns.family]
    ns.n = n0 if ns.n is None else ns.n
    ns.s = s0 if ns.s is None else ns.s
    ns.q = q0 if ns.q is None else int(ns.q)
    p = _params(ns)
    if ns.family == "bubble" and (p.n, p.s, p.Q) != (1.0, 0.5, 2):
        raise DomainError("the bubble family exists for n=1, s=1/2, Q=2 only")
    if ns.suite != "monotonicity" or ns.family == "homogeneous":
        p.require_supercritical()
    p.require_fractional()
    suites = SUITES if ns.suite == "all" else (ns.suite,)
    checks: list[Check] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in suites:
            checks += _SUITE_FUNCS[name](p, ns)
    ok = all(c.passed for c in checks)
    report = {"config": _config(ns), "passed": ok,
              "checks": [{"name": c.name, "passed": c.passed, **c.detail} for c in checks]}
    _emit(_dump_json(report), ns.output)
    if not ns.output:
        for c in checks:
            sys.stderr.write(_color(f"{'PASS' if c.passed else 'FAIL'} {c.name}", c.passed) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def _config(ns) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in ("func", "config")}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fractoda", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, needs_n=True, defaults=(None, None, 2)):
        if needs_n:
            sp.add_argument("--n", type=float, default=defaults[0])
            sp.add_argument("--s", type=float, default=defaults[1])
        sp.add_argument("--q", default=defaults[2])
        sp.add_argument("--format", choices=("text", "csv", "json"), default="text")
        sp.add_argument("--output", default=None)
        sp.add_argument("--config", default=None, help="JSON file overriding flags")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("constants", help="all constants for (n, s, Q)")
    common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("threshold", help="threshold inequality for (n, s, Q)")
    common(sp)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("curve", help="critical dimension over an s-grid (CSV)")
    common(sp, needs_n=False)
    sp.add_argument("--s-grid", default="0.1:1.0:0.1")
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("verify", help="run verification suites, JSON report")
    common(sp, defaults=(None, None, None))
    sp.add_argument("--suite", choices=SUITES + ("all",), default="homog")
    sp.add_argument("--family", choices=tuple(FAMILY_DEFAULTS), default="homogeneous")
    sp.add_argument("--radii", default="0.25,1,4")
    sp.add_argument("--lambdas", default="1,2,4,8")
    sp.add_argument("--eps-ladder", default="1e-2,1e-3,1e-4")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.set_defaults(func=cmd_verify)
    return ap


def _apply_config(ns, ap):
    if not ns.config:
        return ns
    try:
        with open(ns.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("func", "command") or not hasattr(ns, dest):
            raise UsageError(f"unknown config key {key!r}")
        setattr(ns, dest, val)
    return ns


def _validate(ns):
    if getattr(ns, "tol", 1.0) is not None and getattr(ns, "tol", 1.0) <= 0:
        raise UsageError("tolerances must be positive")
    if ns.command == "constants" or ns.command == "threshold":
        if ns.n is None or ns.s is None:
            raise UsageError("--n and --s are required")
        ns.q = int(ns.q)
    if ns.command == "verify":
        for g in ("radii", "lambdas", "eps_ladder"):
            if parse_grid(str(getattr(ns, g))).size == 0:
                raise UsageError(f"empty grid {g}")
    if ns.format == "csv" and ns.command != "curve":
        raise UsageError("csv output is for curves")


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        ns = _apply_config(ns, ap)
        _validate(ns)
        return ns.func(ns)
    except (UsageError, DomainError, ValueError, IndexError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
