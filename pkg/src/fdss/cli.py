"""Command-line front end.

Exit codes: 0 success, 1 validation error, 2 numerical failure. Errors are
written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .errors import FDSSError, NumericalError, ValidationError
from .params import (
    ParameterSet,
    classify_m,
    critical_exponents,
    sample_admissible,
    similarity_exponents,
    validate_params,
)
from .profiles import (
    IntegrationOptions,
    ProfileODE,
    Termination,
    classify_tail,
    critical_decay_constant,
    integrate_profile,
    ode_residual,
    power_law_terms,
    printed_critical_decay_base,
)
from .regions import classify_region, region_grid
from .selfmap import (
    ConstantsMode,
    build_selfmap,
    identity_residuals,
    map_profile,
    matched_options,
    verify_identities,
)
from .serialization import dumps, profile_to_csv, profile_to_dict, rows_to_csv
from .shooting import DEFAULT_D_RANGE, SCAN_POINTS, find_fast_decay, sweep_p, sweep_to_csv


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive(x):
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{x} must be > 0")
    return v


def _add_params(p, with_p=True, with_s=False):
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--m", type=float, required=True)
    if with_p:
        p.add_argument("--p", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    if with_s:
        p.add_argument("--s", type=int, choices=(1, -1), required=True)


def _add_integration(p):
    g = p.add_argument_group("integration")
    d = IntegrationOptions()
    g.add_argument("--xi0", type=_positive, default=d.xi0)
    g.add_argument("--xi-max", type=_positive, default=d.xi_max)
    g.add_argument("--rel-tol", type=_positive, default=d.rel_tol)
    g.add_argument("--cap", type=_positive, default=d.cap)
    g.add_argument("--points-per-decade", type=int, default=d.points_per_decade)
    g.add_argument("--max-nfev", type=int, default=d.max_nfev)


def _opts(a) -> IntegrationOptions:
    return IntegrationOptions(xi0=a.xi0, xi_max=a.xi_max, rel_tol=a.rel_tol, cap=a.cap,
                              points_per_decade=a.points_per_decade, max_nfev=a.max_nfev)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fdss {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", default=None, help="write here instead of stdout")
    common.add_argument("--config", default=None,
                        help="JSON file whose keys mirror the long flags")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("exponents", parents=[common], help="critical and similarity exponents")
    _add_params(p)

    p = sub.add_parser("transform", parents=[common], help="self-map and identity checks")
    _add_params(p)
    p.add_argument("--mode", choices=[m.value for m in ConstantsMode],
                   default=ConstantsMode.DERIVED.value)

    p = sub.add_parser("profile", parents=[common], help="integrate one profile")
    _add_params(p, with_s=True)
    p.add_argument("--D", type=_positive, required=True)
    _add_integration(p)

    p = sub.add_parser("shoot", parents=[common], help="fast-decay search or p sweep")
    _add_params(p, with_p=False, with_s=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--p-values", type=float, nargs="+", default=None,
                   help="sweep these p values (CSV table)")
    p.add_argument("--D-lo", type=_positive, default=DEFAULT_D_RANGE[0])
    p.add_argument("--D-hi", type=_positive, default=DEFAULT_D_RANGE[1])
    p.add_argument("--n-scan", type=int, default=SCAN_POINTS)
    p.add_argument("--strict", action="store_true",
                   help="fail when the outcome class changes more than once")
    _add_integration(p)

    p = sub.add_parser("regions", parents=[common], help="region grid over (p, m)")
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--p-range", type=float, nargs=2, default=(1.0, 3.0))
    p.add_argument("--m-range", type=float, nargs=2, default=(0.01, 0.99))
    p.add_argument("--resolution", type=int, nargs="+", default=[100])

    p = sub.add_parser("verify", parents=[common], help="identity, residual or balance suite")
    p.add_argument("--suite", choices=("identities", "residual", "balance"), required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive, default=None)
    return parser


def _subparser(parser, command):
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices.get(command)


def _config_argv(parser, argv):
    """Expand ``--config FILE`` into flags; explicit flags keep precedence."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    ns, _ = pre.parse_known_args(argv)
    sub = _subparser(parser, argv[0]) if argv else None
    if ns.config is None or sub is None:
        return argv
    with open(ns.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    actions = {a.dest: a for a in sub._actions if a.option_strings and a.dest not in ("help", "config")}
    unknown = sorted(k for k in cfg if k.replace("-", "_") not in actions)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    extra = []
    for k, v in cfg.items():
        action = actions[k.replace("-", "_")]
        if any(tok == o or tok.startswith(o + "=") for tok in argv for o in action.option_strings):
            continue
        flag = action.option_strings[-1] if action.option_strings[-1].startswith("--") \
            else action.option_strings[0]
        if isinstance(v, bool):
            if v:
                extra.append(flag)
        elif isinstance(v, list):
            extra += [flag, *map(str, v)]
        else:
            extra += [flag, str(v)]
    return argv + extra


# ---------------------------------------------------------------------------
# commands


def _params(a) -> ParameterSet:
    return validate_params(a.N, a.m, a.p, a.sigma)


def cmd_exponents(a):
    ps = _params(a)
    ce = critical_exponents(ps)
    out = {"params": ps.to_dict(), **ce.to_dict()}
    mc = classify_m(ps)
    out["m_range"] = mc.range.value
    out["similarity"] = {}
    if abs(ps.L) > 1e-12:
        for s in (1, -1):
            out["similarity"][str(s)] = similarity_exponents(ps, s).to_dict()
    out["region"] = classify_region(ps).to_dict()
    if a.format == "csv":
        keys = list(ce.to_dict())
        return rows_to_csv(["N", "m", "p", "sigma", *keys],
                           [[*ps.as_tuple(), *ce.to_dict().values()]])
    return out


def cmd_transform(a):
    ps = _params(a)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sm = build_selfmap(ps, a.mode)
    rep = verify_identities(ps)
    out = {
        **sm.to_dict(),
        "Nbar": sm.target.N,
        "sigmabar": sm.target.sigma,
        "oracle": {"diffusion": sm.oracle.diffusion, "source": sm.oracle.source,
                   "passed": sm.oracle.passed()},
        "identities": rep.to_dict(),
        "warnings": [str(w.message) for w in caught],
    }
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if a.format == "csv":
        return rows_to_csv(["theta", "Nbar", "sigmabar", "C1", "C2", "mode"],
                           [[sm.theta, sm.target.N, sm.target.sigma, sm.C1, sm.C2,
                             sm.mode.value]])
    return out


def cmd_profile(a):
    ps = _params(a)
    ode = ProfileODE.from_params(ps, a.s)
    prof = integrate_profile(ode, a.D, _opts(a))
    if a.format == "csv":
        return profile_to_csv(prof)
    out = profile_to_dict(prof)
    out["tail"] = None
    if prof.termination is Termination.REACHED_XI_MAX:
        out["tail"] = classify_tail(ode, prof).to_dict()
    inner = prof.interior()
    out["residual"] = ode_residual(ode, inner).max_relative if inner.xi.size >= 9 else None
    return out


def cmd_shoot(a):
    opts = _opts(a)
    if a.p_values:
        rows = sweep_p(a.N, a.m, a.sigma, a.s, a.p_values, (a.D_lo, a.D_hi), opts, a.n_scan)
        if a.format == "csv":
            return sweep_to_csv(rows)
        return {"sweep": [r.__dict__ for r in rows]}
    if a.p is None:
        raise UsageError("shoot needs --p or --p-values")
    ps = _params(a)
    res = find_fast_decay(ProfileODE.from_params(ps, a.s), (a.D_lo, a.D_hi),
                          n_scan=a.n_scan, opts=opts, strict=a.strict)
    if a.format == "csv":
        return rows_to_csv(["D", "outcome"], res.scan)
    return {"params": ps.to_dict(), "s": a.s, **res.to_dict()}


def cmd_regions(a):
    res = a.resolution * 2 if len(a.resolution) == 1 else a.resolution[:2]
    grid = region_grid(a.N, a.sigma, tuple(a.p_range), tuple(a.m_range), tuple(res))
    if a.format == "csv":
        return grid.to_csv()
    return {
        "N": grid.N, "sigma": grid.sigma,
        "cells": [{"p": p, "m": m, **lab.to_dict()} for p, m, lab in grid.cells()],
        "curves": grid.curves_dict(),
    }


def _suite_identities(a):
    rng = np.random.default_rng(a.seed)
    N, m, p, sigma = sample_admissible(rng, a.samples)
    raw = identity_residuals(N, m, p, sigma)
    tol = a.tol or 1e-9
    maxima = {k: float(np.max(np.abs(v))) for k, v in raw.items()
              if k not in ("sobolev_flip", "Nbar_gt_2")}
    flags = {"sobolev_flip": bool(np.all(raw["sobolev_flip"])),
             "Nbar_gt_2": bool(np.all(raw["Nbar_gt_2"]))}
    ok = all(v <= tol for v in maxima.values()) and all(flags.values())
    return ok, {"suite": "identities", "samples": a.samples, "seed": a.seed, "tol": tol,
                "max_abs_residual": maxima, **flags, "passed": ok}


def _suite_residual(a):
    rng = np.random.default_rng(a.seed)
    n = min(a.samples, 20)
    N, m, p, sigma = sample_admissible(rng, n, N_range=(2.5, 6.0), m_margin=0.05,
                                       sigma_range=(-1.0, 2.0), p_margin=0.05, p_span=1.5)
    tol = a.tol or 1e-6
    rows = []
    for i in range(n):
        ps = validate_params(N[i], m[i], p[i], sigma[i])
        sm = build_selfmap(ps)
        bar = integrate_profile(ProfileODE.from_params(sm.target, 1), 1.0,
                                matched_options(sm)).interior()
        mapped = map_profile(sm, bar)
        rows.append({"params": ps.to_dict(),
                     "residual": ode_residual(mapped.ode, mapped).max_relative})
    worst = max(r["residual"] for r in rows)
    ok = worst <= tol
    return ok, {"suite": "residual", "samples": n, "seed": a.seed, "tol": tol,
                "max_relative_residual": worst, "cases": rows, "passed": ok}


def _suite_balance(a):
    ps = validate_params(3, 0.25, 1.2, 0)
    ode = ProfileODE.from_params(ps, -1)
    A = critical_decay_constant(ps)
    gamma = -2.0 / (1.0 - ps.m)
    xi = np.geomspace(1e2, 1e6, 9)
    d, r, s = power_law_terms(ode, A, gamma, xi)
    rel = np.abs(d + r + s) / np.abs(r)
    slope = float(np.polyfit(np.log(xi), np.log(rel), 1)[0])
    predicted = -ps.L / (1.0 - ps.m)
    tol = a.tol or 1e-6
    ok = abs(slope - predicted) <= tol and abs(A / (1.0 / 6.0) ** (4.0 / 3.0) - 1.0) <= 1e-12
    return ok, {"suite": "balance", "params": ps.to_dict(), "A": A,
                "closed_form": (1.0 / 6.0) ** (4.0 / 3.0),
                "residual_order": slope, "predicted_order": predicted,
                "printed_base": printed_critical_decay_base(ps),
                "printed_base_negative": printed_critical_decay_base(ps) < 0,
                "passed": ok}


def cmd_verify(a):
    suite = {"identities": _suite_identities, "residual": _suite_residual,
             "balance": _suite_balance}[a.suite]
    ok, out = suite(a)
    if not ok:
        raise _SuiteFailed(out)
    return out


class _SuiteFailed(NumericalError):
    def __init__(self, payload):
        super().__init__(f"suite {payload.get('suite')} failed")
        self.payload = payload


COMMANDS = {
    "exponents": cmd_exponents,
    "transform": cmd_transform,
    "profile": cmd_profile,
    "shoot": cmd_shoot,
    "regions": cmd_regions,
    "verify": cmd_verify,
}


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); not an error
            sys.stdout = open(os.devnull, "w")


def _error(exc, code):
    payload = {"error": type(exc).__name__.lstrip("_"), "message": str(exc), "exit_code": code}
    print(dumps(payload, indent=None), file=sys.stderr)
    return code


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_config_argv(parser, argv))
        result = COMMANDS[args.command](args)
        text = result if isinstance(result, str) else dumps(result) + "\n"
        _emit(text, args.output)
        return 0
    except _SuiteFailed as exc:
        _emit(dumps(exc.payload) + "\n", getattr(args, "output", None))
        return _error(exc, 2)
    except (ValidationError, ValueError, OSError) as exc:
        return _error(exc, 1)
    except (NumericalError, ArithmeticError, FDSSError) as exc:
        return _error(exc, 2)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
