"""
Command-line front end.

    qkyamabe sigma-k --sphere --n 4 --k 2
    qkyamabe verify --family 1.5 --n 3 --m 2 --box 1:2 --samples 5
    qkyamabe build --family 3.2 --check
    qkyamabe torus --field grad-sine --n 2 --N 64
    qkyamabe report

Every subcommand also accepts ``--config FILE`` with ``key = value`` lines
(keys are the long flag names without dashes; ``-`` and ``_`` are
interchangeable).  Flags given on the command line override the file.

Exit codes: 0 success, 1 verification threshold exceeded, 2 bad
configuration or domain error, 3 profile integration stopped on an event.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from ._io import atomic_write, fmt
from .builder import (
    FAMILIES,
    REFERENCE_CASES,
    BuilderParams,
    ProfileState,
    closed_form_family,
    closed_form_profile,
    integrate_profile,
    lambda_linear_profile,
)
from .errors import QKYamabeError
from .soliton import GridVerification, verify_on_grid
from .tensor_core import DirectionVector, SchoutenSpectrum, sphere_sigma_k
from . import torus as tor

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_EVENT = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text: str, what: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"could not parse {what} {text!r} as comma-separated numbers") from None


def _interval(text: str) -> tuple:
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"expected lo:hi, got {text!r}")
    lo, hi = (float(p) for p in parts)
    if not lo < hi:
        raise ConfigError(f"empty interval {text!r}")
    return lo, hi


def _box(text: Optional[str], n: int):
    if text is None:
        return None
    pieces = [_interval(p) for p in str(text).split(",")]
    if len(pieces) == 1:
        return tuple(pieces * n)
    if len(pieces) != n:
        raise ConfigError(f"box needs 1 or {n} intervals, got {len(pieces)}")
    return tuple(pieces)


def _alpha(args, n: int):
    if args.alpha is None:
        return None
    a = _floats(args.alpha, "alpha")
    if len(a) != n:
        raise ConfigError(f"alpha needs {n} components, got {len(a)}")
    return a


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


# ---------------------------------------------------------------------------
# output


def _emit(text: str, output: Optional[str]):
    if output:
        atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _kv_csv(rows: dict) -> str:
    buf = io.StringIO()
    buf.write(",".join(rows) + "\n")
    buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in rows.values()) + "\n")
    return buf.getvalue()


def _json(obj) -> str:
    def clean(v):
        if isinstance(v, float):
            return float(fmt(v)) if math.isfinite(v) else None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v
    return json.dumps(clean(obj), indent=2) + "\n"


def _family_kwargs(args) -> dict:
    kw = {"k0": args.k0, "k1": args.k1, "k2": args.k2}
    a = _alpha(args, args.n)
    if a is not None:
        kw["alpha"] = a
    return kw


# ---------------------------------------------------------------------------
# subcommands


def cmd_sigma_k(args) -> int:
    n, k = args.n, args.k
    if args.sphere:
        spec = SchoutenSpectrum.from_two(0.5, 0.5, n)
        sk = sphere_sigma_k(n, k)
    elif args.flat:
        spec = SchoutenSpectrum.from_two(0.0, 0.0, n)
        sk = 0.0
    else:
        if args.family is None:
            raise ConfigError("sigma-k needs one of --sphere, --flat or --family")
        c = closed_form_family(args.family, n, k, args.m, **_family_kwargs(args))
        if args.point is not None:
            x = np.array(_floats(args.point, "point"))
        else:
            x = np.array([0.5 * (lo + hi) for lo, hi in c.box])
        x = c.check_point(x)
        spec = c.spectrum(x)
        sk = spec.sigma(k)
    row = {
        "sigma_k": sk,
        "theta": spec.theta if spec.structured else math.nan,
        "mu": spec.mu if spec.structured else math.nan,
    }
    _emit(_json(row) if args.format == "json" else _kv_csv(row), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.family is None:
        raise ConfigError("verify needs --family")
    c = closed_form_family(args.family, args.n, args.k, args.m, **_family_kwargs(args))
    if args.lambda_offset:
        c = c.with_lambda(c.lam + args.lambda_offset)
    box = _box(args.box, c.n) or c.box
    result = verify_on_grid(c, box, args.samples)
    if args.output:
        text = result.to_csv() if args.format == "csv" else result.to_json()
        atomic_write(args.output, text)
    if args.summary:
        atomic_write(args.summary, result.to_json())
    summary = result.summary()
    summary["threshold"] = args.threshold
    summary["passed"] = result.passed(args.threshold)
    sys.stdout.write(_json(summary))
    return EXIT_OK if summary["passed"] else EXIT_THRESHOLD


def cmd_build(args) -> int:
    n, k, m = args.n, args.k, args.m
    a = _alpha(args, n)
    d = DirectionVector(a) if a is not None else DirectionVector.diagonal(n, normalize=True)
    xi0 = args.xi0
    lo, hi = _interval(args.range) if args.range else (xi0, xi0 + 1.0)
    if args.family is not None:
        fam = str(args.family)
        if fam in ("1.4", "3.3"):
            d = DirectionVector.unit(n)
        if fam in ("3.2", "3.3", "1.4"):
            lam = lambda_linear_profile(n, k, m, args.k0, d.norm_sq)
        elif fam in ("3.1", "3.4", "3.5"):
            lam = 0.0
            if fam == "3.4" and n != 2 * k:
                raise ConfigError("family 3.4 requires n = 2k")
            if fam == "3.5" and n == 2 * k:
                raise ConfigError("family 3.5 requires n != 2k")
        else:
            raise ConfigError(f"build supports families 1.4, 3.1-3.5, got {fam!r}")
        prof = closed_form_profile(fam, n, k, m, k0=args.k0, k1=args.k1, k2=args.k2)
        p0, p1, _, u0, u1, _ = prof(xi0)
        initial = ProfileState(xi0, p0, p1, u0, u1)
        if args.lam is not None:
            lam = args.lam
    else:
        if args.init is None:
            raise ConfigError("build needs --family or --init 'phi,dphi,u,du'")
        vals = _floats(args.init, "init")
        if len(vals) != 4:
            raise ConfigError("--init needs exactly four values phi,dphi,u,du")
        if args.lam is None:
            raise ConfigError("--init requires --lambda")
        lam = args.lam
        initial = ProfileState(xi0, *vals)
    if not lo <= xi0 <= hi:
        raise ConfigError(f"xi0 = {xi0} outside range {lo}:{hi}")
    params = BuilderParams(n, k, m, lam, d, step=args.step, xi_range=(lo, hi))
    table = integrate_profile(params, initial)
    _emit(table.to_csv(with_residuals=True), args.output)
    if table.event is not None:
        sys.stderr.write(f"integration stopped: {table.event} at xi={fmt(table.event_xi)}: {table.event_message}\n")
        return EXIT_EVENT
    if args.check:
        r1, r2 = table.residuals()
        worst = float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))
        if worst > args.threshold:
            sys.stderr.write(f"profile residual {worst:.3e} exceeds {args.threshold:.1e}\n")
            return EXIT_THRESHOLD
    return EXIT_OK


def cmd_torus(args) -> int:
    if args.import_path:
        try:
            X = tor.load_field(args.import_path)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot import field from {args.import_path}: {exc}") from None
        if not X.is_vector:
            raise ConfigError("imported field must be a vector field")
    else:
        try:
            grid = tor.TorusGrid(args.n, args.N)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        X = tor.named_field(args.field, grid)
    if args.export:
        tor.save_field(X, args.export)
    I1, I2 = tor.t8_criterion(X)
    row = {
        "field": args.import_path or args.field,
        "n": X.grid.n,
        "N": X.grid.N,
        "I1": I1,
        "I2": I2,
        "t2_integrand": tor.t2_integrand(X, args.m, args.lam or 0.0),
        "div_norm_identity": tor.div_norm_identity(X),
        "integral_div": tor.div(X).integral(),
    }
    _emit(_json(row) if args.format == "json" else _kv_csv(row), args.output)
    return EXIT_OK


def cmd_report(args) -> int:
    rows = []
    ok = True
    for fam, n, k, m, consts in REFERENCE_CASES:
        res: GridVerification = verify_on_grid(
            c := closed_form_family(fam, n, k, m, **consts), c.box, args.samples)
        s = res.summary()
        s["passed"] = res.passed(args.threshold)
        ok &= s["passed"]
        rows.append(s)
    if args.format == "json":
        text = _json({"threshold": args.threshold, "samples": args.samples, "cases": rows})
    else:
        cols = list(rows[0])
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for r in rows:
            buf.write(",".join(str(r[c]) if isinstance(r[c], (str, bool, int)) else fmt(r[c]) for c in cols) + "\n")
        text = buf.getvalue()
    _emit(text, args.output)
    return EXIT_OK if ok else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# parser

# hard defaults, applied after the config file so that file values can fill unset flags
DEFAULTS = {
    "n": 3, "k": 1, "m": 1.0, "k0": 1.0, "k1": 1.0, "k2": 1.0, "samples": 5, "threshold": 1e-8,
    "format": "csv", "lambda_offset": 0.0, "step": 1e-3, "xi0": 1.0, "N": 64, "field": "grad-sine",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkyamabe", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value file; command-line flags win")
        p.add_argument("--output", help="output file (written atomically); stdout if omitted")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--m", type=float, default=None)
        p.add_argument("--k0", type=float, default=None)
        p.add_argument("--k1", type=float, default=None)
        p.add_argument("--k2", type=float, default=None)
        p.add_argument("--alpha", help="direction, comma separated")

    p = sub.add_parser("sigma-k", help="sigma_k and Schouten eigenvalues at a point")
    common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sphere", action="store_true", default=None)
    g.add_argument("--flat", action="store_true", default=None)
    g.add_argument("--family", choices=FAMILIES)
    p.add_argument("--point", help="evaluation point, comma separated")
    p.set_defaults(func=cmd_sigma_k)

    p = sub.add_parser("verify", help="verify a closed-form family on a lattice")
    common(p)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--box", help="lo:hi for every axis, or lo:hi,lo:hi,... per axis")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--lambda-offset", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--summary", help="also write the JSON summary here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("build", help="integrate a translation-invariant profile")
    common(p)
    p.add_argument("--family", choices=["1.4", "3.1", "3.2", "3.3", "3.4", "3.5"])
    p.add_argument("--init", help="initial phi,dphi,u,du at xi0")
    p.add_argument("--xi0", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--range", help="xi range lo:hi (default xi0:xi0+1)")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--check", action="store_true", default=None, help="fail unless |r1|, |r2| <= threshold")
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("torus", help="Hodge decomposition criteria on the flat torus")
    common(p)
    p.add_argument("--field", choices=list(tor.NAMED_FIELDS))
    p.add_argument("--import", dest="import_path", help="field file (.csv or binary dump)")
    p.add_argument("--export", help="write the field used to this path (.csv or binary)")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.set_defaults(func=cmd_torus)

    p = sub.add_parser("report", help="verify every reference family case")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_report)
    return parser


_CONFIG_ALIASES = {"lambda": "lam", "import": "import_path"}


def _apply_config(args, parser):
    if getattr(args, "config", None):
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        known = {a.dest: a for a in parser._subparsers._group_actions[0].choices[args.command]._actions}
        for key, raw in cfg.items():
            dest = _CONFIG_ALIASES.get(key, key)
            if dest not in known or dest in ("help", "config", "func"):
                raise ConfigError(f"unknown config key {key!r} for {args.command}")
            if getattr(args, dest) is not None:
                continue
            action = known[dest]
            if action.const is True:  # store_true flag
                value = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
            if action.choices is not None and value not in action.choices:
                raise ConfigError(f"config value {raw!r} not allowed for {key}")
            setattr(args, dest, value)
    for key, value in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        _apply_config(args, parser)
        return args.func(args)
    except (ConfigError, QKYamabeError, ValueError, ArithmeticError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
