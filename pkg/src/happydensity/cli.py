"""Command-line front end: ``happydensity <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager

from .bounds import DEFAULT_PREC as BOUND_PREC
from .bounds import certify_lower, certify_upper
from .cycles import build_type_table, find_cycles
from .digits import parse_digit_spec, power_function
from .distribution import (
    AUTO,
    DEFAULT_INTERVAL_PREC,
    EXACT,
    INTERVAL,
    RowEngine,
    band_density,
    local_limit_diagnostic,
    prefix_density,
    resolve_mode,
)
from .errors import (
    CertificationError,
    EnclosureTooWide,
    NotDivisibleByFour,
    ResourceError,
    ValidationError,
)
from .intervals import format_fixed
from .search import (
    WIDTH_GUARD,
    build_table,
    density_sweep,
    emit_density_csv,
    emit_series,
    format_table,
    table_json,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_CERTIFICATION = 4
EXIT_IO = 5

PRECISION_ENV = "HAPPYDENSITY_PRECISION"

# hard defaults, applied after the config file; flags override both
DEFAULTS = {
    "base": 10,
    "power": None,
    "digits": None,
    "mode": AUTO,
    "precision": None,
    "threads": 1,
    "format": "text",
    "output": None,
    "decimals": 12,
}


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("function and numerics")
    g.add_argument("--base", type=int, help="numeration base b (default 10)")
    fx = g.add_mutually_exclusive_group()
    fx.add_argument("--power", type=int, metavar="E", help="use h(i) = i**E (default 2)")
    fx.add_argument("--digits", metavar="LIST",
                    help='digit images "0,1,...", or "power:E"')
    g.add_argument("--mode", choices=[EXACT, INTERVAL, AUTO])
    g.add_argument("--precision", type=int, metavar="BITS",
                   help=f"interval-mode precision (default ${PRECISION_ENV} or "
                        f"{DEFAULT_INTERVAL_PREC})")
    g.add_argument("--threads", type=int, help="worker cap; results do not depend on it")
    g.add_argument("--config", metavar="FILE", help="JSON file of option values; flags win")
    g.add_argument("--format", choices=["text", "json", "csv"])
    g.add_argument("--output", "-o", metavar="PATH", help="write the artifact here")
    g.add_argument("--decimals", type=int, help="decimal digits in printed densities")


def _cycle_opts(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--cycle", metavar="MEMBERS",
                   help='cycle by one or more members, e.g. "1" or "4,16" (default: the cycle of 1)')
    g.add_argument("--cycle-index", type=int, metavar="K",
                   help="cycle by position in the listing (0-based)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="happydensity",
        description="Exact and certified densities of type-C integers under digit maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cycles", help="list every cycle of H")
    _common(p)

    p = sub.add_parser("density", help="prefix or band density of one cycle")
    _common(p)
    _cycle_opts(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--prefix", type=int, metavar="M", help="density of [0, b^M - 1]")
    g.add_argument("--band", type=int, metavar="N", help="density of [b^(N-1), b^N - 1]")
    p.add_argument("--method", choices=["difference", "leading-digit"], default="difference")

    p = sub.add_parser("sweep", help="CSV series of prefix and band densities")
    _common(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--series", choices=["both", "prefix", "band"], default="both")

    p = sub.add_parser("table", help="certified bound table, one row per cycle")
    _common(p)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--anchor", action="append", default=[], metavar="CYCLE:UD:LD",
                   help='pin anchors, e.g. "1:864:132" or "370::560"; repeatable')

    p = sub.add_parser("certify", help="emit a bound certificate as JSON")
    _common(p)
    _cycle_opts(p)
    d = p.add_mutually_exclusive_group(required=True)
    d.add_argument("--upper", action="store_true", help="lower bound on the upper density")
    d.add_argument("--lower", action="store_true", help="upper bound on the lower density")
    p.add_argument("--n", type=int, required=True, help="band anchor n (4 | n)")
    p.add_argument("--claimed-digits", type=int, default=10)

    p = sub.add_parser("diagnose", help="local limit deviation from the Gaussian")
    _common(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--T", type=float, default=2.0)
    return parser


# ---------------------------------------------------------------- config

def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValidationError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.power is not None:
        cfg["digits"] = None
    elif args.digits is not None:
        cfg["power"] = None
    if cfg["precision"] is None:
        env = os.environ.get(PRECISION_ENV)
        try:
            cfg["precision"] = int(env) if env else DEFAULT_INTERVAL_PREC
        except ValueError:
            raise ValidationError(f"${PRECISION_ENV} must be an integer") from None
    if cfg["threads"] < 1:
        raise ValidationError("--threads must be >= 1")
    if cfg["decimals"] < 1:
        raise ValidationError("--decimals must be >= 1")
    return cfg


def make_function(cfg):
    base = cfg["base"]
    if cfg["digits"] is not None:
        return parse_digit_spec(str(cfg["digits"]), base)
    return power_function(2 if cfg["power"] is None else cfg["power"], base)


def _mode(cfg, m, H=None):
    """Resolve the mode for m digits; with H, also check the memory budget
    before any large allocation happens."""
    mode = resolve_mode(cfg["mode"], m)
    if mode == INTERVAL and cfg["precision"] < 64:
        raise ValidationError("interval mode needs --precision >= 64")
    if H is not None:
        RowEngine(H, m, mode, cfg["precision"])
    return mode


def _select(cycles, args):
    if getattr(args, "cycle_index", None) is not None:
        k = args.cycle_index
        if not 0 <= k < len(cycles):
            raise ValidationError(f"cycle index {k} out of range 0..{len(cycles) - 1}")
        return cycles[k]
    return cycles.select(args.cycle if getattr(args, "cycle", None) else 1)


def _guard(value):
    if not value.is_exact and value.width >= WIDTH_GUARD:
        raise EnclosureTooWide(
            f"enclosure width {float(value.width):.3g} >= 1e-6; raise --precision")


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _marked(value, digits):
    """Decimal enclosure with direction markers; '=' only when nothing was rounded."""
    lo = format_fixed(value.lo, digits, "down")
    hi = format_fixed(value.hi, digits, "up")
    if lo == hi:
        return f"={lo}"
    return f">={lo} <={hi}"


# ---------------------------------------------------------------- commands

def cmd_cycles(args, cfg):
    H = make_function(cfg)
    cycles = find_cycles(H)
    with _sink(cfg["output"]) as out:
        if cfg["format"] == "json":
            json.dump({"function": H.describe(), "cycles": cycles.to_json()}, out)
            out.write("\n")
        else:
            for k, c in enumerate(cycles):
                out.write(f"{k}\t{c}\n")
    return EXIT_OK


def cmd_density(args, cfg):
    H = make_function(cfg)
    cycles = find_cycles(H)
    C = _select(cycles, args)
    m = args.prefix if args.prefix is not None else args.band
    if m < 0 or (args.band is not None and m < 1):
        raise ValidationError("--prefix needs M >= 0 and --band needs N >= 1")
    mode = _mode(cfg, m, H)
    table = build_type_table(H, cycles, max(1, m * H.alpha))
    if args.prefix is not None:
        value = prefix_density(H, cycles, table, C, m, mode, cfg["precision"])
        where = f"[0, {H.base}^{m} - 1]"
    else:
        value = band_density(H, cycles, table, C, m, mode, cfg["precision"], args.method)
        where = f"[{H.base}^{m - 1}, {H.base}^{m} - 1]"
    _guard(value)
    with _sink(cfg["output"]) as out:
        if cfg["format"] == "json":
            doc = {"function": H.describe(), "cycle": list(C.order),
                   "interval": where, "mode": mode, "density": value.to_json(cfg["decimals"])}
            out.write(json.dumps(doc, indent=2) + "\n")
        else:
            out.write(f"type-{C} density of {where}: {_marked(value, cfg['decimals'])}"
                      f" ({mode})\n")
    return EXIT_OK


def cmd_sweep(args, cfg):
    H = make_function(cfg)
    cycles = find_cycles(H)
    if args.n_max < 1:
        raise ValidationError("--n-max must be >= 1")
    sweep = density_sweep(H, cycles, args.n_max, _mode(cfg, args.n_max, H), cfg["precision"])
    with _sink(cfg["output"]) as out:
        if args.series == "both":
            emit_series(sweep, out)
        else:
            emit_density_csv(sweep, out, args.series)
    return EXIT_OK


def _parse_anchor(text, cycles):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"anchor {text!r} is not CYCLE:UD:LD")
    C = cycles.select(parts[0])
    try:
        ud, ld = (int(x) if x.strip() else None for x in parts[1:])
    except ValueError:
        raise ValidationError(f"anchor {text!r} has a non-integer n") from None
    return C, (ud, ld)


def cmd_table(args, cfg):
    H = make_function(cfg)
    cycles = find_cycles(H)
    if args.n_max < 4:
        raise ValidationError("--n-max must be >= 4")
    anchors = dict(_parse_anchor(a, cycles) for a in args.anchor)
    sweep = density_sweep(H, cycles, args.n_max, _mode(cfg, args.n_max, H), cfg["precision"])
    rows = build_table(H, sweep, anchors, prec=max(BOUND_PREC, cfg["precision"]))
    with _sink(cfg["output"]) as out:
        if cfg["format"] == "json":
            out.write(table_json(rows, H) + "\n")
        else:
            out.write(format_table(rows, H.base))
            for r in rows:
                for reason in r.reasons:
                    out.write(f"note: {r.cycle} uncertifiable, {reason}\n")
    return EXIT_OK


def cmd_certify(args, cfg):
    H = make_function(cfg)
    cycles = find_cycles(H)
    C = _select(cycles, args)
    n = args.n
    if n < 1:
        raise ValidationError("--n must be >= 1")
    if n % 4:
        # fail before the (possibly long) density computation
        raise NotDivisibleByFour(f"n = {n} is not divisible by 4; no n-strict interval exists")
    mode = _mode(cfg, n, H)
    table = build_type_table(H, cycles, n * H.alpha)
    target = C if args.upper else cycles.complement(C)
    value = band_density(H, cycles, table, target, n, mode, cfg["precision"])
    _guard(value)
    prec = max(BOUND_PREC, cfg["precision"])
    if args.upper:
        cert = certify_upper(H, cycles, C, n, value, prec, args.claimed_digits)
    else:
        cert = certify_lower(H, cycles, C, n, value, prec, args.claimed_digits)
    with _sink(cfg["output"]) as out:
        out.write(cert.dumps() + "\n")
    return EXIT_OK


def cmd_diagnose(args, cfg):
    H = make_function(cfg)
    if args.T <= 0:
        raise ValidationError("--T must be positive")
    dev = local_limit_diagnostic(H, args.m, args.T)
    with _sink(cfg["output"]) as out:
        if cfg["format"] == "json":
            out.write(json.dumps({"function": H.describe(), "m": args.m, "T": args.T,
                                  "max_relative_deviation": dev}) + "\n")
        else:
            out.write(f"max |1 - P/gauss| over |t| <= {args.T} at m={args.m}: {dev:.12g}\n")
    return EXIT_OK


COMMANDS = {
    "cycles": cmd_cycles,
    "density": cmd_density,
    "sweep": cmd_sweep,
    "table": cmd_table,
    "certify": cmd_certify,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        err, code = exc, EXIT_VALIDATION
    except ResourceError as exc:
        err, code = exc, EXIT_RESOURCE
    except CertificationError as exc:
        err, code = exc, EXIT_CERTIFICATION
    except OSError as exc:
        err, code = exc, EXIT_IO
    print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
