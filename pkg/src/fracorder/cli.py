"""Command line entry point: ``fracorder run | scan | verify``."""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ConfigError, load_config
from .runner import COST_COLUMNS, curve_rows, emit, run, _write_csv

EXIT_USAGE = 1


def thread_cap():
    raw = os.environ.get("FRACORDER_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FRACORDER_THREADS: expected an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("FRACORDER_THREADS: must be >= 1")
    return n


def _formats(text):
    out = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in out if p not in ("csv", "json")]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"formats must be drawn from csv,json (got {text!r})")
    return out


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _out_dirs(configs, out):
    """One directory per config; batches get a subdirectory per scenario name."""
    if len(configs) == 1:
        return [out]
    seen, dirs = {}, []
    for cfg in configs:
        k = seen.get(cfg.name, 0)
        seen[cfg.name] = k + 1
        dirs.append(os.path.join(out, cfg.name if k == 0 else f"{cfg.name}-{k}"))
    return dirs


def cmd_run(args):
    configs = [load_config(p).with_overrides(args.grid, args.jmax) for p in args.config]
    dirs = _out_dirs(configs, args.out)

    def one(pair):
        cfg, out = pair
        arts = run(cfg)
        emit(arts, out, args.formats)
        return cfg.name, arts

    workers = min(thread_cap(), len(configs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, zip(configs, dirs)))
    else:
        results = [one(pair) for pair in zip(configs, dirs)]
    code = 0
    for name, arts in results:
        r = arts.report
        print(f"{name}: s_star={r.s_star:.12g} J={r.J_star:.12g} "
              f"verdict={r.verdict.value} exit={arts.exit_code}")
        code = max(code, arts.exit_code)
    return code


def cmd_scan(args):
    cfg = load_config(args.config).with_overrides(J_max=args.jmax)
    scenario, spec = cfg.build()
    if not 0 < args.s_min < args.s_max < spec.L:
        raise ConfigError(f"scan range: need 0 < s-min < s-max < L={spec.L:g}")
    rows = curve_rows(scenario, spec, np.geomspace(args.s_min, args.s_max, args.points))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_csv(os.path.join(args.out, "cost_curve.csv"), COST_COLUMNS, rows)
    else:
        print(",".join(COST_COLUMNS))
        for row in rows:
            print(",".join("%.17g" % v for v in row))
    return 0


def cmd_verify(args):
    from .verify import run_all
    results = run_all(args.only, echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="fracorder", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="optimize s for one or more scenario files")
    r.add_argument("--config", action="append", required=True,
                   help="scenario JSON (repeat for a batch)")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--formats", type=_formats, default=("csv", "json"))
    r.add_argument("--grid", type=_positive_int, help="override optimizer grid points")
    r.add_argument("--jmax", type=_positive_int, help="override basis truncation")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("scan", help="cost curve on a log grid, no optimization")
    s.add_argument("--config", required=True)
    s.add_argument("--s-min", type=float, required=True)
    s.add_argument("--s-max", type=float, required=True)
    s.add_argument("--points", type=_positive_int, required=True)
    s.add_argument("--jmax", type=_positive_int)
    s.add_argument("--out", help="directory for cost_curve.csv (default: stdout)")
    s.set_defaults(func=cmd_scan)

    v = sub.add_parser("verify", help="run the built-in oracle and property checks")
    v.add_argument("--only", type=int, action="append",
                   help="criterion number to run (repeatable)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fracorder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fracorder: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
