"""Command-line driver: compute, tune, verify.

`compute` runs the full pipeline on one discriminant and prints the group.
`tune` repeats it over a one-parameter grid (tolerance, factor-base size, or
large-prime ratio) and tabulates wall times, the raw material for
time-vs-parameter curves.  `verify` sweeps fundamental discriminants inside
the oracle's range and compares the pipeline against exhaustive enumeration.

Exit codes: 0 success, 2 window violation (or lattice failure after
retries), 3 verification mismatch, 4 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import statistics
import sys
import time
from dataclasses import dataclass, field

from .classnumber import WindowViolation, group_structure
from .elimination import CostParams, EliminationError
from .forms import is_discriminant, is_fundamental
from .oracle import ORACLE_LIMIT, group_structure as oracle_structure
from .sieve import DEFAULT_TOLERANCE, CollectBudget, SieveError

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_WINDOW = 2
EXIT_MISMATCH = 3
EXIT_CONFIG = 4


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; 2 means window violation here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    delta: int
    fb_size: int | None = None
    b1: int | None = None
    ratio: int = 120
    tolerance: float | None = None
    lp_count: int = 2
    cost: CostParams = field(default_factory=CostParams)
    seed: int = 1
    workers: int = 1
    relations: str | None = None
    stats: str | None = None

    def kwargs(self) -> dict:
        return dict(fb_bound=self.b1, fb_size=self.fb_size,
                    lp_count=self.lp_count, ratio=self.ratio,
                    tolerance=self.tolerance, seed=self.seed,
                    workers=self.workers, cost=self.cost,
                    relations_path=self.relations)


def _parse_family(text: str) -> int:
    """n, or the spelled-out form 10^n+1, for the family delta = -4(10^n+1)."""
    t = text.strip().replace(" ", "")
    if t.startswith("10^") and t.endswith("+1"):
        t = t[3:-2]
    n = int(t)
    if n < 1:
        raise ValueError(f"family exponent must be positive, got {n}")
    return -4 * (10 ** n + 1)


def _resolve_delta(args, parser) -> int:
    if (args.delta is None) == (args.delta_family is None):
        parser.error("exactly one of --delta / --delta-family is required")
    if args.delta is not None:
        delta = args.delta
    else:
        try:
            delta = _parse_family(args.delta_family)
        except ValueError as e:
            parser.error(str(e))
    if not is_discriminant(delta):
        parser.error(f"{delta} is not a negative quadratic discriminant")
    return delta


def _config_from(args, delta: int) -> RunConfig:
    if args.fb_size is not None and args.b1 is not None:
        raise ValueError("--fb-size and --b1 are alternatives, not companions")
    cost = CostParams(c=args.cost_c, q=args.cost_q, k_discard=args.discard_k,
                      w=args.merge_w)
    return RunConfig(delta=delta, fb_size=args.fb_size, b1=args.b1,
                     ratio=args.ratio, tolerance=args.tolerance,
                     lp_count=args.lp, cost=cost, seed=args.seed,
                     workers=args.workers,
                     relations=getattr(args, "relations", None),
                     stats=args.stats)


class StatsWriter:
    """JSON-lines stats sink; one record per pipeline phase."""

    def __init__(self, path: str | None):
        self.fh = open(path, "a") if path else None

    def emit(self, record: str, **payload):
        if self.fh is None:
            return
        payload["record"] = record
        self.fh.write(json.dumps(payload, sort_keys=True) + "\n")
        self.fh.flush()

    def close(self):
        if self.fh is not None:
            self.fh.close()


def _emit_phases(stats: StatsWriter, cfg: RunConfig, rep: dict):
    stats.emit("config", delta=cfg.delta, fb_size=rep.get("fb_size"),
               fb_bound=rep.get("fb_bound"), b1=rep.get("b1"),
               b2=rep.get("b2"), lp=rep.get("lp_count"), ratio=cfg.ratio,
               tolerance=cfg.tolerance, cost=dataclasses.asdict(cfg.cost),
               seed=cfg.seed, workers=cfg.workers)
    stats.emit("hstar", hstar=rep.get("hstar"),
               prime_bound=rep.get("euler_prime_bound"))
    if "collect" in rep:
        stats.emit("collect", **rep["collect"], raw_rows=rep.get("raw_rows"),
                   purged_shape=rep.get("purged_shape"),
                   resumed=rep.get("resumed", 0))
    if "elim_records" in rep:
        stats.emit("eliminate", sweeps=rep["elim_records"],
                   pair_transforms=rep.get("pair_transforms"),
                   reduced_shape=rep.get("reduced_shape"))
    if "h_i" in rep:
        stats.emit("class_number", h=rep.get("h"), h_i=rep["h_i"])
    stats.emit("result", delta=cfg.delta, h=rep.get("h"),
               divisors=rep.get("divisors"), retries=rep.get("retries"))
    # timings ride in their own record so result records stay reproducible
    stats.emit("timings",
               **{k: round(v, 6) for k, v in rep.get("timings", {}).items()})


def cmd_compute(args, parser) -> int:
    delta = _resolve_delta(args, parser)
    cfg = _config_from(args, delta)
    stats = StatsWriter(cfg.stats)
    rep: dict = {}
    try:
        t0 = time.monotonic()
        g = group_structure(delta, report=rep, **cfg.kwargs())
        wall = time.monotonic() - t0
    except WindowViolation as e:
        _emit_phases(stats, cfg, rep)
        stats.close()
        print(f"window violation: {e}", file=sys.stderr)
        return EXIT_WINDOW
    except EliminationError as e:
        stats.close()
        print(f"elimination failed: {e}", file=sys.stderr)
        return EXIT_WINDOW
    except (SieveError, CollectBudget) as e:
        stats.close()
        print(f"configuration cannot produce relations: {e}", file=sys.stderr)
        return EXIT_CONFIG
    _emit_phases(stats, cfg, rep)
    stats.close()
    hs = rep["hstar"]
    print(f"Cl({delta}) = {g}")
    print(f"h = {g.h}, certified in [{hs}, {2 * hs}), "
          f"{wall:.2f}s, retries {rep.get('retries', 0)}")
    return EXIT_OK


def _parse_grid(text: str, conv) -> list:
    vals = [conv(tok) for tok in text.split(",") if tok.strip()]
    return vals


def cmd_tune(args, parser) -> int:
    delta = _resolve_delta(args, parser)
    cfg = _config_from(args, delta)
    grids = [(name, text) for name, text in
             [("tolerance", args.t_grid), ("fb_size", args.fb_grid),
              ("ratio", args.ratio_grid)] if text is not None]
    if len(grids) != 1:
        parser.error("exactly one of --t-grid / --fb-grid / --ratio-grid "
                     "is required")
    name, text = grids[0]
    conv = float if name == "tolerance" else int
    values = _parse_grid(text, conv)
    if not values:
        parser.error(f"--{name.replace('_', '-')}-grid is empty")
    seeds = _parse_grid(args.seeds, int)
    if not seeds:
        parser.error("--seeds is empty")

    stats = StatsWriter(cfg.stats)
    rows = []
    for value in values:
        times, counts, err = [], {}, None
        for seed in seeds:
            kw = cfg.kwargs()
            kw[name] = value
            kw["seed"] = seed
            rep: dict = {}
            t0 = time.monotonic()
            try:
                group_structure(delta, report=rep, **kw)
            except (WindowViolation, EliminationError, SieveError,
                    CollectBudget, ValueError) as e:
                err = f"{type(e).__name__}: {e}"
                log.warning("tune point %s=%s seed=%d failed: %s",
                            name, value, seed, err)
                continue
            times.append(time.monotonic() - t0)
            counts = rep.get("collect", {})
        med = statistics.median(times) if times else None
        rows.append((value, med, times, counts, err))
        stats.emit("tune_point", parameter=name, value=value,
                   seconds=[round(t, 3) for t in times],
                   median=round(med, 3) if med is not None else None,
                   counts=counts, error=err)
    stats.close()

    print(f"tune {name} on delta={delta} (seeds {seeds})")
    print(f"{name:>10}  {'median_s':>9}  {'fulls':>7}  {'partial1':>8}  "
          f"{'partial2':>8}  note")
    for value, med, times, counts, err in rows:
        med_s = f"{med:9.2f}" if med is not None else "        -"
        print(f"{value!s:>10}  {med_s}  {counts.get('fulls', 0):>7}  "
              f"{counts.get('partial1', 0):>8}  {counts.get('partial2', 0):>8}"
              f"  {err or ''}")
    ok = [r for r in rows if r[1] is not None]
    if not ok:
        print("every grid point failed", file=sys.stderr)
        return EXIT_WINDOW
    best = min(ok, key=lambda r: r[1])
    print(f"best: {name} = {best[0]} at {best[1]:.2f}s median")
    return EXIT_OK


def _parse_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return int(lo), int(hi)


def cmd_verify(args, parser) -> int:
    try:
        lo, hi = _parse_range(args.verify_range)
    except ValueError:
        parser.error(f"bad --verify-range {args.verify_range!r}, want a:b")
    if lo < 0 or hi < 0:
        parser.error("--verify-range bounds are magnitudes |delta|, "
                     "so they must be nonnegative")
    if hi > ORACLE_LIMIT:
        parser.error(f"oracle range tops out at |delta| <= {ORACLE_LIMIT}")

    candidates = [-d for d in range(max(lo, 3), hi + 1)
                  if is_fundamental(-d)]
    if args.sample is not None and args.sample < len(candidates):
        import random
        rng = random.Random(args.seed)
        candidates = sorted(rng.sample(candidates, args.sample), reverse=True)

    stats = StatsWriter(args.stats)
    mismatches = 0
    t0 = time.monotonic()
    for i, delta in enumerate(candidates):
        try:
            got = list(group_structure(delta, seed=args.seed,
                                       workers=args.workers).divisors)
        except (WindowViolation, EliminationError, CollectBudget,
                SieveError) as e:
            mismatches += 1
            print(f"MISMATCH delta={delta}: pipeline failed "
                  f"({type(e).__name__}: {e})")
            stats.emit("verify_mismatch", delta=delta, pipeline=None,
                       error=str(e))
            continue
        want = oracle_structure(delta)
        okay = got == want
        if not okay:
            mismatches += 1
            print(f"MISMATCH delta={delta}: pipeline {got} oracle {want}")
            stats.emit("verify_mismatch", delta=delta, pipeline=got,
                       oracle=want)
        if args.progress and (i + 1) % args.progress == 0:
            print(f"  {i + 1}/{len(candidates)} checked, "
                  f"{mismatches} mismatches, {time.monotonic() - t0:.0f}s",
                  flush=True)
    stats.emit("verify_summary", checked=len(candidates),
               mismatches=mismatches, range=[lo, hi], sample=args.sample)
    stats.close()
    print(f"verified {len(candidates)} fundamental discriminants in "
          f"[{lo}, {hi}]: {mismatches} mismatches")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def _add_common(p: argparse.ArgumentParser, with_delta: bool = True):
    if with_delta:
        p.add_argument("--delta", type=int, default=None,
                       help="discriminant (negative, 0 or 1 mod 4)")
        p.add_argument("--delta-family", default=None, metavar="N",
                       help="benchmark family -4(10^N+1); accepts N or "
                            "'10^N+1'")
    p.add_argument("--fb-size", type=int, default=None,
                   help="factor base size (primes); default from |delta|")
    p.add_argument("--b1", type=int, default=None,
                   help="factor base prime bound B1 (alternative to "
                        "--fb-size)")
    p.add_argument("--ratio", type=int, default=120,
                   help="large prime bound ratio B2/B1 (default 120)")
    p.add_argument("--tolerance", type=float, default=None,
                   help="sieve threshold slack T; defaults "
                        f"{DEFAULT_TOLERANCE}")
    p.add_argument("--lp", type=int, choices=(0, 1, 2), default=2,
                   help="large primes per relation (default 2)")
    p.add_argument("--cost-c", type=int, default=100,
                   help="coefficient weight in the pivot cost (default 100)")
    p.add_argument("--cost-q", type=int, default=8,
                   help="per-merge candidate cap (default 8)")
    p.add_argument("--discard-k", type=int, default=10,
                   help="heaviest rows discarded per sweep (default 10)")
    p.add_argument("--merge-w", type=int, default=120,
                   help="final column weight level for merges (default 120)")
    p.add_argument("--seed", type=int, default=1, help="RNG seed (default 1)")
    p.add_argument("--workers", type=int, default=1,
                   help="sieve worker threads (default 1)")
    p.add_argument("--stats", default=None, metavar="PATH",
                   help="append JSON-lines phase records here")


def build_parser() -> _Parser:
    parser = _Parser(prog="classgroup",
                     description="Class group structure of imaginary "
                                 "quadratic orders")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="INFO-level logging")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    pc = sub.add_parser("compute", help="compute Cl(delta) end to end")
    _add_common(pc)
    pc.add_argument("--relations", default=None, metavar="PATH",
                    help="relation file to append to and resume from")

    pt = sub.add_parser("tune", help="sweep one parameter, tabulate times")
    _add_common(pt)
    pt.add_argument("--t-grid", default=None, metavar="A,B,...",
                    help="tolerance grid, e.g. 1.5,2.0,2.5,3.0,3.5")
    pt.add_argument("--fb-grid", default=None, metavar="A,B,...",
                    help="factor base size grid")
    pt.add_argument("--ratio-grid", default=None, metavar="A,B,...",
                    help="B2/B1 ratio grid, e.g. 12,120,1200")
    pt.add_argument("--seeds", default="1", metavar="A,B,...",
                    help="seeds per grid point; median is reported")

    pv = sub.add_parser("verify", help="compare pipeline against the oracle")
    pv.add_argument("--verify-range", required=True, metavar="A:B",
                    help="|delta| range to sweep (fundamental only)")
    pv.add_argument("--sample", type=int, default=None,
                    help="check only a random sample of this size")
    pv.add_argument("--seed", type=int, default=1,
                    help="seed for sampling and the pipeline (default 1)")
    pv.add_argument("--workers", type=int, default=1,
                    help="sieve worker threads (default 1)")
    pv.add_argument("--progress", type=int, default=None, metavar="N",
                    help="print a progress line every N discriminants")
    pv.add_argument("--stats", default=None, metavar="PATH",
                    help="append JSON-lines records here")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command is None:
        parser.error("a command is required: compute, tune, or verify")
    try:
        if args.command == "compute":
            return cmd_compute(args, parser)
        if args.command == "tune":
            return cmd_tune(args, parser)
        return cmd_verify(args, parser)
    except ValueError as e:
        print(f"bad configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
