"""Command line entry point.

Summaries go to stdout as ``key=value`` lines; progress goes to stderr.
Exit codes: 0 ok, 1 usage or insufficient data, 2 I/O, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import reference, stats, store
from .errors import (
    ContractViolation,
    IncompatibleCheckpoint,
    InsufficientDataError,
    InvariantViolation,
    ParseError,
)
from .sieve import (
    DEFAULT_SEGMENT_SIZE,
    BasePrimeOracle,
    prime_count,
    prime_counts_at,
    trial_division_is_prime,
)
from .walker import (
    CheckpointPolicy,
    heights_at,
    naive_walk,
    parallel_walk,
    triangle_ladder,
    walk,
)

log = logging.getLogger("jacobs_ladder")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INVARIANT = 0, 1, 2, 3
WORKERS_ENV = "JACOBS_LADDER_WORKERS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _kv(**pairs):
    print(" ".join(f"{k}={v}" for k, v in pairs.items()))


def zero_list_path(out_dir, level: int) -> Path:
    return Path(out_dir) / f"zeroes_level{level}.txt"


# ---------------------------------------------------------------------------
# walk


def cmd_walk(args) -> int:
    levels = args.level or [0]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cp_path = Path(args.checkpoint) if args.checkpoint else out_dir / "walk.checkpoint.json"
    track_balance = not args.no_balance
    t0 = time.perf_counter()

    def progress(state):
        log.info("n=%d y=%d crossings=%s", state.n, state.y, state.crossing_counts)

    if args.workers > 1:
        result = parallel_walk(args.limit, levels, args.workers, segment_size=args.segment_size,
                               track_balance=track_balance)
        records = {lv: result.records[lv].positions for lv in levels}
        journal = store.CrossingJournal(cp_path, levels, fresh=True)
        journal.append(records)
        store.write_checkpoint(store.Checkpoint.from_walk(result.state, result.balance,
                                                          args.segment_size), cp_path)
    else:
        policy = CheckpointPolicy(cp_path, every=args.checkpoint_every, resume=not args.fresh)
        result = walk(args.limit, levels, policy, segment_size=args.segment_size,
                      track_balance=track_balance, progress=progress)
    elapsed = time.perf_counter() - t0

    for lv in levels:
        rec = result.records[lv]
        store.write_zero_list(rec, zero_list_path(out_dir, lv))
        pos = rec.positions
        _kv(limit=args.limit, level=lv, crossings=len(pos),
            crossings_excluding_1=len([p for p in pos if p != 1]),
            last=pos[-1] if pos else "none", file=zero_list_path(out_dir, lv))
    _kv(final_n=result.state.n, final_y=result.state.y, checkpoint=cp_path)
    if result.balance is not None:
        b = result.balance
        _kv(c_pos=b.c_pos, c_neg=b.c_neg, c_zero=b.c_zero, a_pos=float(b.a_pos),
            a_neg=float(b.a_neg), slope=repr(b.slope))
    print(f"# runtime_s={elapsed:.3f} workers={args.workers}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# stats


def _load(args):
    return store.read_zero_list(args.zeroes)


def _maybe_csv(args, report):
    if getattr(args, "csv", None):
        store.export_csv(report, args.csv)
        _kv(csv=args.csv)


def stats_gaps(args) -> int:
    rec = _load(args)
    hist = stats.gap_histogram(rec)
    champs = stats.jumping_champions(hist, 3)
    _kv(crossings=len(rec.positions), total_gaps=hist.total_gaps, max_gap=hist.max_gap,
        champions=",".join(f"{g}:{c}" for g, c in champs))
    pct = stats.gap_percentage_report(hist)
    _kv(**{f"pct_gap{g}": f"{p:.4f}" for g, p in pct.per_gap.items()},
        **{f"pct_below{t}": f"{p:.4f}" for t, p in pct.below.items()},
        **{f"pct_atmost{t}": f"{p:.4f}" for t, p in pct.at_most.items()})
    limit = args.limit or rec.limit
    if limit:
        avg = stats.average_gap(rec, limit, reference.AVERAGE_GAP.get(limit))
        _kv(gamma=f"{avg.gamma:.2f}", xi=f"{avg.xi:.2f}",
            gamma_per_crossing=f"{avg.gamma_per_crossing:.2f}", xi_per_gap=f"{avg.xi_per_gap:.2f}",
            reference=reference.AVERAGE_GAP.get(limit, "none"),
            matches=",".join(avg.matches) or "none")
    if args.fit:
        fit = stats.exp_decay_fit(hist, args.cutoff)
        _kv(fit_amplitude=repr(fit.amplitude), fit_rate=repr(fit.rate),
            fit_r2=repr(fit.r_squared), fit_range=f"{fit.fit_range[0]}-{fit.fit_range[1]}")
    if args.csv:
        _maybe_csv(args, hist)
    else:
        sys.stdout.write(store.csv_text(hist))
    return EXIT_OK


def stats_benford(args) -> int:
    rep = stats.benford_histogram(_load(args))
    for d in range(1, 10):
        _kv(digit=d, count=rep.counts[d], observed=f"{rep.observed[d]:.5f}",
            expected=f"{rep.expected[d]:.5f}")
    _kv(l1=f"{rep.l1_distance:.5f}", chi_square=f"{rep.chi_square:.4f}")
    _maybe_csv(args, rep)
    return EXIT_OK


def stats_digits(args) -> int:
    rec = _load(args)
    rep = stats.last_digit_histogram(rec)
    for d in (1, 3, 5, 7, 9):
        _kv(digit=d, count=rep.counts[d], percent=f"{rep.percentages[d]:.4f}")
    _kv(a=f"{rep.a:.5f}", se_a=f"{rep.se_a:.5f}", b=f"{rep.b:.5f}", se_b=f"{rep.se_b:.5f}")
    _maybe_csv(args, rep)
    return EXIT_OK


def stats_primes(args) -> int:
    rec = _load(args)
    if not rec.positions:
        raise InsufficientDataError("no zeroes in input")
    res = stats.primes_in_zeroes(rec, BasePrimeOracle(rec.positions[-1]))
    print(res.line())
    _kv(zeroes=res.zeroes, primes=res.primes, n_over_log_n=repr(res.n_over_log_n),
        diff_percent=repr(res.diff_percent))
    return EXIT_OK


def stats_growth(args) -> int:
    rec = _load(args)
    top = args.limit or rec.limit or (rec.positions[-1] if rec.positions else 0)
    if top < 1:
        raise InsufficientDataError("cannot infer an upper bound for the growth table")
    points = args.points or [10**k for k in range(1, int(math.log10(top)) + 1)] or [top]
    points = [p for p in points if p <= top]
    pis = {} if args.no_pi else prime_counts_at(points)
    rep = stats.zero_growth_report(
        [(n, z, pis.get(n)) for n, z in stats.zero_counts_at(rec, points)])
    for r in rep.rows:
        _kv(n=r.n, zeroes=r.zeroes, sqrt_n=f"{r.sqrt_n:.3f}", cbrt_n=f"{r.cbrt_n:.3f}",
            pi_n=r.pi_n if r.pi_n is not None else "skipped", in_band=int(r.in_band))
    _maybe_csv(args, rep)
    return EXIT_OK


def _balance_source(args):
    if args.checkpoint:
        cp = store.read_checkpoint(args.checkpoint)
        if cp.balance is None:
            raise InsufficientDataError(f"{args.checkpoint} carries no balance snapshot")
        return cp.n, stats.BalanceAccumulator(**cp.balance, first=(1, 0), last=(cp.n, cp.y)), None
    if not args.limit:
        raise UsageError("give --checkpoint or --limit")
    result = walk(args.limit, [0], segment_size=args.segment_size)
    return args.limit, result.balance, result


def stats_slope(args) -> int:
    limit, acc, result = _balance_source(args)
    if args.decimation > 1:
        if result is None:
            raise UsageError("--decimation needs --limit (the checkpoint holds only totals)")
        xs = list(range(1, limit + 1, args.decimation))
        slope = stats.slope_fit(zip(xs, heights_at(result, xs)))
    else:
        slope = acc.slope
    models = stats.slope_models(limit, acc, prime_count(limit))
    _kv(limit=limit, decimation=args.decimation, slope=repr(slope), abs_slope=repr(abs(slope)))
    _kv(**{k: (repr(v) if isinstance(v, float) else v) for k, v in models.items()
           if k != "ratio_formula"})
    print(f"# ratio_based = {models['ratio_formula']}")
    return EXIT_OK


def stats_balance(args) -> int:
    _, acc, _ = _balance_source(args)
    rep = acc.report()
    _kv(**{k: (repr(v) if isinstance(v, float) else v) for k, v in rep.items()})
    _maybe_csv(args, acc)
    return EXIT_OK


STATS = {
    "gaps": stats_gaps,
    "benford": stats_benford,
    "digits": stats_digits,
    "slope": stats_slope,
    "balance": stats_balance,
    "primes": stats_primes,
    "growth": stats_growth,
}


def cmd_stats(args) -> int:
    return STATS[args.which](args)


# ---------------------------------------------------------------------------
# fixture and verify


def cmd_fixture(args) -> int:
    ladder = triangle_ladder(args.k)
    if args.csv:
        store.export_csv(ladder, args.csv)
    else:
        sys.stdout.write(store.csv_text(ladder))
    ends, total = [], 0
    for j in range(args.k):
        total += 2 * 3**j
        ends.append(total + 1)
    series = stats.slope_series(ladder.points)
    if args.series_csv:
        store.export_csv((["points", "epsilon"], series), args.series_csv)
    for k, (count, eps) in enumerate(stats.slope_series(ladder.points, at=ends), 1):
        _kv(triangles=k, points=count, epsilon=repr(eps))
    return EXIT_OK


def run_verify(limit: int, is_prime=trial_division_is_prime, segment_size: int | None = None):
    """Invariant suite; returns None when all hold, else ``(name, detail)`` of the first failure."""
    heights = naive_walk(limit, is_prime)
    size = segment_size or max(1000, limit // 7)
    result = walk(limit, [0], segment_size=size)
    oracle_zeroes = [i + 1 for i, y in enumerate(heights) if y == 0]
    if result.zeroes.positions != oracle_zeroes:
        bad = next((a, b) for a, b in zip(result.zeroes.positions + [None], oracle_zeroes + [None])
                   if a != b)
        return "oracle_equivalence", f"segmented zero {bad[0]} vs oracle zero {bad[1]}"
    sampled = heights_at(result, range(1, limit + 1, max(1, limit // 5000)))
    for x, y in zip(range(1, limit + 1, max(1, limit // 5000)), sampled):
        if heights[x - 1] != y:
            return "oracle_equivalence", f"y({x}) segmented {y} vs oracle {heights[x - 1]}"
    pi = 0
    for n in range(1, limit):
        pi += is_prime(n)
        if heights[n] - heights[n - 1] != (-1) ** pi:
            return "step_rule", f"y({n + 1}) - y({n}) != (-1)^pi({n})"
        if (heights[n] - n) % 2:
            return "height_parity", f"y({n + 1}) = {heights[n]} has the parity of n+1"
    for z in oracle_zeroes[1:]:
        if z % 4 != 3:
            return "zero_mod_4", f"zero {z} is not 3 mod 4"
    gaps = [b - a for a, b in zip(oracle_zeroes, oracle_zeroes[1:])]
    if gaps.count(2) > 1 or any(g % 4 for g in gaps if g != 2):
        bad = next(g for g in gaps if g % 4 and g != 2) if any(g % 4 and g != 2 for g in gaps) else 2
        return "gap_mod_4", f"gap {bad} breaks the multiple-of-4 rule"
    return None


def cmd_verify(args) -> int:
    if args.limit > 10**6:
        raise UsageError("verify uses trial division; --limit must be <= 1000000")
    is_prime = trial_division_is_prime
    if args.inject_prime is not None:
        fake = args.inject_prime

        def is_prime(n):
            return n == fake or trial_division_is_prime(n)

    failure = run_verify(args.limit, is_prime)
    if failure is None:
        _kv(limit=args.limit, status="ok")
        return EXIT_OK
    name, detail = failure
    _kv(limit=args.limit, status="violation", invariant=name)
    print(f"# {detail}")
    return EXIT_INVARIANT


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jacobs-ladder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("walk", help="walk the ladder and write crossing lists")
    p.add_argument("--limit", type=_positive, required=True)
    p.add_argument("--level", type=int, action="append",
                   help="height to track (repeatable, default 0)")
    p.add_argument("--segment-size", type=_positive, default=DEFAULT_SEGMENT_SIZE)
    p.add_argument("--workers", type=_positive, default=int(os.environ.get(WORKERS_ENV, "1")))
    p.add_argument("--out-dir", default=".")
    p.add_argument("--checkpoint", help="checkpoint file (default OUT_DIR/walk.checkpoint.json)")
    p.add_argument("--checkpoint-every", type=_positive, default=1, help="segments per checkpoint")
    p.add_argument("--fresh", action="store_true", help="ignore an existing checkpoint")
    p.add_argument("--no-balance", action="store_true", help="skip counts, areas and slope sums")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("stats", help="statistics on a crossing list")
    p.add_argument("which", choices=sorted(STATS))
    p.add_argument("--zeroes", help="zero list (native or b-file)")
    p.add_argument("--csv", help="also write the table as CSV")
    p.add_argument("--limit", type=_positive, help="interval upper bound")
    p.add_argument("--fit", action="store_true", help="gaps: fit an exponential decay")
    p.add_argument("--cutoff", type=_positive, default=1000, help="gaps: largest gap in the fit")
    p.add_argument("--points", type=_positive, nargs="+", help="growth: n values")
    p.add_argument("--no-pi", action="store_true", help="growth: skip pi(n)")
    p.add_argument("--checkpoint", help="slope/balance: read totals from a checkpoint")
    p.add_argument("--decimation", type=_positive, default=1, help="slope: use every d-th point")
    p.add_argument("--segment-size", type=_positive, default=DEFAULT_SEGMENT_SIZE)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("fixture", help="synthetic ladders")
    p.add_argument("kind", choices=["triangles"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--csv", help="points CSV (default stdout)")
    p.add_argument("--series-csv", help="epsilon vs point count CSV")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("verify", help="check structural invariants against trial division")
    p.add_argument("--limit", type=_positive, required=True)
    p.add_argument("--inject-prime", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    needs_zeroes = args.command == "stats" and args.which not in ("slope", "balance")
    if needs_zeroes and not args.zeroes:
        parser.error(f"stats {args.which} needs --zeroes")
    if args.command == "fixture" and args.k < 1:
        parser.error(f"--k must be >= 1, got {args.k}")
    try:
        return args.func(args)
    except (UsageError, ContractViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (OSError, ParseError, IncompatibleCheckpoint) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
