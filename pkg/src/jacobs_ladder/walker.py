"""The ladder walk: y(1) = 0 and y(n+1) - y(n) = (-1)**pi(n).

Between consecutive primes the walk is a straight line of slope +1 or -1,
so a sieved segment is processed one inter-prime run at a time: crossings,
extrema and balance sums all have closed forms per run.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import store
from .errors import ContractViolation, IncompatibleCheckpoint, RangeError
from .sieve import (
    DEFAULT_SEGMENT_SIZE,
    PrimalitySegment,
    base_primes_for,
    sieve_segment,
    trial_division_is_prime,
)
from .stats import BalanceAccumulator, link_halfunits

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WalkerState:
    """Walk cursor at position ``n``.

    ``parity`` is the parity of the number of primes below ``n``; the step
    from ``n`` applies after folding in the primality of ``n`` itself.
    """

    n: int
    y: int
    parity: int
    crossing_counts: dict = field(default_factory=dict)

    def key(self):
        return (self.n, self.y, self.parity, tuple(sorted(self.crossing_counts.items())))


@dataclass
class CrossingRecord:
    level: int
    positions: list[int]
    limit: int | None = None

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class SegmentSummary:
    """Segment shape assuming parity 0 and height 0 on entry."""

    lo: int
    hi: int
    prime_count: int
    displacement: int
    min_rel: int
    max_rel: int

    def flipped(self) -> "SegmentSummary":
        return replace(self, displacement=-self.displacement,
                       min_rel=-self.max_rel, max_rel=-self.min_rel)

    def height_range(self, entry_y: int, entry_parity: int) -> tuple[int, int]:
        if entry_parity:
            return entry_y - self.max_rel, entry_y - self.min_rel
        return entry_y + self.min_rel, entry_y + self.max_rel


def initial_state(levels: Iterable[int] = ()) -> WalkerState:
    """The point (1, 0); it counts as a crossing of level 0 when tracked."""
    return WalkerState(1, 0, 0, {lv: int(lv == 0) for lv in levels})


def step(state: WalkerState, current_is_prime: bool) -> WalkerState:
    parity = state.parity ^ int(bool(current_is_prime))
    y = state.y + (1 if parity == 0 else -1)
    counts = state.crossing_counts
    if y in counts:
        counts = {**counts, y: counts[y] + 1}
    return WalkerState(state.n + 1, y, parity, counts)


# ---------------------------------------------------------------------------
# per-segment kernel


def _exact_sum(wrapped: np.ndarray, approx: np.ndarray) -> int:
    """Exact integer total from int64 terms that may have wrapped.

    The int64 sum is exact modulo 2**64; the float sum locates the true
    value to far better than 2**63.
    """
    mod = int(wrapped.sum(dtype=np.int64))
    guess = int(round(float(approx.sum())))
    diff = (mod - guess) % (1 << 64)
    if diff >= 1 << 63:
        diff -= 1 << 64
    return guess + diff


@dataclass
class _Runs:
    """Inter-prime runs of a segment: run j climbs ``sign[j]`` per unit from ``start[j]``."""

    start: np.ndarray  # run start positions, length m + 1
    length: np.ndarray
    sign: np.ndarray
    rel: np.ndarray  # relative height at each run boundary, length m + 2

    @classmethod
    def build(cls, lo: int, hi: int, primes: np.ndarray, entry_parity: int) -> "_Runs":
        bounds = np.concatenate(([lo], primes, [hi])).astype(np.int64)
        length = np.diff(bounds)
        sign = 1 - 2 * ((np.arange(length.size, dtype=np.int64) + entry_parity) & 1)
        rel = np.zeros(bounds.size, dtype=np.int64)
        np.cumsum(sign * length, out=rel[1:])
        return cls(bounds[:-1], length, sign, rel)

    def crossings(self, target: int) -> np.ndarray:
        """Positions in (lo, hi] whose relative height equals ``target``."""
        u = self.sign * (target - self.rel[:-1])
        hit = (u >= 1) & (u <= self.length)
        return self.start[hit] + u[hit]

    def balance(self, entry_y: int) -> BalanceAccumulator:
        """Balance over points (lo, hi] and the links between them."""
        keep = self.length > 0
        b = self.start[keep]
        d = self.length[keep]
        s = self.sign[keep]
        h0 = entry_y + self.rel[:-1][keep]
        h1 = h0 + s * d
        lo_v = np.minimum(h0 + s, h1)
        hi_v = np.maximum(h0 + s, h1)
        c_pos = np.clip(hi_v - np.maximum(lo_v, 1) + 1, 0, None)
        c_neg = np.clip(np.minimum(hi_v, -1) - lo_v + 1, 0, None)
        c_zero = (lo_v <= 0) & (hi_v >= 0)

        m, mx = np.minimum(h0, h1), np.maximum(h0, h1)
        pos_hi, pos_lo = np.maximum(mx, 0), np.maximum(m, 0)
        neg_lo, neg_hi = np.minimum(m, 0), np.minimum(mx, 0)
        a_pos = _exact_sum(pos_hi * pos_hi - pos_lo * pos_lo,
                           pos_hi.astype(float) ** 2 - pos_lo.astype(float) ** 2)
        a_neg = _exact_sum(neg_lo * neg_lo - neg_hi * neg_hi,
                           neg_lo.astype(float) ** 2 - neg_hi.astype(float) ** 2)
        # sum over i=1..d of (b+i)(h0+s*i)
        t1 = d * (d + 1) // 2
        t2 = d * (d + 1) * (2 * d + 1) // 6
        xy = d * b * h0 + (b * s + h0) * t1 + s * t2
        bf, hf, df = b.astype(float), h0.astype(float), d.astype(float)
        xy_f = df * bf * hf + (bf * s + hf) * t1.astype(float) + s * t2.astype(float)

        acc = BalanceAccumulator(
            c_pos=int(c_pos.sum()),
            c_neg=int(c_neg.sum()),
            c_zero=int(c_zero.sum()),
            a_pos_halfunits=a_pos,
            a_neg_halfunits=a_neg,
            sum_xy=_exact_sum(xy, xy_f),
        )
        if b.size:
            lo, hi = int(b[0]), int(b[-1] + d[-1])
            acc.sum_x = (hi * (hi + 1) - lo * (lo + 1)) // 2
            acc.sum_x2 = (hi * (hi + 1) * (2 * hi + 1) - lo * (lo + 1) * (2 * lo + 1)) // 6
            first_y = entry_y + int(s[0])
            acc.first = (lo + 1, first_y)
            acc.last = (hi, int(h1[-1]))
            # drop the link from lo, which belongs to the join with the previous run
            p, q = link_halfunits(entry_y, first_y)
            acc.a_pos_halfunits -= p
            acc.a_neg_halfunits -= q
        return acc


def summarize_segment(seg: PrimalitySegment) -> SegmentSummary:
    runs = _Runs.build(seg.lo, seg.hi, seg.primes(), 0)
    return SegmentSummary(seg.lo, seg.hi, seg.prime_count, int(runs.rel[-1]),
                          int(runs.rel.min()), int(runs.rel.max()))


class SegmentWalk(NamedTuple):
    state: WalkerState
    crossings: dict
    summary: SegmentSummary
    balance: BalanceAccumulator | None


def walk_segment(entry: WalkerState, seg: PrimalitySegment, tracked_levels: Sequence[int] = (0,),
                 with_balance: bool = False) -> SegmentWalk:
    """Walk every step from ``n`` in ``[seg.lo, seg.hi)``.

    ``crossings`` maps each tracked level to the positions in ``(lo, hi]`` at
    that height. With ``with_balance`` the result also carries a
    `BalanceAccumulator` over the points ``(lo, hi]``, ready to be merged
    onto one that ends at ``lo``.
    """
    if entry.n != seg.lo:
        raise ContractViolation(f"entry at n={entry.n} but segment starts at {seg.lo}")
    runs = _Runs.build(seg.lo, seg.hi, seg.primes(), entry.parity)
    lo_rel, hi_rel = int(runs.rel.min()), int(runs.rel.max())
    crossings = {}
    counts = dict(entry.crossing_counts)
    for level in tracked_levels:
        target = level - entry.y
        hits = runs.crossings(target).tolist() if lo_rel <= target <= hi_rel else []
        crossings[level] = hits
        if level in counts:
            counts[level] += len(hits)
    disp = int(runs.rel[-1])
    exit_state = WalkerState(seg.hi, entry.y + disp, entry.parity ^ (seg.prime_count & 1), counts)
    summary = SegmentSummary(seg.lo, seg.hi, seg.prime_count, disp, lo_rel, hi_rel)
    if entry.parity:
        summary = summary.flipped()
    acc = runs.balance(entry.y) if with_balance else None
    return SegmentWalk(exit_state, crossings, summary, acc)


# ---------------------------------------------------------------------------
# drivers


@dataclass
class WalkResult:
    limit: int
    records: dict[int, CrossingRecord]
    state: WalkerState
    segment_size: int
    boundaries: list[tuple[int, int, int]]  # (n, y, parity) at each segment start
    balance: BalanceAccumulator | None = None

    @property
    def zeroes(self) -> CrossingRecord:
        return self.records[0]


@dataclass
class CheckpointPolicy:
    """Write a checkpoint every ``every`` segments to ``path``.

    Crossings are appended to journal files next to ``path`` before the
    checkpoint itself is replaced, so a checkpoint never refers to data
    that was not yet written.
    """

    path: Path
    every: int = 1
    resume: bool = True
    on_checkpoint: Callable | None = None  # called with the state after each write

    def __post_init__(self):
        self.path = Path(self.path)


def _prefix(levels: Sequence[int], limit: int, track_balance: bool):
    """State and records after the synthetic step (1, 0) -> (2, 1)."""
    state = initial_state(levels)
    records = {lv: [] for lv in levels}
    if 0 in records:
        records[0].append(1)
    acc = BalanceAccumulator() if track_balance else None
    if acc is not None:
        acc.add(1, 0)
    if limit >= 2:
        state = step(state, trial_division_is_prime(1))
        if state.y in records:
            records[state.y].append(2)
        if acc is not None:
            acc.add(2, state.y)
    return state, records, acc


def _segment_bounds(start: int, limit: int, segment_size: int):
    """Steps from n in [start, limit) in segments aligned to 2 + k*segment_size."""
    lo = start
    while lo < limit:
        k = (lo - 2) // segment_size + 1
        hi = min(2 + k * segment_size, limit)
        yield lo, hi
        lo = hi


def _check_args(limit, levels, segment_size):
    if limit < 1:
        raise ContractViolation(f"limit must be >= 1, got {limit}")
    if segment_size <= 0:
        raise ContractViolation(f"segment_size must be positive, got {segment_size}")
    levels = list(dict.fromkeys(levels))
    if not levels:
        raise ContractViolation("at least one level must be tracked")
    return levels


def walk(limit: int, tracked_levels: Sequence[int] = (0,), checkpoint: CheckpointPolicy | None = None,
         *, segment_size: int = DEFAULT_SEGMENT_SIZE, track_balance: bool = True,
         progress: Callable | None = None) -> WalkResult:
    """Sequential walk over positions 1..limit."""
    levels = _check_args(limit, tracked_levels, segment_size)
    state, records, acc = _prefix(levels, limit, track_balance)
    boundaries = []

    journals = None
    if checkpoint is not None:
        resumed = None
        if checkpoint.resume:
            resumed = store.try_resume(checkpoint.path, levels, segment_size, track_balance)
        if resumed is not None:
            cp, positions = resumed
            if cp.n > max(limit, 2):
                raise IncompatibleCheckpoint(f"checkpoint at n={cp.n} is beyond limit {limit}")
            state = WalkerState(cp.n, cp.y, cp.parity, dict(cp.level_counts))
            records = positions
            if track_balance:
                acc = BalanceAccumulator(**cp.balance, first=(1, 0), last=(cp.n, cp.y))
            log.info("resuming at n=%d", cp.n)
        fresh = resumed is None
        journals = store.CrossingJournal(checkpoint.path, levels, fresh=fresh)
        if not fresh:
            journals.truncate({lv: len(records[lv]) for lv in levels})

    base = base_primes_for(limit)
    done = 0
    for lo, hi in _segment_bounds(max(state.n, 2), limit, segment_size):
        boundaries.append((state.n, state.y, state.parity))
        seg = sieve_segment(lo, hi, base)
        state, hits, _, part = walk_segment(state, seg, levels, acc is not None)
        if acc is not None:
            acc = acc.merge(part)
        for lv in levels:
            records[lv].extend(hits[lv])
        done += 1
        if journals is not None and (done % checkpoint.every == 0 or hi == limit):
            journals.append(records)
            store.write_checkpoint(store.Checkpoint.from_walk(state, acc, segment_size), checkpoint.path)
            if checkpoint.on_checkpoint is not None:
                checkpoint.on_checkpoint(state)
        if progress is not None:
            progress(state)
    if journals is not None and done == 0:
        journals.append(records)
        store.write_checkpoint(store.Checkpoint.from_walk(state, acc, segment_size), checkpoint.path)

    return WalkResult(limit, {lv: CrossingRecord(lv, records[lv], limit) for lv in levels},
                      state, segment_size, boundaries, acc)


# parallel machinery; module-level so worker processes can unpickle the jobs

_WORKER_BASE = None


def _init_worker(base):
    global _WORKER_BASE
    _WORKER_BASE = base


def _phase1(bounds):
    lo, hi = bounds
    return summarize_segment(sieve_segment(lo, hi, _WORKER_BASE))


def _rewalk(job):
    lo, hi, entry, levels, with_balance = job
    seg = sieve_segment(lo, hi, _WORKER_BASE)
    return walk_segment(entry, seg, levels, with_balance)


def parallel_walk(limit: int, tracked_levels: Sequence[int] = (0,), worker_count: int = 1, *,
                  segment_size: int = DEFAULT_SEGMENT_SIZE, track_balance: bool = False) -> WalkResult:
    """Two-phase walk producing the same result as `walk`.

    Phase 1 summarises every segment assuming parity 0 at entry; a
    sequential pass fixes each segment's true entry height and parity;
    phase 2 re-walks only segments whose height range meets a tracked level
    (all of them when ``track_balance`` is set).
    """
    levels = _check_args(limit, tracked_levels, segment_size)
    if worker_count < 1:
        raise ContractViolation(f"worker_count must be >= 1, got {worker_count}")
    state, records, acc = _prefix(levels, limit, track_balance)
    bounds = list(_segment_bounds(2, limit, segment_size))
    base = base_primes_for(limit)

    if worker_count == 1:
        _init_worker(base)
        pool = None
        mapper = map
    else:
        pool = ProcessPoolExecutor(worker_count, initializer=_init_worker, initargs=(base,))
        mapper = pool.map
    try:
        summaries = list(mapper(_phase1, bounds))

        entries = []
        cur = state
        for s in summaries:
            entries.append(cur)
            sign = -1 if cur.parity else 1
            cur = WalkerState(s.hi, cur.y + sign * s.displacement, cur.parity ^ (s.prime_count & 1))
        final = cur

        jobs = []
        for s, entry in zip(summaries, entries):
            lo_y, hi_y = s.height_range(entry.y, entry.parity)
            if track_balance or any(lo_y <= lv <= hi_y for lv in levels):
                jobs.append((s.lo, s.hi, WalkerState(entry.n, entry.y, entry.parity), levels, track_balance))
        results = list(mapper(_rewalk, jobs))
    finally:
        if pool is not None:
            pool.shutdown()

    for _, hits, _, part in results:
        for lv in levels:
            records[lv].extend(hits[lv])
        if acc is not None:
            acc = acc.merge(part)
    counts = {lv: len(records[lv]) for lv in levels}
    final = WalkerState(final.n, final.y, final.parity, counts)
    if limit == 1:
        final = initial_state(levels)
    boundaries = [(e.n, e.y, e.parity) for e in entries]
    return WalkResult(limit, {lv: CrossingRecord(lv, records[lv], limit) for lv in levels},
                      final, segment_size, boundaries, acc)


# ---------------------------------------------------------------------------
# queries against a finished walk


def _entry_before(result: WalkResult, x: int) -> tuple[int, int, int]:
    best = (2, 1, 0)
    for b in result.boundaries:
        if b[0] <= x and b[0] > best[0]:
            best = b
    return best


def _runs_covering(result: WalkResult, a: int, b: int):
    """Yield ``(runs, entry_y)`` for segments that together cover steps from [a, b)."""
    n, y, parity = _entry_before(result, a)
    base = base_primes_for(result.limit)
    for lo, hi in _segment_bounds(n, b, result.segment_size):
        seg = sieve_segment(lo, hi, base)
        runs = _Runs.build(lo, hi, seg.primes(), parity)
        yield lo, hi, runs, y
        y += int(runs.rel[-1])
        parity ^= seg.prime_count & 1


def _check_range(result: WalkResult, *xs: int) -> None:
    for x in xs:
        if not 1 <= x <= result.limit:
            raise RangeError(f"position {x} outside walked range [1, {result.limit}]")


def heights_at(result: WalkResult, positions: Iterable[int]) -> list[int]:
    """y(x) for each requested position, re-sieving only the segments that hold them."""
    xs = list(positions)
    _check_range(result, *xs)
    out = {1: 0, 2: 1}
    pending = sorted({x for x in xs if x not in out})
    size = result.segment_size
    i = 0
    while i < len(pending):
        x = pending[i]
        stop = min(result.limit, 2 + -(-(x - 2) // size) * size)
        for lo, hi, runs, y in _runs_covering(result, x - 1, stop):
            j = i
            while j < len(pending) and pending[j] <= hi:
                j += 1
            if j == i:
                continue
            arr = np.array(pending[i:j], dtype=np.int64)
            k = np.searchsorted(runs.start, arr, side="left") - 1
            h = y + runs.rel[k] + runs.sign[k] * (arr - runs.start[k])
            out.update(zip(pending[i:j], h.tolist()))
            i = j
    return [out[x] for x in xs]


def interval_imbalance(x_from: int, x_to: int, result: WalkResult) -> int:
    """Total length of rising inter-prime intervals minus falling ones over [x_from, x_to].

    Telescopes to ``y(x_to) - y(x_from)``.
    """
    _check_range(result, x_from, x_to)
    if x_from > x_to:
        raise RangeError(f"empty interval [{x_from}, {x_to}]")
    total = 0
    if x_from < 2 <= x_to:
        total += 1  # the step 1 -> 2 rises
    a = max(x_from, 2)
    if a < x_to:
        for _, _, runs, _ in _runs_covering(result, a, x_to):
            ends = runs.start + runs.length
            overlap = np.clip(np.minimum(ends, x_to) - np.maximum(runs.start, a), 0, None)
            total += int((runs.sign * overlap).sum())
    return total


def naive_walk(limit: int, is_prime: Callable[[int], bool] = trial_division_is_prime) -> list[int]:
    """Heights y(1..limit) by repeated `step`; oracle for the segmented walk."""
    state = initial_state()
    heights = [0]
    while state.n < limit:
        state = step(state, is_prime(state.n))
        heights.append(state.y)
    return heights


@dataclass
class TriangleLadder:
    """Stacked triangles whose peaks grow by a factor of 3; zeroes at every triangle foot."""

    points: list[tuple[int, int]]

    @property
    def zeroes(self) -> list[int]:
        return [x for x, y in self.points if y == 0]

    @property
    def peaks(self) -> list[int]:
        ys = [y for _, y in self.points]
        return [ys[i] for i in range(1, len(ys) - 1) if ys[i - 1] < ys[i] > ys[i + 1]]

    def csv_table(self):
        return ["x", "y"], self.points


def triangle_ladder(k: int) -> TriangleLadder:
    if k < 1:
        raise ContractViolation(f"k must be >= 1, got {k}")
    points = [(0, 0)]
    x = 0
    for j in range(k):
        h = 3**j
        for i in range(1, 2 * h + 1):
            points.append((x + i, i if i <= h else 2 * h - i))
        x += 2 * h
    return TriangleLadder(points)
