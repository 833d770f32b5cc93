"""Diagnostics computed from a ladder walk or its crossing records."""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InsufficientDataError, InvariantViolation

# ---------------------------------------------------------------------------
# gaps


@dataclass
class GapHistogram:
    counts: dict[int, int]
    total_gaps: int
    max_gap: int

    def csv_table(self):
        return ["gap", "count"], [(g, c) for g, c in sorted(self.counts.items())]


def _positions(crossings) -> Sequence[int]:
    return getattr(crossings, "positions", crossings)


def gap_histogram(crossings) -> GapHistogram:
    pos = _positions(crossings)
    if len(pos) < 2:
        raise InsufficientDataError(f"need at least 2 crossings, got {len(pos)}")
    gaps = np.diff(np.asarray(pos, dtype=np.int64))
    values, counts = np.unique(gaps, return_counts=True)
    hist = {int(g): int(c) for g, c in zip(values, counts)}
    return GapHistogram(hist, int(gaps.size), int(values[-1]))


@dataclass
class ExpDecayFit:
    """``count ~ amplitude * exp(-rate * gap)``."""

    amplitude: float
    rate: float
    r_squared: float
    fit_range: tuple[int, int]


def exp_decay_fit(hist: GapHistogram, max_gap_cutoff: int = 1000) -> ExpDecayFit:
    """Unweighted least squares of log(count) against gap size for gaps <= cutoff."""
    pts = sorted((g, c) for g, c in hist.counts.items() if g <= max_gap_cutoff and c > 0)
    if len(pts) < 3:
        raise InsufficientDataError(
            f"need 3 distinct gap sizes <= {max_gap_cutoff}, got {len(pts)}"
        )
    x = np.array([g for g, _ in pts], dtype=float)
    y = np.log(np.array([c for _, c in pts], dtype=float))
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    sst = float(((y - ym) ** 2).sum())
    r2 = 1.0 if sst == 0 else max(0.0, 1.0 - float((resid**2).sum()) / sst)
    return ExpDecayFit(math.exp(intercept), -slope, r2, (pts[0][0], pts[-1][0]))


def jumping_champions(hist: GapHistogram, k: int) -> list[tuple[int, int]]:
    """Top-k gaps by count; ties go to the smaller gap."""
    ranked = sorted(hist.counts.items(), key=lambda gc: (-gc[1], gc[0]))
    return ranked[:k]


@dataclass
class AverageGap:
    gamma: float  # sum of gaps / number of gaps
    xi: float  # interval length / number of crossings
    gamma_per_crossing: float  # sum of gaps / number of crossings
    xi_per_gap: float  # interval length / number of gaps
    matches: list[str] = field(default_factory=list)


def average_gap(crossings, interval_limit: int, reference: float | None = None,
                rel_tol: float = 0.01) -> AverageGap:
    """Both averaged-gap definitions, each also with the other divisor.

    With ``reference`` set, ``matches`` names every variant within ``rel_tol``
    of it.
    """
    pos = _positions(crossings)
    if len(pos) < 2:
        raise InsufficientDataError(f"need at least 2 crossings, got {len(pos)}")
    if interval_limit < pos[-1]:
        raise InsufficientDataError(f"interval limit {interval_limit} below last crossing {pos[-1]}")
    span = pos[-1] - pos[0]
    n = len(pos)
    out = AverageGap(span / (n - 1), interval_limit / n, span / n, interval_limit / (n - 1))
    if reference is not None:
        for name in ("gamma", "xi", "gamma_per_crossing", "xi_per_gap"):
            if abs(getattr(out, name) - reference) <= rel_tol * abs(reference):
                out.matches.append(name)
    return out


@dataclass
class GapPercentages:
    total_gaps: int
    per_gap: dict[int, float]
    below: dict[int, float]
    at_most: dict[int, float]

    def csv_table(self):
        rows = [(f"gap=={g}", p) for g, p in self.per_gap.items()]
        rows += [(f"gap<{t}", p) for t, p in self.below.items()]
        rows += [(f"gap<={t}", p) for t, p in self.at_most.items()]
        return ["selector", "percent"], rows


def gap_percentage_report(hist: GapHistogram, gaps=(4, 8, 12, 16), below=(60,),
                          at_most=(100,)) -> GapPercentages:
    total = hist.total_gaps
    if total == 0:
        raise InsufficientDataError("empty gap histogram")

    def pct(c):
        return 100.0 * c / total

    return GapPercentages(
        total,
        {g: pct(hist.counts.get(g, 0)) for g in gaps},
        {t: pct(sum(c for g, c in hist.counts.items() if g < t)) for t in below},
        {t: pct(sum(c for g, c in hist.counts.items() if g <= t)) for t in at_most},
    )


def gap_share_series(crossings, gaps=(4, 8, 12)) -> list[tuple[int, dict[int, float]]]:
    """Percentage of each selected gap among all gaps, after every new crossing."""
    pos = _positions(crossings)
    seen: Counter = Counter()
    series = []
    for i in range(1, len(pos)):
        seen[pos[i] - pos[i - 1]] += 1
        series.append((i + 1, {g: 100.0 * seen[g] / i for g in gaps}))
    return series


# ---------------------------------------------------------------------------
# digits

BENFORD = {d: math.log10(1 + 1 / d) for d in range(1, 10)}


def _leading_digit(v: int) -> int:
    s = str(abs(v)).lstrip("0")
    return int(s[0]) if s else 0


@dataclass
class LeadingDigitReport:
    counts: dict[int, int]
    observed: dict[int, float]
    expected: dict[int, float]
    l1_distance: float
    chi_square: float

    def csv_table(self):
        return ["digit", "observed", "expected"], [
            (d, self.observed[d], self.expected[d]) for d in range(1, 10)
        ]


def benford_histogram(crossings) -> LeadingDigitReport:
    pos = _positions(crossings)
    if not pos:
        raise InsufficientDataError("no crossings")
    counts = Counter(_leading_digit(p) for p in pos)
    n = len(pos)
    counts = {d: counts.get(d, 0) for d in range(1, 10)}
    observed = {d: c / n for d, c in counts.items()}
    l1 = sum(abs(observed[d] - BENFORD[d]) for d in range(1, 10))
    chi2 = sum((counts[d] - n * BENFORD[d]) ** 2 / (n * BENFORD[d]) for d in range(1, 10))
    return LeadingDigitReport(counts, observed, dict(BENFORD), l1, chi2)


@dataclass
class LastDigitReport:
    counts: dict[int, int]
    percentages: dict[int, float]
    a: float
    b: float
    se_a: float
    se_b: float

    def csv_table(self):
        return ["digit", "count", "percent"], [
            (d, self.counts[d], self.percentages[d]) for d in (1, 3, 5, 7, 9)
        ]


def last_digit_histogram(crossings, level: int | None = None) -> LastDigitReport:
    """Counts of final digits 1, 3, 5, 7, 9 plus an OLS line through the percentages.

    The fit regresses percentage on the digit value itself. At level 0 every
    crossing is odd; an even one raises `InvariantViolation`.
    """
    pos = _positions(crossings)
    if level is None:
        level = getattr(crossings, "level", 0)
    if not pos:
        raise InsufficientDataError("no crossings")
    counts = {d: 0 for d in (1, 3, 5, 7, 9)}
    for p in pos:
        d = p % 10
        if d not in counts:
            if level == 0:
                raise InvariantViolation(f"even crossing {p} at level 0")
            continue
        counts[d] += 1
    total = sum(counts.values())
    if total == 0:
        raise InsufficientDataError(f"no odd crossings at level {level}")
    pct = {d: 100.0 * c / total for d, c in counts.items()}
    x = np.array(list(counts), dtype=float)
    y = np.array([pct[d] for d in counts])
    xm = x.mean()
    sxx = float(((x - xm) ** 2).sum())
    b = float(((x - xm) * (y - y.mean())).sum()) / sxx
    a = float(y.mean()) - b * xm
    s2 = float(((y - a - b * x) ** 2).sum()) / (len(x) - 2)
    se_b = math.sqrt(s2 / sxx)
    se_a = math.sqrt(s2 * (1 / len(x) + xm**2 / sxx))
    return LastDigitReport(counts, pct, a, b, se_a, se_b)


# ---------------------------------------------------------------------------
# balance and slope


def link_halfunits(y0: int, y1: int) -> tuple[int, int]:
    """Twice the trapezoid area between heights y0 and y1 one unit apart, as (pos, neg)."""
    half = abs(y0) + abs(y1)
    return (half, 0) if max(y0, y1) > 0 else (0, half)


@dataclass
class BalanceAccumulator:
    """Streaming counts, areas and through-origin regression sums over a run of points.

    Covers a contiguous run of points ``first..last`` and the unit links
    between them. Areas are kept in half units so they stay integral.
    """

    c_pos: int = 0
    c_neg: int = 0
    c_zero: int = 0
    a_pos_halfunits: int = 0
    a_neg_halfunits: int = 0
    sum_x: int = 0
    sum_x2: int = 0
    sum_xy: int = 0
    first: tuple[int, int] | None = None
    last: tuple[int, int] | None = None

    def add(self, x: int, y: int) -> None:
        if self.last is not None:
            lx, ly = self.last
            if x != lx + 1 or abs(y - ly) != 1:
                raise InvariantViolation(f"non-unit step from {self.last} to {(x, y)}")
            p, n = link_halfunits(ly, y)
            self.a_pos_halfunits += p
            self.a_neg_halfunits += n
        else:
            self.first = (x, y)
        self.last = (x, y)
        if y > 0:
            self.c_pos += 1
        elif y < 0:
            self.c_neg += 1
        else:
            self.c_zero += 1
        self.sum_x += x
        self.sum_x2 += x * x
        self.sum_xy += x * y

    def merge(self, other: "BalanceAccumulator") -> "BalanceAccumulator":
        """Accumulator for this run followed by ``other``, joined by one unit link."""
        if other.first is None:
            return BalanceAccumulator(**self.snapshot(), first=self.first, last=self.last)
        if self.last is None:
            return BalanceAccumulator(**other.snapshot(), first=other.first, last=other.last)
        (lx, ly), (fx, fy) = self.last, other.first
        if fx != lx + 1 or abs(fy - ly) != 1:
            raise InvariantViolation(f"runs not adjacent: {self.last} then {other.first}")
        p, n = link_halfunits(ly, fy)
        a, b = self.snapshot(), other.snapshot()
        merged = {k: a[k] + b[k] for k in a}
        merged["a_pos_halfunits"] += p
        merged["a_neg_halfunits"] += n
        return BalanceAccumulator(**merged, first=self.first, last=other.last)

    def snapshot(self) -> dict[str, int]:
        return {
            "c_pos": self.c_pos,
            "c_neg": self.c_neg,
            "c_zero": self.c_zero,
            "a_pos_halfunits": self.a_pos_halfunits,
            "a_neg_halfunits": self.a_neg_halfunits,
            "sum_x": self.sum_x,
            "sum_x2": self.sum_x2,
            "sum_xy": self.sum_xy,
        }

    @property
    def points(self) -> int:
        return self.c_pos + self.c_neg + self.c_zero

    @property
    def a_pos(self) -> Fraction:
        return Fraction(self.a_pos_halfunits, 2)

    @property
    def a_neg(self) -> Fraction:
        return Fraction(self.a_neg_halfunits, 2)

    @property
    def slope(self) -> float:
        if self.sum_x2 == 0:
            raise InsufficientDataError("no points with x != 0")
        return self.sum_xy / self.sum_x2

    def report(self) -> dict:
        return {
            **self.snapshot(),
            "points": self.points,
            "a_pos": float(self.a_pos),
            "a_neg": float(self.a_neg),
            "count_ratio": self.c_pos / self.c_neg if self.c_neg else None,
            "area_ratio": self.a_pos_halfunits / self.a_neg_halfunits if self.a_neg_halfunits else None,
            "slope": self.slope if self.sum_x2 else None,
        }

    def csv_table(self):
        return ["key", "value"], list(self.report().items())


def balance(points: Iterable[tuple[int, int]]) -> BalanceAccumulator:
    acc = BalanceAccumulator()
    for x, y in points:
        acc.add(x, y)
    return acc


def slope_fit(points: Iterable[tuple[int, int]], decimation: int = 1) -> float:
    """Through-origin least squares slope using every ``decimation``-th point."""
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    sxy = sxx = 0
    n = 0
    for i, (x, y) in enumerate(points):
        if i % decimation:
            continue
        sxy += x * y
        sxx += x * x
        n += 1
    if n == 0 or sxx == 0:
        raise InsufficientDataError("no usable points for slope fit")
    return sxy / sxx


def slope_series(points: Iterable[tuple[int, int]], at: Iterable[int] | None = None) -> list[tuple[int, float]]:
    """Through-origin slope of every prefix, as ``(point_count, slope)``.

    ``at`` restricts the output to the given prefix lengths.
    """
    wanted = None if at is None else set(at)
    sxy = sxx = 0
    out = []
    for i, (x, y) in enumerate(points, 1):
        sxy += x * y
        sxx += x * x
        if sxx and (wanted is None or i in wanted):
            out.append((i, sxy / sxx))
    return out


RATIO_FORMULA = "c_pos / c_neg - 1"


def slope_models(limit: int, accumulator: BalanceAccumulator, pi_n: int) -> dict:
    """The simple slope estimates set against the fitted slope."""
    if pi_n <= 0:
        raise ValueError("pi_n must be positive")
    acc = accumulator
    return {
        "inv_pi": 1 / pi_n,
        "inv_sqrt_pi": 1 / math.sqrt(pi_n),
        "diff_over_n": (acc.c_pos - acc.c_neg) / limit,
        "ratio_based": acc.c_pos / acc.c_neg - 1 if acc.c_neg else None,
        "ratio_formula": RATIO_FORMULA,
    }


# ---------------------------------------------------------------------------
# zeroes as a sequence


@dataclass
class PrimesInZeroes:
    zeroes: int
    primes: int
    n_over_log_n: float
    diff_percent: float

    def line(self) -> str:
        # X/ln X is truncated, not rounded, to three places as in the reference table
        est = math.floor(self.n_over_log_n * 1000) / 1000
        return (f"{self.primes} primes / {self.zeroes} zeroes; "
                f"X/logX={est:.3f}; diff={self.diff_percent:.3f}%")


def primes_in_zeroes(crossings, is_prime: Callable) -> PrimesInZeroes:
    """Count prime crossings and compare with X / ln X for X crossings.

    ``is_prime`` may expose ``is_prime_many`` for vectorised queries.
    """
    pos = list(_positions(crossings))
    if len(pos) < 2:
        raise InsufficientDataError("need at least 2 zeroes for X / ln X")
    many = getattr(is_prime, "is_prime_many", None)
    if many is not None:
        n_primes = int(np.count_nonzero(many(pos)))
    else:
        n_primes = sum(1 for p in pos if is_prime(p))
    x = len(pos)
    est = x / math.log(x)
    diff = 100.0 * (n_primes - est) / n_primes if n_primes else float("nan")
    return PrimesInZeroes(x, n_primes, est, diff)


@dataclass
class GrowthRow:
    n: int
    zeroes: int
    sqrt_n: float
    cbrt_n: float
    pi_n: int | None
    in_band: bool


@dataclass
class GrowthReport:
    rows: list[GrowthRow]

    @property
    def outside_band(self) -> list[GrowthRow]:
        return [r for r in self.rows if not r.in_band]

    def csv_table(self):
        return ["n", "zeroes", "sqrt_n", "cbrt_n", "pi_n", "in_band"], [
            (r.n, r.zeroes, r.sqrt_n, r.cbrt_n, "" if r.pi_n is None else r.pi_n, int(r.in_band))
            for r in self.rows
        ]


def zero_growth_report(checkpoints: Iterable[tuple], pi: Mapping[int, int] | None = None) -> GrowthReport:
    """Z(n) next to the square and cube root of n.

    ``checkpoints`` yields ``(n, Z(n))`` or ``(n, Z(n), pi(n))``.
    """
    rows = []
    for cp in checkpoints:
        n, z = cp[0], cp[1]
        pi_n = cp[2] if len(cp) > 2 else (pi or {}).get(n)
        sq, cb = math.sqrt(n), n ** (1 / 3)
        rows.append(GrowthRow(n, z, sq, cb, pi_n, cb <= z <= sq))
    return GrowthReport(rows)


def zero_counts_at(crossings, ns: Iterable[int]) -> list[tuple[int, int]]:
    """Z(n) for each n, read off a sorted crossing list."""
    pos = _positions(crossings)
    return [(n, bisect_right(pos, n)) for n in ns]
