"""Segmented sieve of Eratosthenes over odd numbers.

Segments are half-open ranges ``[lo, hi)`` with ``lo >= 2``. Only odd
numbers are stored in the bitmap; 2 is tracked with a flag.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, RangeError

DEFAULT_SEGMENT_SIZE = 10**8


def trial_division_is_prime(n: int) -> bool:
    """Reference primality test used as an oracle in tests and `verify`."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def simple_sieve(n: int) -> np.ndarray:
    """All primes <= n from an unsegmented sieve (used for base primes)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def base_primes_for(limit: int) -> np.ndarray:
    """Base primes sufficient to sieve any segment with ``hi - 1 <= limit``."""
    return simple_sieve(math.isqrt(max(limit, 0)))


def _largest_prime_at_most(n: int) -> int:
    while n >= 2:
        if trial_division_is_prime(n):
            return n
        n -= 1
    return 0


@dataclass(eq=False)
class PrimalitySegment:
    """Primality of every integer in ``[lo, hi)``.

    ``bits[i]`` is the primality of ``odd_start + 2*i``; ``has_two`` marks a
    segment that contains 2.
    """

    lo: int
    hi: int
    odd_start: int
    bits: np.ndarray
    has_two: bool
    prime_count: int

    def is_prime(self, n: int) -> bool:
        if not self.lo <= n < self.hi:
            raise RangeError(f"{n} outside segment [{self.lo}, {self.hi})")
        if n == 2:
            return self.has_two
        if n % 2 == 0:
            return False
        return bool(self.bits[(n - self.odd_start) // 2])

    def primes(self) -> np.ndarray:
        """Ascending int64 array of the primes in the segment."""
        odd = self.odd_start + 2 * np.flatnonzero(self.bits).astype(np.int64)
        if self.has_two:
            return np.concatenate([np.array([2], dtype=np.int64), odd])
        return odd

    def indicator(self) -> np.ndarray:
        """Dense boolean array; entry ``i`` is the primality of ``lo + i``."""
        dense = np.zeros(self.hi - self.lo, dtype=bool)
        dense[self.primes() - self.lo] = True
        return dense


def sieve_segment(lo: int, hi: int, base_primes: Sequence[int]) -> PrimalitySegment:
    """Sieve ``[lo, hi)`` using ``base_primes``, which must hold every prime <= sqrt(hi - 1)."""
    if not 2 <= lo < hi:
        raise ContractViolation(f"need 2 <= lo < hi, got lo={lo}, hi={hi}")
    if isinstance(base_primes, np.ndarray):
        base = base_primes.tolist()
    else:
        base = list(base_primes)
    needed = _largest_prime_at_most(math.isqrt(hi - 1))
    if needed and (not base or base[-1] < needed):
        raise ContractViolation(
            f"base primes stop at {base[-1] if base else None}; "
            f"segment [{lo}, {hi}) needs primes up to {needed}"
        )

    odd_start = lo | 1
    n_odd = max(0, (hi - odd_start + 1) // 2)
    bits = np.ones(n_odd, dtype=bool)
    stop = bisect_right(base, math.isqrt(hi - 1))
    for p in base[:stop]:
        if p == 2:
            continue
        start = max(p * p, -(-odd_start // p) * p)
        if start % 2 == 0:
            start += p
        if start >= hi:
            continue
        bits[(start - odd_start) // 2 :: p] = False

    has_two = lo <= 2 < hi
    count = int(np.count_nonzero(bits)) + int(has_two)
    return PrimalitySegment(lo, hi, odd_start, bits, has_two, count)


@dataclass(frozen=True)
class SievePlan:
    """Contiguous segments ``[2 + k*segment_size, ...)`` covering ``[2, limit]``."""

    limit: int
    segment_size: int
    segments: tuple

    @classmethod
    def build(cls, limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> "SievePlan":
        if segment_size <= 0:
            raise ContractViolation(f"segment_size must be positive, got {segment_size}")
        segs = tuple(
            (lo, min(lo + segment_size, limit + 1))
            for lo in range(2, limit + 1, segment_size)
        )
        return cls(limit, segment_size, segs)


def prime_count(limit: int, segment_size: int = DEFAULT_SEGMENT_SIZE) -> int:
    """pi(limit), summed over segment prime counts."""
    if limit < 2:
        return 0
    base = base_primes_for(limit)
    plan = SievePlan.build(limit, segment_size)
    return sum(sieve_segment(lo, hi, base).prime_count for lo, hi in plan.segments)


def segment_parity_prefix(plan: SievePlan, per_segment_counts: Sequence[int]) -> list[int]:
    """Entry ``k`` is the parity of the primes in segments ``0..k-1``, i.e. pi(lo_k - 1) mod 2."""
    if len(per_segment_counts) != len(plan.segments):
        raise ContractViolation(
            f"{len(per_segment_counts)} counts for {len(plan.segments)} segments"
        )
    out = []
    acc = 0
    for c in per_segment_counts:
        out.append(acc)
        acc ^= c & 1
    return out


class BasePrimeOracle:
    """Primality of arbitrary numbers up to ``limit`` by division with base primes.

    Suited to sparse queries (a zero list) where sieving the whole range
    would be wasteful.
    """

    def __init__(self, limit: int):
        self.limit = limit
        self._base = base_primes_for(limit)

    def is_prime_many(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=np.int64)
        if v.size and int(v.max()) > self.limit:
            raise RangeError(f"value {int(v.max())} beyond oracle limit {self.limit}")
        result = v >= 2
        for start in range(0, v.size, 4096):
            chunk = v[start : start + 4096]
            alive = result[start : start + 4096]
            for p in self._base.tolist():
                if p * p > int(chunk.max(initial=0)):
                    break
                alive &= (chunk % p != 0) | (chunk == p)
        return result

    def __call__(self, n: int) -> bool:
        return bool(self.is_prime_many([n])[0])


def prime_counts_at(points, segment_size: int = DEFAULT_SEGMENT_SIZE) -> dict[int, int]:
    """pi(n) for several n in one sieving pass."""
    wanted = sorted(set(points))
    if not wanted:
        return {}
    top = wanted[-1]
    out = {n: 0 for n in wanted if n < 2}
    if top < 2:
        return out
    base = base_primes_for(top)
    total = 0
    for lo, hi in SievePlan.build(top, segment_size).segments:
        seg = sieve_segment(lo, hi, base)
        inside = [n for n in wanted if lo <= n < hi]
        if inside:
            idx = np.searchsorted(seg.primes(), np.array(inside), side="right")
            out.update((n, total + int(i)) for n, i in zip(inside, idx))
        total += seg.prime_count
    return out
