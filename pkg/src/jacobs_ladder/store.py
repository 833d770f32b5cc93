"""On-disk formats: zero lists, checkpoints, crossing journals and CSV reports.

Zero list (UTF-8, LF)::

    # format: jacobs-ladder-zeroes/1
    # level: 0
    # limit: 1000
    # count: 16
    1
    3
    ...

Two-column ``index value`` files (the b-file layout used by integer
sequence archives) are accepted on read and detected automatically.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import IncompatibleCheckpoint, LadderError, ParseError

ZERO_LIST_FORMAT = "jacobs-ladder-zeroes/1"
CHECKPOINT_VERSION = 1


class StoreIOError(LadderError, OSError):
    """Filesystem failure, with the path that caused it."""


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise StoreIOError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# zero lists


def write_zero_list(record, path) -> None:
    lines = [
        f"# format: {ZERO_LIST_FORMAT}",
        f"# level: {record.level}",
    ]
    if getattr(record, "limit", None) is not None:
        lines.append(f"# limit: {record.limit}")
    lines.append(f"# count: {len(record.positions)}")
    lines.extend(str(p) for p in record.positions)
    _atomic_write(path, "\n".join(lines) + "\n")


def read_zero_list(path):
    """Parse a native zero list or a two-column b-file into a `CrossingRecord`."""
    from .walker import CrossingRecord

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreIOError(f"cannot read {path}: {exc}") from exc

    header = {}
    positions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        fields = line.split()
        if len(fields) == 1:
            token = fields[0]
        elif len(fields) == 2:
            token = fields[1]
        else:
            raise ParseError(path, lineno, f"expected 1 or 2 columns, got {len(fields)}")
        try:
            value = int(token)
        except ValueError:
            raise ParseError(path, lineno, f"not an integer: {token!r}") from None
        if positions and value <= positions[-1]:
            raise ParseError(path, lineno,
                             f"positions not increasing ({value} after {positions[-1]})")
        positions.append(value)

    try:
        level = int(header.get("level", 0))
        limit = int(header["limit"]) if "limit" in header else None
        count = int(header["count"]) if "count" in header else None
    except ValueError as exc:
        raise ParseError(path, 0, f"bad header value: {exc}") from None
    if count is not None and count != len(positions):
        raise ParseError(path, 0, f"header count {count} but {len(positions)} positions")
    return CrossingRecord(level, positions, limit)


# ---------------------------------------------------------------------------
# checkpoints


def plan_hash(segment_size: int) -> str:
    """Identity of the segment layout; resuming needs the same one."""
    return hashlib.sha256(f"origin=2;segment_size={segment_size}".encode()).hexdigest()[:16]


@dataclass
class Checkpoint:
    n: int
    y: int
    parity: int
    level_counts: dict
    balance: dict | None
    plan_hash: str
    written_at: str = ""
    version: int = CHECKPOINT_VERSION

    @classmethod
    def from_walk(cls, state, acc, segment_size: int) -> "Checkpoint":
        return cls(state.n, state.y, state.parity, dict(state.crossing_counts),
                   acc.snapshot() if acc is not None else None, plan_hash(segment_size))

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "n": self.n,
            "y": self.y,
            "parity": self.parity,
            "levels": [{"level": lv, "count": c} for lv, c in sorted(self.level_counts.items())],
            "balance": self.balance,
            "plan_hash": self.plan_hash,
            "written_at": self.written_at,
        }


def write_checkpoint(cp: Checkpoint, path) -> None:
    if not cp.written_at:
        cp.written_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    _atomic_write(path, json.dumps(cp.to_json(), indent=1) + "\n")


_BALANCE_KEYS = ("c_pos", "c_neg", "c_zero", "a_pos_halfunits", "a_neg_halfunits",
                 "sum_x", "sum_x2", "sum_xy")


def read_checkpoint(path, expected_plan_hash: str | None = None) -> Checkpoint:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StoreIOError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, exc.msg) from None
    if raw.get("version") != CHECKPOINT_VERSION:
        raise IncompatibleCheckpoint(
            f"{path}: checkpoint version {raw.get('version')!r}, expected {CHECKPOINT_VERSION}")
    if expected_plan_hash is not None and raw.get("plan_hash") != expected_plan_hash:
        raise IncompatibleCheckpoint(f"{path}: plan hash {raw.get('plan_hash')!r} does not match "
                                     f"{expected_plan_hash!r} (different segment size?)")
    try:
        bal = raw["balance"]
        if bal is not None:
            bal = {k: int(bal[k]) for k in _BALANCE_KEYS}
        return Checkpoint(
            n=int(raw["n"]),
            y=int(raw["y"]),
            parity=int(raw["parity"]),
            level_counts={int(e["level"]): int(e["count"]) for e in raw["levels"]},
            balance=bal,
            plan_hash=raw["plan_hash"],
            written_at=raw.get("written_at", ""),
            version=raw["version"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, 0, f"malformed checkpoint: {exc!r}") from None


def journal_path(checkpoint_path, level: int) -> Path:
    p = Path(checkpoint_path)
    return p.with_name(f"{p.name}.level{level}.txt")


class CrossingJournal:
    """Append-only crossing positions per level, one decimal per line.

    Only the first ``count`` lines recorded in the checkpoint are trusted;
    anything after them was written by a run that died before checkpointing.
    """

    def __init__(self, checkpoint_path, levels, fresh: bool):
        self.paths = {lv: journal_path(checkpoint_path, lv) for lv in levels}
        self.written = {lv: 0 for lv in levels}
        if fresh:
            for p in self.paths.values():
                _atomic_write(p, "")

    def read(self, level: int, count: int) -> list[int]:
        path = self.paths[level]
        try:
            lines = path.read_text(encoding="utf-8").split("\n")
        except OSError as exc:
            raise IncompatibleCheckpoint(f"journal {path} unreadable: {exc}") from exc
        values = [int(s) for s in lines[:count] if s]
        if len(values) < count:
            raise IncompatibleCheckpoint(
                f"journal {path} holds {len(values)} positions, checkpoint expects {count}")
        return values

    def truncate(self, counts: dict) -> None:
        for lv, path in self.paths.items():
            keep = self.read(lv, counts[lv]) if counts[lv] else []
            _atomic_write(path, "".join(f"{v}\n" for v in keep))
            self.written[lv] = counts[lv]

    def append(self, records: dict) -> None:
        for lv, path in self.paths.items():
            new = records[lv][self.written[lv]:]
            if not new:
                continue
            try:
                with open(path, "a", encoding="utf-8", newline="") as fh:
                    fh.write("".join(f"{v}\n" for v in new))
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StoreIOError(f"cannot append to {path}: {exc}") from exc
            self.written[lv] += len(new)


def try_resume(path, levels, segment_size: int, track_balance: bool):
    """``(checkpoint, positions by level)`` if ``path`` holds a usable checkpoint, else None."""
    path = Path(path)
    if not path.exists():
        return None
    cp = read_checkpoint(path, plan_hash(segment_size))
    if set(cp.level_counts) != set(levels):
        raise IncompatibleCheckpoint(
            f"{path}: checkpoint tracks levels {sorted(cp.level_counts)}, run asks for {sorted(levels)}")
    if track_balance and cp.balance is None:
        raise IncompatibleCheckpoint(f"{path}: checkpoint has no balance snapshot")
    journal = CrossingJournal(path, levels, fresh=False)
    positions = {lv: journal.read(lv, cp.level_counts[lv]) for lv in levels}
    return cp, positions


# ---------------------------------------------------------------------------
# CSV


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def csv_text(report) -> str:
    header, rows = report.csv_table() if hasattr(report, "csv_table") else report
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def export_csv(report, path) -> None:
    """Write ``report`` (anything with ``csv_table()`` or a ``(header, rows)`` pair) as CSV."""
    _atomic_write(path, csv_text(report))
