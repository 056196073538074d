"""Schedule traces: events, CSV and binary journal round trips."""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Union

SCHEMA_VERSION = 1
COLUMNS = ("time", "pid", "seq", "kind", "detail")
GLOBAL = -1

_MAGIC = b"BCNJ"
_HEAD = struct.Struct("<4sHI")
_EVENT = struct.Struct("<qiqHI")


class TraceEvent(NamedTuple):
    time: int
    pid: int
    seq: int
    kind: str
    detail: dict

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.time, self.pid, self.seq)

    def detail_json(self) -> str:
        return json.dumps(self.detail, sort_keys=True, separators=(",", ":"))


@dataclass
class Trace:
    header: dict
    events: list[TraceEvent]

    def sorted(self) -> "Trace":
        return Trace(self.header, sorted(self.events))

    def of_kind(self, *kinds: str) -> list[TraceEvent]:
        return [e for e in self.events if e.kind in kinds]

    def completion_times(self) -> dict[int, int]:
        return {e.pid: e.time for e in self.events if e.kind == "finish"}

    def arrival_times(self) -> dict[int, int]:
        return {e.pid: e.time for e in self.events if e.kind == "arrive"}

    @property
    def makespan(self) -> int:
        done = self.completion_times()
        return max(done.values()) if done else 0

    # CSV ---------------------------------------------------------------
    def write_csv(self, dest: Union[str, Path, IO[str]]) -> None:
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="", encoding="utf-8") as fh:
                self._write(fh)
        else:
            self._write(dest)

    def _write(self, fh: IO[str]) -> None:
        head = dict(self.header, schema_version=SCHEMA_VERSION)
        for k in sorted(head):
            fh.write(f"# {k}: {json.dumps(head[k], sort_keys=True, separators=(',', ':'))}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for e in sorted(self.events):
            w.writerow((e.time, e.pid, e.seq, e.kind, e.detail_json()))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self._write(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, src: Union[str, Path, IO[str]]) -> "Trace":
        if isinstance(src, (str, Path)):
            with open(src, newline="", encoding="utf-8") as fh:
                return cls._read(fh)
        return cls._read(src)

    @classmethod
    def _read(cls, fh: IO[str]) -> "Trace":
        header: dict = {}
        lines = []
        for line in fh:
            if line.startswith("# "):
                k, _, v = line[2:].partition(": ")
                header[k] = json.loads(v)
            else:
                lines.append(line)
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported trace schema {header.get('schema_version')!r}")
        header.pop("schema_version")
        rows = csv.reader(lines)
        if tuple(next(rows)) != COLUMNS:
            raise ValueError("trace CSV has unexpected columns")
        events = [TraceEvent(int(t), int(p), int(s), k, json.loads(d)) for t, p, s, k, d in rows]
        return cls(header, events)

    # binary journal ----------------------------------------------------
    def write_journal(self, path: Union[str, Path]) -> None:
        """Compact append-only binary form of the same events."""
        kinds = sorted({e.kind for e in self.events})
        kind_ix = {k: i for i, k in enumerate(kinds)}
        head = json.dumps({"header": self.header, "kinds": kinds}, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(_HEAD.pack(_MAGIC, SCHEMA_VERSION, len(head)))
            fh.write(head)
            for e in sorted(self.events):
                d = e.detail_json().encode()
                fh.write(_EVENT.pack(e.time, e.pid, e.seq, kind_ix[e.kind], len(d)))
                fh.write(d)

    @classmethod
    def read_journal(cls, path: Union[str, Path]) -> "Trace":
        data = Path(path).read_bytes()
        magic, ver, n = _HEAD.unpack_from(data, 0)
        if magic != _MAGIC or ver != SCHEMA_VERSION:
            raise ValueError("not a beacons trace journal")
        off = _HEAD.size
        meta = json.loads(data[off:off + n])
        off += n
        kinds = meta["kinds"]
        events = []
        while off < len(data):
            t, p, s, k, ln = _EVENT.unpack_from(data, off)
            off += _EVENT.size
            events.append(TraceEvent(t, p, s, kinds[k], json.loads(data[off:off + ln])))
            off += ln
        return cls(meta["header"], events)


def by_time(events: Iterable[TraceEvent]) -> list[tuple[int, list[TraceEvent]]]:
    """Group sorted events by timestamp."""
    out: list[tuple[int, list[TraceEvent]]] = []
    for e in sorted(events, key=_key):
        if out and out[-1][0] == e.time:
            out[-1][1].append(e)
        else:
            out.append((e.time, [e]))
    return out


def _key(e: TraceEvent) -> tuple[int, int, int]:
    return (e.time, e.pid, e.seq)
