"""Tie aggregation, tie filtering and the on-disk dataset layout.

A dataset directory holds::

    accounts.jsonl      one collected account per line
    toots.jsonl         raw toots, append-only
    interactions.jsonl  ego -> alter contacts extracted from the toots
    ties.csv            ego, alter, C, T0, T_last, F
    config.json         snapshot written once at creation

Annual frequency is ``F = C / years(T_end - T0)`` with a 365.25-day year and
the duration clamped to at least one day.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Iterator

from .client import Account
from .interactions import Interaction, Toot, extract_interactions
from .timeutil import SIX_MONTHS_DAYS, YEAR_DAYS, days_between, format_ts, parse_ts

TIES_COLUMNS = ("ego", "alter", "C", "T0", "T_last", "F")
MIN_CONTACTS = 2
ACTIVE_FREQUENCY = 1.0


@dataclass(frozen=True)
class TieRecord:
    ego: str
    alter: str
    C: int
    T0: datetime
    T_last: datetime
    F: float

    @property
    def bond_length_days(self) -> float:
        return days_between(self.T0, self.T_last)


def annual_frequency(C: int, T0: datetime, T_end: datetime) -> float:
    if C < 1:
        raise ValueError("contact count must be >= 1, got %r" % C)
    if T0 >= T_end:
        raise ValueError("first contact %s is not before observation end %s" % (T0, T_end))
    days = max(days_between(T0, T_end), 1.0)
    return C / (days / YEAR_DAYS)


def build_ties(interactions: Iterable[Interaction], ego: str, T_end: datetime) -> list[TieRecord]:
    """Aggregate one ego's interactions into one record per alter, sorted by alter."""
    per_alter: dict[str, list[datetime]] = defaultdict(list)
    for it in interactions:
        if it.ego != ego:
            raise ValueError("interaction ego %r does not match %r" % (it.ego, ego))
        if it.timestamp > T_end:
            raise ValueError("interaction at %s is after observation end %s" % (it.timestamp, T_end))
        per_alter[it.alter].append(it.timestamp)
    ties = []
    for alter in sorted(per_alter):
        ts = per_alter[alter]
        t0 = min(ts)
        ties.append(TieRecord(ego, alter, len(ts), t0, max(ts), annual_frequency(len(ts), t0, T_end)))
    return ties


def passes_filter(
    tie: TieRecord,
    T_end: datetime,
    *,
    min_contacts: int = MIN_CONTACTS,
    min_age_days: float = SIX_MONTHS_DAYS,
    min_frequency: float = ACTIVE_FREQUENCY,
) -> bool:
    return tie.T0 < T_end - timedelta(days=min_age_days) and tie.C >= min_contacts and tie.F > min_frequency


def filter_active_ties(ties: Iterable[TieRecord], T_end: datetime, **thresholds) -> list[TieRecord]:
    """Keep ties older than six months, with at least two contacts and F > 1/year."""
    return [t for t in ties if passes_filter(t, T_end, **thresholds)]


def split_active_network(
    ties: Iterable[TieRecord], threshold: float = ACTIVE_FREQUENCY
) -> tuple[list[TieRecord], list[TieRecord]]:
    active, inactive = [], []
    for t in ties:
        (active if t.F >= threshold else inactive).append(t)
    return active, inactive


def ties_by_ego(interactions: Iterable[Interaction], T_end: datetime) -> dict[str, list[TieRecord]]:
    grouped: dict[str, list[Interaction]] = defaultdict(list)
    for it in interactions:
        grouped[it.ego].append(it)
    return {ego: build_ties(grouped[ego], ego, T_end) for ego in sorted(grouped)}


# --- CSV -------------------------------------------------------------------


def ties_to_csv(ties: Iterable[TieRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(TIES_COLUMNS)
    for t in ties:
        w.writerow([t.ego, t.alter, t.C, format_ts(t.T0), format_ts(t.T_last), repr(t.F)])
    return buf.getvalue()


def ties_from_csv(text: str) -> list[TieRecord]:
    rows = csv.DictReader(io.StringIO(text, newline=""))
    if tuple(rows.fieldnames or ()) != TIES_COLUMNS:
        raise ValueError("ties.csv header must be %s, got %s" % (",".join(TIES_COLUMNS), rows.fieldnames))
    return [
        TieRecord(r["ego"], r["alter"], int(r["C"]), parse_ts(r["T0"]), parse_ts(r["T_last"]), float(r["F"]))
        for r in rows
    ]


# --- dataset directory -----------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class Dataset:
    """Handle on a dataset directory."""

    ACCOUNTS = "accounts.jsonl"
    TOOTS = "toots.jsonl"
    INTERACTIONS = "interactions.jsonl"
    TIES = "ties.csv"
    CONFIG = "config.json"
    LOGS = (ACCOUNTS, TOOTS, INTERACTIONS)

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    @classmethod
    def create(cls, root, config: dict) -> "Dataset":
        ds = cls(root)
        ds.root.mkdir(parents=True, exist_ok=True)
        text = json.dumps(config, sort_keys=True, indent=2) + "\n"
        cfg = ds.root / cls.CONFIG
        if cfg.exists():
            if cfg.read_text() != text:
                raise ValueError("%s already holds a different config snapshot" % ds.root)
        else:
            cfg.write_text(text)
        for name in cls.LOGS:
            (ds.root / name).touch()
        return ds

    @classmethod
    def open(cls, root) -> "Dataset":
        ds = cls(root)
        if not (ds.root / cls.CONFIG).is_file():
            raise FileNotFoundError("%s is not a dataset directory (no %s)" % (ds.root, cls.CONFIG))
        return ds

    @property
    def config(self) -> dict:
        return json.loads((self.root / self.CONFIG).read_text())

    @property
    def t_end(self) -> datetime:
        return parse_ts(self.config["t_end_ts"])

    def path(self, name: str) -> Path:
        return self.root / name

    # append-only logs

    def _append(self, name: str, records: Iterable[dict]) -> None:
        lines = "".join(_dumps(r) + "\n" for r in records)
        if lines:
            with open(self.root / name, "a", encoding="utf-8", newline="\n") as f:
                f.write(lines)

    def append_accounts(self, accounts: Iterable[Account]) -> None:
        self._append(self.ACCOUNTS, (a.to_dict() for a in accounts))

    def append_toots(self, toots: Iterable[Toot]) -> None:
        self._append(self.TOOTS, (t.to_dict() for t in toots))

    def append_interactions(self, interactions: Iterable[Interaction]) -> None:
        self._append(self.INTERACTIONS, (i.to_dict() for i in interactions))

    def _read(self, name: str) -> Iterator[dict]:
        p = self.root / name
        if not p.exists():
            return
        with open(p, encoding="utf-8") as f:
            for n, line in enumerate(f, 1):
                if line.strip():
                    try:
                        yield json.loads(line)
                    except json.JSONDecodeError as e:
                        raise ValueError("%s line %d: %s" % (p, n, e)) from e

    def accounts(self) -> list[Account]:
        return [Account.from_dict(d) for d in self._read(self.ACCOUNTS)]

    def toots(self) -> list[Toot]:
        return [Toot.from_dict(d) for d in self._read(self.TOOTS)]

    def interactions(self) -> list[Interaction]:
        return [Interaction.from_dict(d) for d in self._read(self.INTERACTIONS)]

    # derived tables

    def write_ties(self, ties: Iterable[TieRecord]) -> None:
        with open(self.root / self.TIES, "w", encoding="utf-8", newline="") as f:
            f.write(ties_to_csv(ties))

    def ties(self) -> list[TieRecord]:
        return ties_from_csv((self.root / self.TIES).read_text(encoding="utf-8"))

    def derive_ties(self) -> list[TieRecord]:
        """Ties recomputed from the toots log (not from interactions.jsonl)."""
        T_end = self.t_end
        interactions = [i for t in self.toots() for i in extract_interactions(t) if i.timestamp < T_end]
        return [t for ego_ties in ties_by_ego(interactions, T_end).values() for t in ego_ties]

    def rebuild(self) -> None:
        """Regenerate interactions.jsonl and ties.csv from toots.jsonl."""
        T_end = self.t_end
        interactions = [i for t in self.toots() for i in extract_interactions(t) if i.timestamp < T_end]
        with open(self.root / self.INTERACTIONS, "w", encoding="utf-8", newline="\n") as f:
            f.write("".join(_dumps(i.to_dict()) + "\n" for i in interactions))
        self.write_ties(t for ego_ties in ties_by_ego(interactions, T_end).values() for t in ego_ties)
