"""Snowball sampling over the Mastodon API.

Starting from a seed, each visited account's timeline is read up to the
observation end, its alters are extracted, and unseen alters join the back
of the frontier: active alters (at least two contacts, at least one contact
a year) first, then the others, each group by decreasing contact count and
then by handle. Accounts that cannot be read are skipped and do not count
toward the target.

The crawl state is checkpointed after every visit. The checkpoint records
the byte length of each dataset log, so a resumed crawl truncates any
half-written tail and continues byte-for-byte like an uninterrupted one.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import warnings
from collections import deque
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

from .client import FediError, Forbidden, Gone, InvalidHandle, NotFound
from .config import Config, dataset_snapshot
from .interactions import extract_interactions
from .ties import Dataset, TieRecord, annual_frequency, build_ties, ties_by_ego
from .timeutil import end_of_day, parse_date

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "fedinet-crawl-checkpoint"
CHECKPOINT_VERSION = 1
CHECKPOINT_FILE = "checkpoint.json"

SKIPPABLE = (NotFound, Forbidden, Gone, InvalidHandle)


class CheckpointError(ValueError):
    pass


class CrawlWarning(UserWarning):
    pass


def is_active_alter(C: int, T0: datetime, T_end: datetime) -> bool:
    """At least two contacts, happening at least once a year."""
    if C < 2:
        return False
    return annual_frequency(C, T0, T_end) >= 1.0


@dataclass
class CrawlState:
    seed: str
    t_end: date
    target_n: int
    frontier: deque = field(default_factory=deque)
    visited: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    offsets: dict[str, int] = field(default_factory=dict)

    @property
    def collected(self) -> int:
        return len(self.visited)

    @property
    def T_end(self) -> datetime:
        return end_of_day(self.t_end)

    @property
    def done(self) -> bool:
        return self.collected >= self.target_n or not self.frontier

    def seen(self) -> set[str]:
        return set(self.frontier) | set(self.visited) | set(self.skipped)


def new_state(seed: str, target_n: int, t_end: date) -> CrawlState:
    if target_n < 1:
        raise ValueError("target_n must be >= 1")
    return CrawlState(seed=seed, t_end=parse_date(t_end), target_n=target_n, frontier=deque([seed]))


def checkpoint(state: CrawlState) -> bytes:
    body = {
        "seed": state.seed,
        "t_end": state.t_end.isoformat(),
        "target_n": state.target_n,
        "frontier": list(state.frontier),
        "visited": state.visited,
        "skipped": state.skipped,
        "offsets": dict(sorted(state.offsets.items())),
    }
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "state": body,
    }
    return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode()


def resume(data: bytes) -> CrawlState:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError("checkpoint is not valid JSON: %s" % e) from e
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("not a crawl checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError("unsupported checkpoint version %r" % doc.get("version"))
    body = doc.get("state")
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    if hashlib.sha256(canonical.encode()).hexdigest() != doc.get("sha256"):
        raise CheckpointError("checkpoint checksum mismatch")
    try:
        state = CrawlState(
            seed=body["seed"],
            t_end=parse_date(body["t_end"]),
            target_n=int(body["target_n"]),
            frontier=deque(body["frontier"]),
            visited=list(body["visited"]),
            skipped=list(body["skipped"]),
            offsets={k: int(v) for k, v in body["offsets"].items()},
        )
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError("malformed checkpoint state: %s" % e) from e
    if set(state.frontier) & set(state.visited):
        raise CheckpointError("frontier and visited overlap")
    if state.collected > state.target_n:
        raise CheckpointError("more accounts visited than the target")
    return state


def order_alters(ties: list[TieRecord], T_end: datetime, exclude: set[str]) -> list[str]:
    fresh = [t for t in ties if t.alter not in exclude]
    key = lambda t: (-t.C, t.alter)  # noqa: E731
    active = sorted((t for t in fresh if is_active_alter(t.C, t.T0, T_end)), key=key)
    inactive = sorted((t for t in fresh if not is_active_alter(t.C, t.T0, T_end)), key=key)
    return [t.alter for t in active + inactive]


class SnowballCrawler:
    """Drive a crawl into a dataset directory ``out``."""

    def __init__(self, client, out: str | os.PathLike, config: Config | None = None):
        self.client = client
        self.out = Path(out)
        self.config = config or Config()
        self.dataset: Dataset | None = None

    def _open_dataset(self, state: CrawlState) -> Dataset:
        cfg = self.config.replace(t_end=state.t_end.isoformat(), target_n=state.target_n)
        ds = Dataset.create(self.out, dataset_snapshot(cfg, "crawl", seed=state.seed, target_n=state.target_n))
        for name in Dataset.LOGS:
            p = ds.path(name)
            size = p.stat().st_size
            want = state.offsets.get(name, 0)
            if size < want:
                raise CheckpointError("%s is shorter than the checkpoint expects" % p)
            if size > want:
                # drop whatever was appended after the last checkpoint
                with open(p, "r+b") as f:
                    f.truncate(want)
        return ds

    def _save(self, state: CrawlState) -> None:
        for name in Dataset.LOGS:
            state.offsets[name] = self.dataset.path(name).stat().st_size
        tmp = self.out / (CHECKPOINT_FILE + ".tmp")
        tmp.write_bytes(checkpoint(state))
        os.replace(tmp, self.out / CHECKPOINT_FILE)

    def step(self, state: CrawlState) -> CrawlState:
        """Visit the next frontier account."""
        if not state.frontier:
            raise ValueError("frontier is empty")
        if state.collected >= state.target_n:
            raise ValueError("target already reached")
        if self.dataset is None:
            self.dataset = self._open_dataset(state)
        handle = state.frontier.popleft()
        until = state.T_end - timedelta(microseconds=1)
        try:
            account = self.client.lookup_account(handle)
            toots = self.client.fetch_full_timeline(account, until)
        except SKIPPABLE as e:
            log.warning("skipping %s: %s", handle, e)
            state.skipped.append(handle)
            self._save(state)
            return state
        interactions = [i for t in toots for i in extract_interactions(t)]
        ties = build_ties(interactions, handle, state.T_end) if interactions else []
        state.visited.append(handle)
        state.frontier.extend(order_alters(ties, state.T_end, state.seen()))
        self.dataset.append_accounts([account])
        self.dataset.append_toots(toots)
        self.dataset.append_interactions(interactions)
        self._save(state)
        log.info("visited %s (%d/%d), %d toots, %d alters", handle, state.collected, state.target_n, len(toots), len(ties))
        return state

    def finalize(self, state: CrawlState) -> Dataset:
        if self.dataset is None:
            self.dataset = self._open_dataset(state)
        ties = ties_by_ego(self.dataset.interactions(), state.T_end)
        self.dataset.write_ties(t for ego in ties.values() for t in ego)
        return self.dataset

    def run(self, state: CrawlState, max_steps: int | None = None) -> CrawlState:
        steps = 0
        while not state.done:
            if max_steps is not None and steps >= max_steps:
                return state
            self.step(state)
            steps += 1
        if state.collected < state.target_n:
            warnings.warn(
                "frontier exhausted after %d of %d accounts" % (state.collected, state.target_n),
                CrawlWarning,
                stacklevel=2,
            )
        self.finalize(state)
        return state


def run(seed: str, target_n: int, t_end, client, out, config: Config | None = None, resume_from: bytes | None = None) -> Dataset:
    """Crawl from ``seed`` until ``target_n`` accounts are collected."""
    if resume_from is not None:
        state = resume(resume_from)
    else:
        state = new_state(seed, target_n, t_end)
        try:
            client.lookup_account(seed)
        except FediError as e:
            raise FediError("seed %s cannot be resolved: %s" % (seed, e)) from e
    crawler = SnowballCrawler(client, out, config)
    crawler.run(state)
    return crawler.dataset
