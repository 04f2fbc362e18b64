"""User categories around the acquisition date and activity time series.

Days are UTC calendar days. A toot posted on the acquisition day counts as
posted after the acquisition.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import CATEGORIES
from .interactions import Interaction, Toot, classify_toot
from .timeutil import utc_day

AFICIONADOS, OTHERS1, OTHERS2 = CATEGORIES
UNKNOWN = "unknown"


def categorize_user(first_toot: date, last_toot: date, acquisition_date: date) -> str:
    if first_toot > last_toot:
        raise ValueError("first toot %s after last toot %s" % (first_toot, last_toot))
    before = first_toot < acquisition_date
    after = last_toot >= acquisition_date
    if before and after:
        return AFICIONADOS
    return OTHERS1 if before else OTHERS2


@dataclass
class UserActivity:
    """Per-user daily toot counts split by class."""

    user: str
    directed: dict[date, int]
    undirected: dict[date, int]
    replies: dict[date, int]

    @property
    def days(self) -> list[date]:
        return sorted(set(self.directed) | set(self.undirected))

    @property
    def first_day(self) -> date:
        return min(min(self.directed, default=date.max), min(self.undirected, default=date.max))

    @property
    def last_day(self) -> date:
        return max(max(self.directed, default=date.min), max(self.undirected, default=date.min))

    def total(self, cls: str = "all") -> int:
        if cls == "all":
            return sum(self.directed.values()) + sum(self.undirected.values())
        return sum(getattr(self, cls).values())


def user_activity(toots: Iterable[Toot]) -> dict[str, UserActivity]:
    acts: dict[str, UserActivity] = {}
    for t in toots:
        a = acts.get(t.author)
        if a is None:
            a = acts[t.author] = UserActivity(t.author, defaultdict(int), defaultdict(int), defaultdict(int))
        c = classify_toot(t)
        d = utc_day(t.created_at)
        if c.directed:
            a.directed[d] += 1
        else:
            a.undirected[d] += 1
        if c.has_reply:
            a.replies[d] += 1
    return dict(sorted(acts.items()))


def categorize_users(activity: Mapping[str, UserActivity], acquisition_date: date) -> dict[str, str]:
    return {u: categorize_user(a.first_day, a.last_day, acquisition_date) for u, a in activity.items()}


def category_table(categories: Mapping[str, str]) -> list[tuple[str, int, float]]:
    """``(category, count, percent)`` rows; percentages sum to 100."""
    total = len(categories)
    counts = {c: 0 for c in CATEGORIES}
    for c in categories.values():
        counts[c] += 1
    return [(c, n, 100.0 * n / total if total else 0.0) for c, n in counts.items()]


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


@dataclass
class DailySeries:
    days: list[date]
    cumulative: list[int]
    alive: list[int]
    active_directed: list[int]
    active_undirected: list[int]
    toots_directed: list[int]
    toots_undirected: list[int]
    ratio_alive_registered: list[float | None]
    ratio_directed_undirected: list[float | None]

    def rows(self):
        for i, d in enumerate(self.days):
            yield (
                d,
                self.cumulative[i],
                self.alive[i],
                self.active_directed[i],
                self.active_undirected[i],
                self.toots_directed[i],
                self.toots_undirected[i],
                self.ratio_alive_registered[i],
                self.ratio_directed_undirected[i],
            )


def daily_series(activity: Mapping[str, UserActivity]) -> DailySeries:
    """Per-day user counts over the whole observed span.

    ``cumulative(x)`` counts users with a toot on or before ``x``; ``alive(x)``
    those of them that also toot strictly after ``x``, so a user is never
    alive before registering. The two ratio columns are
    alive/cumulative and directed/undirected toots, ``None`` on a zero
    denominator.
    """
    if not activity:
        raise ValueError("no users")
    first = min(a.first_day for a in activity.values())
    last = max(a.last_day for a in activity.values())
    n = (last - first).days + 1
    days = [first + timedelta(days=i) for i in range(n)]
    starts = np.zeros(n + 1, dtype=int)
    ends = np.zeros(n + 1, dtype=int)
    act_dir = np.zeros(n, dtype=int)
    act_und = np.zeros(n, dtype=int)
    toots_dir = np.zeros(n, dtype=int)
    toots_und = np.zeros(n, dtype=int)
    for a in activity.values():
        starts[(a.first_day - first).days] += 1
        ends[(a.last_day - first).days] += 1
        for d, c in a.directed.items():
            act_dir[(d - first).days] += 1
            toots_dir[(d - first).days] += c
        for d, c in a.undirected.items():
            act_und[(d - first).days] += 1
            toots_und[(d - first).days] += c
    cumulative = np.cumsum(starts[:n])
    # registered users whose last toot is on or before day x are dead at x
    alive = cumulative - np.cumsum(ends[:n])
    return DailySeries(
        days=days,
        cumulative=cumulative.tolist(),
        alive=alive.tolist(),
        active_directed=act_dir.tolist(),
        active_undirected=act_und.tolist(),
        toots_directed=toots_dir.tolist(),
        toots_undirected=toots_und.tolist(),
        ratio_alive_registered=[_ratio(a, c) for a, c in zip(alive.tolist(), cumulative.tolist())],
        ratio_directed_undirected=[_ratio(d, u) for d, u in zip(toots_dir.tolist(), toots_und.tolist())],
    )


def interaction_mix(
    interactions: Iterable[Interaction], categories: Mapping[str, str]
) -> tuple[dict[str, dict[str, float | None]], int]:
    """Row-normalised ego-category -> alter-category fractions.

    Interactions with an uncategorised endpoint are counted separately and
    returned as the second element. A row with no interactions holds ``None``.
    """
    counts = {r: {c: 0 for c in CATEGORIES} for r in CATEGORIES}
    unknown = 0
    for it in interactions:
        src, dst = categories.get(it.ego), categories.get(it.alter)
        if src is None or dst is None:
            unknown += 1
            continue
        counts[src][dst] += 1
    mix: dict[str, dict[str, float | None]] = {}
    for r, row in counts.items():
        total = sum(row.values())
        mix[r] = {c: (v / total if total else None) for c, v in row.items()}
    return mix, unknown


@dataclass
class LifespanSeries:
    days: list[int]
    users: list[int]
    active_directed: list[int]
    active_undirected: list[int]
    mean_directed: list[float]
    mean_undirected: list[float]


def lifespan_series(activity: Mapping[str, UserActivity], t_end: date) -> LifespanSeries:
    """Activity aligned on each user's first toot.

    A user reaches lifespan ``x`` when ``t_end`` is at least ``x`` days after
    their first toot. ``active_*`` counts users that still post a toot of that
    class at lifespan ``>= x``; ``mean_*`` is the average number of toots on
    lifespan day ``x`` over the users that reached it.
    """
    if not activity:
        raise ValueError("no users")
    span = max((t_end - a.first_day).days for a in activity.values())
    if span < 0:
        raise ValueError("t_end precedes every first toot")
    n = span + 1
    reach = np.zeros(n + 1, dtype=int)
    last_dir = np.zeros(n + 1, dtype=int)
    last_und = np.zeros(n + 1, dtype=int)
    sum_dir = np.zeros(n)
    sum_und = np.zeros(n)
    for a in activity.values():
        first = a.first_day
        life = (t_end - first).days
        if life < 0:
            continue
        reach[life] += 1
        dir_days = [(d - first).days for d in a.directed if d <= t_end]
        und_days = [(d - first).days for d in a.undirected if d <= t_end]
        if dir_days:
            last_dir[max(dir_days)] += 1
        if und_days:
            last_und[max(und_days)] += 1
        for d, c in a.directed.items():
            if d <= t_end:
                sum_dir[(d - first).days] += c
        for d, c in a.undirected.items():
            if d <= t_end:
                sum_und[(d - first).days] += c

    def tail(counts):
        # number of users whose value is >= x
        return np.cumsum(counts[::-1])[::-1][:n]

    users = tail(reach)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean_dir = np.where(users > 0, sum_dir / np.maximum(users, 1), 0.0)
        mean_und = np.where(users > 0, sum_und / np.maximum(users, 1), 0.0)
    return LifespanSeries(
        days=list(range(n)),
        users=users.tolist(),
        active_directed=tail(last_dir).tolist(),
        active_undirected=tail(last_und).tolist(),
        mean_directed=mean_dir.tolist(),
        mean_undirected=mean_und.tolist(),
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Product-moment correlation; ``None`` when either side has zero variance."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    if xa.size < 2:
        raise ValueError("need at least two pairs")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


@dataclass(frozen=True)
class SizeActivityRow:
    ego: str
    alters: int
    toots_per_day: float
    directed_per_day: float
    replies_per_day: float


def active_days(a: UserActivity) -> int:
    """Inclusive calendar-day span between first and last toot."""
    return (a.last_day - a.first_day).days + 1


def size_activity_table(
    egos: Iterable[str], activity: Mapping[str, UserActivity], alter_counts: Mapping[str, int]
) -> list[SizeActivityRow]:
    rows = []
    for ego in egos:
        a = activity.get(ego)
        if a is None:
            continue
        span = active_days(a)
        rows.append(
            SizeActivityRow(
                ego=ego,
                alters=int(alter_counts.get(ego, 0)),
                toots_per_day=a.total("all") / span,
                directed_per_day=a.total("directed") / span,
                replies_per_day=a.total("replies") / span,
            )
        )
    return rows
