"""Synthetic interaction logs with planted ring structure.

Each planted alter contacts its ego as a homogeneous Poisson process whose
rate is the ring frequency times a log-normal jitter factor. When the first
event would fall inside the last six months of the window (or no event
occurs at all) an extra first event is placed uniformly in the admissible
part of the window, so every planted tie is old enough to survive the age
filter. Fractional ring sizes are realised per ego by stochastic rounding,
which keeps the expected size equal to the planted value.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .client import Account
from .config import Config, dataset_snapshot, tomllib
from .interactions import Interaction, Toot, extract_interactions
from .ties import Dataset, ties_by_ego
from .timeutil import DAY_SECONDS, SIX_MONTHS_DAYS, YEAR_DAYS, end_of_day, format_ts, parse_date, parse_ts


HOST = "synth.example"
_KIND_WEIGHTS = (("mention", 0.4), ("reply", 0.4), ("boost", 0.2))

# layer sizes and contact rates of the canonical offline ego network
CANONICAL_SIZES = (1.5, 5.0, 15.0, 50.0, 150.0)
CANONICAL_RING_SIZES = (1.5, 3.5, 10.0, 35.0, 100.0)
CANONICAL_FREQUENCIES = (YEAR_DAYS / 5, YEAR_DAYS / 7, 12.0, 2.0, 1.0)


class InfeasiblePlantWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PlantedModel:
    ring_sizes: tuple[float, ...]
    ring_frequencies: tuple[float, ...]
    window: tuple[datetime, datetime]
    frequency_jitter: float = 0.0
    rng_seed: int = 0
    undirected_rate: float = 0.0  # plain toots per day, for activity analyses

    def __post_init__(self):
        object.__setattr__(self, "ring_sizes", tuple(float(s) for s in self.ring_sizes))
        object.__setattr__(self, "ring_frequencies", tuple(float(f) for f in self.ring_frequencies))
        object.__setattr__(self, "window", (parse_ts(self.window[0]), parse_ts(self.window[1])))
        if len(self.ring_sizes) != len(self.ring_frequencies) or not self.ring_sizes:
            raise ValueError("ring_sizes and ring_frequencies must be non-empty and of equal length")
        if any(s <= 0 for s in self.ring_sizes):
            raise ValueError("ring sizes must be positive")
        if any(a <= b for a, b in zip(self.ring_frequencies, self.ring_frequencies[1:])):
            raise ValueError("ring frequencies must be strictly decreasing")
        if self.ring_frequencies[-1] <= 0:
            raise ValueError("ring frequencies must be positive")
        if self.frequency_jitter < 0:
            raise ValueError("frequency_jitter must be non-negative")
        if self.window_days < 365:
            raise ValueError("window must span at least one year")

    @property
    def window_days(self) -> float:
        return (self.window[1] - self.window[0]).total_seconds() / DAY_SECONDS

    @classmethod
    def canonical(cls, window, frequency_jitter: float = 0.0, rng_seed: int = 0) -> "PlantedModel":
        return cls(CANONICAL_RING_SIZES, CANONICAL_FREQUENCIES, window, frequency_jitter, rng_seed)

    def to_dict(self) -> dict:
        return {
            "ring_sizes": list(self.ring_sizes),
            "ring_frequencies": list(self.ring_frequencies),
            "window": [format_ts(self.window[0]), format_ts(self.window[1])],
            "frequency_jitter": self.frequency_jitter,
            "rng_seed": self.rng_seed,
            "undirected_rate": self.undirected_rate,
        }

    @classmethod
    def from_dict(cls, d) -> "PlantedModel":
        if d.get("canonical"):
            return cls.canonical(tuple(d["window"]), d.get("frequency_jitter", 0.0), d.get("rng_seed", 0))
        return cls(
            tuple(d["ring_sizes"]),
            tuple(d["ring_frequencies"]),
            tuple(d["window"]),
            d.get("frequency_jitter", 0.0),
            d.get("rng_seed", 0),
            d.get("undirected_rate", 0.0),
        )


@dataclass
class EgoLog:
    ego: str
    toots: list[Toot]
    interactions: list[Interaction]
    truth: list[tuple[str, int, float]]  # (alter, ring, planted rate)
    infeasible_rings: list[int] = field(default_factory=list)


def infeasible_rings(model: PlantedModel) -> list[int]:
    """Rings whose expected contact count over the window is below two."""
    return [i for i, f in enumerate(model.ring_frequencies) if f * model.window_days / YEAR_DAYS < 2.0]


def _event_times(rng: np.random.Generator, rate_per_day: float, window_days: float) -> list[float]:
    times = []
    t = rng.exponential(1.0 / rate_per_day)
    while t < window_days:
        times.append(t)
        t += rng.exponential(1.0 / rate_per_day)
    cutoff = window_days - SIX_MONTHS_DAYS
    if not times or times[0] >= cutoff:
        times.insert(0, rng.uniform(0.0, cutoff))
    return times


def generate_ego(model: PlantedModel, ego: str | None = None, rng: np.random.Generator | None = None) -> EgoLog:
    """One ego's toots and interactions under ``model``."""
    rng = rng if rng is not None else np.random.default_rng(model.rng_seed)
    ego = ego or "ego@%s" % HOST
    ego_user = ego.split("@")[0]
    bad = infeasible_rings(model)
    if bad:
        warnings.warn(
            "rings %s expect fewer than 2 contacts in the window; plants there are best effort" % bad,
            InfeasiblePlantWarning,
            stacklevel=2,
        )
    start = model.window[0]
    days = model.window_days
    events: list[tuple[float, str]] = []
    truth = []
    for ring, (size, freq) in enumerate(zip(model.ring_sizes, model.ring_frequencies)):
        n = int(math.floor(size)) + int(rng.random() < size - math.floor(size))
        for a in range(n):
            alter = "%s_r%d_a%03d@%s" % (ego_user, ring, a, HOST)
            rate = freq * math.exp(rng.normal(0.0, model.frequency_jitter)) if model.frequency_jitter else freq
            truth.append((alter, ring, rate))
            events.extend((t, alter) for t in _event_times(rng, rate / YEAR_DAYS, days))
    if model.undirected_rate > 0:
        events.extend((t, "") for t in _event_times(rng, model.undirected_rate, days))
    events.sort()
    kinds = [k for k, _ in _KIND_WEIGHTS]
    weights = [w for _, w in _KIND_WEIGHTS]
    last_ms = model.window[1] - timedelta(milliseconds=1)
    drawn = rng.choice(len(kinds), size=len(events), p=weights)
    toots = []
    for i, (t, alter) in enumerate(events):
        # millisecond resolution keeps the JSON round trip exact
        ts = min(start + timedelta(milliseconds=round(t * DAY_SECONDS * 1000)), last_ms)
        toot_id = "%s-%06d" % (ego_user, i)
        if not alter:
            toots.append(Toot(toot_id, ego, ts, char_count=40))
            continue
        kind = kinds[drawn[i]]
        if kind == "boost":
            toots.append(Toot(toot_id, ego, ts, boost_of_author=alter))
        elif kind == "reply":
            toots.append(Toot(toot_id, ego, ts, in_reply_to_account=alter, mentions=(alter,), char_count=40))
        else:
            toots.append(Toot(toot_id, ego, ts, mentions=(alter,), char_count=40))
    interactions = [i for t in toots for i in extract_interactions(t)]
    return EgoLog(ego, toots, interactions, truth, bad)


def generate_cohort(
    model: PlantedModel, n_egos: int, seed: int | None = None, out=None, config: Config | None = None
) -> Dataset:
    """Write ``n_egos`` independent synthetic egos as a dataset directory.

    Per-ego generators are spawned from one ``SeedSequence`` so each ego's
    data does not depend on how many egos are generated after it.
    """
    if out is None:
        raise ValueError("an output directory is required")
    seed = model.rng_seed if seed is None else seed
    end = model.window[1]
    if end.time() != datetime.min.time():
        raise ValueError("window must end at midnight UTC")
    t_end_day = (end - timedelta(days=1)).date()
    config = (config or Config()).replace(t_end=t_end_day.isoformat())
    if not config.acquisition_date < t_end_day:
        config = config.replace(acquisition_date=model.window[0].date().isoformat())
    ds = Dataset.create(
        out,
        dataset_snapshot(
            config, "synth", model=model.to_dict(), n_egos=n_egos, seed=seed, infeasible_rings=infeasible_rings(model)
        ),
    )
    T_end = config.T_end
    children = np.random.SeedSequence(seed).spawn(n_egos)
    created = model.window[0] - timedelta(days=1)
    truth_rows = []
    interactions = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InfeasiblePlantWarning)
        logs = [generate_ego(model, "ego%04d@%s" % (i, HOST), np.random.default_rng(c)) for i, c in enumerate(children)]
    if infeasible_rings(model):
        warnings.warn(
            "rings %s expect fewer than 2 contacts in the window" % infeasible_rings(model),
            InfeasiblePlantWarning,
            stacklevel=2,
        )
    for log_ in logs:
        username = log_.ego.split("@")[0]
        ds.append_accounts([Account("synth-%s" % username, username, HOST, False, created)])
        ds.append_toots(log_.toots)
        ds.append_interactions(log_.interactions)
        interactions.extend(log_.interactions)
        truth_rows.extend((log_.ego, alter, ring, rate) for alter, ring, rate in log_.truth)
    ds.write_ties(t for ego in ties_by_ego(interactions, T_end).values() for t in ego)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(("ego", "alter", "ring", "planted_rate"))
    for ego, alter, ring, rate in truth_rows:
        w.writerow((ego, alter, ring, repr(rate)))
    (Path(out) / "ground_truth.csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
    return ds


def read_ground_truth(path) -> dict[str, dict[str, int]]:
    """``{ego: {alter: ring}}`` from a ``ground_truth.csv``."""
    out: dict[str, dict[str, int]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        for r in csv.DictReader(f):
            out.setdefault(r["ego"], {})[r["alter"]] = int(r["ring"])
    return out


def load_model(path) -> tuple[PlantedModel, dict]:
    """Read a model file (JSON, or TOML with a ``[model]`` table). Returns the model and any extra keys."""
    p = Path(path)
    if p.suffix.lower() == ".toml":
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    else:
        data = json.loads(p.read_text(encoding="utf-8"))
    model_data = data.get("model", data)
    extra = {k: v for k, v in data.items() if k != "model"} if "model" in data else {}
    return PlantedModel.from_dict(model_data), extra


def canonical_window(t_end_day, months: int = 18) -> tuple[datetime, datetime]:
    """``months``-long window closing at the end of ``t_end_day``."""
    end = end_of_day(parse_date(t_end_day))
    y, m = end.year, end.month - months
    while m < 1:
        y, m = y - 1, m + 12
    return end.replace(year=y, month=m), end


def cumulative_truth(model: PlantedModel) -> list[float]:
    return np.cumsum(model.ring_sizes).tolist()
