"""End-to-end analysis of a dataset directory and the report it produces.

``analyze`` computes everything in memory; ``write_report`` lays the result
out as CSV/JSON files in a directory that appears atomically; ``validate``
lists invariant violations of a dataset and of its analysis.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .activity import (
    DailySeries,
    LifespanSeries,
    SizeActivityRow,
    UserActivity,
    categorize_users,
    category_table,
    daily_series,
    interaction_mix,
    lifespan_series,
    pearson,
    size_activity_table,
    user_activity,
)
from .circles import EgoNetwork, build_circles, circle_count_distribution, cohort_aggregate, scaling_ratios, structural_violations
from .config import CATEGORIES, Config, config_for_dataset
from .interactions import Interaction, dataset_summary
from .meanshift import ClusterResult, cluster_frequencies
from .ties import Dataset, TieRecord, annual_frequency, filter_active_ties, split_active_network, ties_by_ego, ties_to_csv

log = logging.getLogger(__name__)

TABLE_I_COLUMNS = (
    "ego",
    "alters",
    "bot_ego",
    "bot_alters",
    "active_alters",
    "ego_being_alters",
    "ego_being_active_alters",
    "directed_links",
    "all_interactions",
)


@dataclass
class Analysis:
    config: Config
    dataset_config: dict
    table_i: dict
    table_ii: dict
    activity: dict[str, UserActivity]
    categories: dict[str, str]
    daily: DailySeries | None
    mix: dict
    mix_unknown: int
    focus_egos: list[str]
    ties: dict[str, list[TieRecord]]
    filtered: dict[str, list[TieRecord]]
    clusters: dict[str, ClusterResult] = field(default_factory=dict)
    egonets: dict[str, EgoNetwork] = field(default_factory=dict)
    excluded_egos: list[str] = field(default_factory=list)
    lifespan: LifespanSeries | None = None
    size_activity: list[tuple[SizeActivityRow, SizeActivityRow]] = field(default_factory=list)

    @property
    def cohort(self):
        return cohort_aggregate(self.egonets.values()) if self.egonets else {}

    @property
    def histogram(self) -> dict[int, int]:
        return circle_count_distribution(self.egonets.values())


def table_i(accounts, interactions: list[Interaction], ties: dict[str, list[TieRecord]]) -> dict:
    egos = {a.handle for a in accounts} | set(ties)
    bots = {a.handle for a in accounts if a.is_bot}
    alters, active = set(), set()
    links = 0
    for ego_ties in ties.values():
        links += len(ego_ties)
        for t in ego_ties:
            alters.add(t.alter)
            if t.F >= 1.0:
                active.add(t.alter)
    return {
        "ego": len(egos),
        "alters": len(alters),
        "bot_ego": len(egos & bots),
        "bot_alters": len(alters & bots),
        "active_alters": len(active),
        "ego_being_alters": len(egos & alters),
        "ego_being_active_alters": len(egos & active),
        "directed_links": links,
        "all_interactions": len(interactions),
    }


def _cluster_one(args) -> ClusterResult:
    ties, quantile = args
    return cluster_frequencies(ties, quantile)


def analyze(dataset: Dataset, config: Config | None = None) -> Analysis:
    """Run every analysis on ``dataset``.

    Without an explicit config the dataset's own observation end and
    thresholds apply.
    """
    snapshot = dataset.config
    config = config or config_for_dataset(snapshot)
    T_end = config.T_end
    accounts = dataset.accounts()
    toots = [t for t in dataset.toots() if t.created_at < T_end]
    interactions = [i for i in dataset.interactions() if i.timestamp < T_end]
    all_ties = ties_by_ego(interactions, T_end)

    t1 = table_i(accounts, interactions, all_ties)
    t2 = dataset_summary(toots)

    bots = {a.handle for a in accounts if a.is_bot} if config.exclude_bots else set()
    if bots:
        toots = [t for t in toots if t.author not in bots]
        interactions = [i for i in interactions if i.ego not in bots and i.alter not in bots]
    ties = {
        ego: [t for t in ego_ties if t.alter not in bots] for ego, ego_ties in all_ties.items() if ego not in bots
    }

    activity = user_activity(toots)
    categories = categorize_users(activity, config.acquisition_date)
    daily = daily_series(activity) if activity else None
    mix, unknown = interaction_mix(interactions, categories)

    focus = config.focus_categories
    focus_egos = [u for u, c in categories.items() if focus is None or c in focus]
    filtered = {ego: filter_active_ties(ties.get(ego, []), T_end, **config.thresholds) for ego in focus_egos}

    analysis = Analysis(
        config=config,
        dataset_config=snapshot,
        table_i=t1,
        table_ii=t2,
        activity=activity,
        categories=categories,
        daily=daily,
        mix=mix,
        mix_unknown=unknown,
        focus_egos=focus_egos,
        ties=ties,
        filtered=filtered,
    )

    to_cluster = [ego for ego in focus_egos if filtered[ego]]
    analysis.excluded_egos = [ego for ego in focus_egos if not filtered[ego]]
    jobs = [(filtered[ego], config.bandwidth_quantile) for ego in to_cluster]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_cluster_one, jobs, chunksize=max(1, len(jobs) // (4 * config.jobs))))
    else:
        results = [_cluster_one(j) for j in jobs]
    for ego, res in zip(to_cluster, results):
        analysis.clusters[ego] = res
        analysis.egonets[ego] = build_circles(filtered[ego], res, rings=config.rings_mode)

    focus_activity = {u: activity[u] for u in focus_egos}
    if focus_activity:
        analysis.lifespan = lifespan_series(focus_activity, config.t_end)
    all_counts = {ego: len(ties.get(ego, [])) for ego in focus_egos}
    filt_counts = {ego: len(filtered[ego]) for ego in focus_egos}
    analysis.size_activity = list(
        zip(
            size_activity_table(focus_egos, activity, all_counts),
            size_activity_table(focus_egos, activity, filt_counts),
        )
    )
    return analysis


# --- formatting ------------------------------------------------------------


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return "%.6f" % x
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _round(x, nd=6):
    if x is None:
        return None
    return float("%.*f" % (nd, x))


def _pearson_summary(rows: list[tuple[SizeActivityRow, SizeActivityRow]]) -> dict:
    out = {}
    for label, idx in (("unfiltered", 0), ("filtered", 1)):
        sel = [r[idx] for r in rows]
        for col in ("toots_per_day", "directed_per_day", "replies_per_day"):
            key = "%s_%s" % (label, col)
            if len(sel) < 2:
                out[key] = None
                continue
            out[key] = _round(pearson([r.alters for r in sel], [getattr(r, col) for r in sel]))
    return out


def summary(analysis: Analysis) -> dict:
    per_ego_ratio = [sum(scaling_ratios(n)) / (n.k - 1) for n in analysis.egonets.values() if n.k > 1]
    return {
        "fedinet_version": __version__,
        "config": analysis.config.to_dict(),
        "dataset_config": analysis.dataset_config,
        "table_I": analysis.table_i,
        "table_II": analysis.table_ii,
        "users": len(analysis.activity),
        "focus_egos": len(analysis.focus_egos),
        "egos_with_circles": len(analysis.egonets),
        "egos_without_filtered_ties": len(analysis.excluded_egos),
        "mean_circles": _round(sum(n.k for n in analysis.egonets.values()) / len(analysis.egonets)) if analysis.egonets else None,
        "mean_scaling_ratio": _round(sum(per_ego_ratio) / len(per_ego_ratio)) if per_ego_ratio else None,
        "interaction_mix_unknown": analysis.mix_unknown,
        "fig4_pearson": _pearson_summary(analysis.size_activity),
    }


def report_files(analysis: Analysis) -> dict[str, str]:
    """File name -> content for every report artifact."""
    files: dict[str, str] = {}
    files["summary.json"] = json.dumps(summary(analysis), indent=2, sort_keys=True) + "\n"

    files["table_IV_categories.csv"] = _csv(("category", "count", "percent"), category_table(analysis.categories))

    daily_rows = analysis.daily.rows() if analysis.daily else []
    files["fig2_daily.csv"] = _csv(
        (
            "day",
            "cumulative_users",
            "alive_users",
            "active_directed_users",
            "active_undirected_users",
            "directed_toots",
            "undirected_toots",
            "ratio_alive_registered",
            "ratio_directed_undirected",
        ),
        daily_rows,
    )
    files["fig3_mix.csv"] = _csv(
        ("ego_category",) + CATEGORIES,
        [(r,) + tuple(analysis.mix[r][c] for c in CATEGORIES) for r in CATEGORIES],
    )
    files["fig4_size_activity.csv"] = _csv(
        ("ego", "alters_all", "alters_filtered", "toots_per_day", "directed_per_day", "replies_per_day"),
        [(u.ego, u.alters, f.alters, u.toots_per_day, u.directed_per_day, u.replies_per_day) for u, f in analysis.size_activity],
    )
    ls = analysis.lifespan
    files["fig5_lifespan.csv"] = _csv(
        ("lifespan_day", "users", "active_directed_users", "active_undirected_users", "mean_directed_toots", "mean_undirected_toots"),
        zip(ls.days, ls.users, ls.active_directed, ls.active_undirected, ls.mean_directed, ls.mean_undirected) if ls else [],
    )

    alters_rows = []
    for ego in analysis.focus_egos:
        ties = analysis.ties.get(ego, [])
        active, _ = split_active_network(ties, analysis.config.active_frequency_threshold)
        alters_rows.append((ego, len(ties), len(active), len(analysis.filtered[ego])))
    files["alters_per_ego.csv"] = _csv(("ego", "alters", "active_alters", "filtered_alters"), alters_rows)

    cohort = analysis.cohort
    files["circle_histogram.csv"] = _csv(("circles", "egos"), analysis.histogram.items())
    kmax = max(cohort) if cohort else 0
    circle_cols = tuple("circle_%d" % i for i in range(1, kmax + 1))
    ratio_cols = tuple("ratio_%d_%d" % (i + 1, i) for i in range(1, kmax))

    def pad(values, n):
        return list(values) + [None] * (n - len(values))

    files["table_V.csv"] = _csv(("circles", "egos", "ego_network_size"), [(r.k, r.egos, r.network_size) for r in cohort.values()])
    files["table_VI.csv"] = _csv(("circles",) + circle_cols, [[r.k] + pad(r.sizes, kmax) for r in cohort.values()])
    files["table_VII.csv"] = _csv(("circles",) + ratio_cols, [[r.k] + pad(r.ratios, kmax - 1) for r in cohort.values()])
    files["table_VIII.csv"] = _csv(("circles",) + circle_cols, [[r.k] + pad(r.frequencies, kmax) for r in cohort.values()])
    files["table_IX.csv"] = _csv(("circles",) + circle_cols, [[r.k] + pad(r.bond_lengths, kmax) for r in cohort.values()])

    debug = {
        ego: {
            **{k: v for k, v in res.to_debug_dict([t.F for t in analysis.filtered[ego]]).items()},
            "alters": [t.alter for t in analysis.filtered[ego]],
        }
        for ego, res in analysis.clusters.items()
    }
    files["meanshift_debug.json"] = json.dumps(debug, indent=1, sort_keys=True) + "\n"
    return files


def write_atomic_dir(out: str | os.PathLike, files: dict[str, str]) -> Path:
    """Write ``files`` into a temporary sibling directory, then rename it over ``out``."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".%s.tmp-" % out.name, dir=out.parent))
    try:
        for name, content in files.items():
            with open(tmp / name, "w", encoding="utf-8", newline="") as f:
                f.write(content)
        os.chmod(tmp, 0o755)
        if out.exists():
            old = Path(tempfile.mkdtemp(prefix=".%s.old-" % out.name, dir=out.parent))
            os.rmdir(old)
            os.rename(out, old)
            os.rename(tmp, out)
            shutil.rmtree(old)
        else:
            os.rename(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out


def write_report(analysis: Analysis, out) -> Path:
    return write_atomic_dir(out, report_files(analysis))


# --- validation -------------------------------------------------------------


def _check(violations: list[str], ok: bool, message: str) -> None:
    if not ok:
        violations.append(message)


def validate_dataset(dataset: Dataset) -> list[str]:
    """Invariant violations of the stored tables (empty when sound)."""
    v: list[str] = []
    try:
        T_end = dataset.t_end
    except (OSError, KeyError, ValueError) as e:
        return ["config.json: %s" % e]
    try:
        accounts = dataset.accounts()
        toots = dataset.toots()
        interactions = dataset.interactions()
    except (OSError, KeyError, ValueError, TypeError) as e:
        return ["unreadable log: %s" % e]

    seen = set()
    for a in accounts:
        key = (a.username, a.instance)
        _check(v, key not in seen, "accounts.jsonl: duplicate account %s" % a.handle)
        seen.add(key)
    ids = set()
    for t in toots:
        key = (t.author, t.toot_id)
        _check(v, key not in ids, "toots.jsonl: duplicate toot %s by %s" % (t.toot_id, t.author))
        ids.add(key)
    for n, it in enumerate(interactions, 1):
        _check(v, it.ego != it.alter, "interactions.jsonl line %d: self-interaction of %s" % (n, it.ego))
    pairs = [(i.toot_id, i.ego, i.alter) for i in interactions]
    _check(v, len(pairs) == len(set(pairs)), "interactions.jsonl: a (toot, alter) pair appears twice")

    try:
        ties = dataset.ties()
    except (OSError, KeyError, ValueError, TypeError) as e:
        v.append("ties.csv: unreadable (%s)" % e)
        ties = None
    if ties is not None:
        for n, t in enumerate(ties, 2):
            where = "ties.csv row %d (%s -> %s)" % (n, t.ego, t.alter)
            _check(v, t.C >= 1, "%s: C=%d violates C >= 1" % (where, t.C))
            _check(v, t.T0 <= t.T_last, "%s: T0 after T_last" % where)
            _check(v, t.T_last < T_end, "%s: T_last not before observation end" % where)
            _check(v, t.F > 0, "%s: F=%r violates F > 0" % (where, t.F))
            if t.C >= 1 and t.T0 < T_end:
                expect = annual_frequency(t.C, t.T0, T_end)
                _check(v, math.isclose(t.F, expect, rel_tol=1e-9), "%s: F=%r inconsistent with C, T0 (expected %r)" % (where, t.F, expect))
        derived = dataset.derive_ties()
        _check(v, ties_to_csv(ties) == ties_to_csv(derived), "ties.csv: does not match ties rebuilt from toots.jsonl")
    return v


def validate_analysis(analysis: Analysis) -> list[str]:
    v: list[str] = []
    for net in analysis.egonets.values():
        v.extend(structural_violations(net))
        filtered = analysis.filtered[net.ego]
        _check(v, net.circles[-1].cumulative_size == len(filtered), "%s: outer circle is not the whole filtered network" % net.ego)
    hist = analysis.histogram
    _check(v, sum(hist.values()) == len(analysis.egonets), "circle histogram does not sum to the ego count")
    for k, row in analysis.cohort.items():
        _check(v, len(row.sizes) == k and len(row.ratios) == k - 1, "cohort row %d has the wrong width" % k)
    cats = category_table(analysis.categories)
    _check(v, sum(c for _, c, _ in cats) == len(analysis.activity), "category counts do not sum to the user count")
    if analysis.categories:
        _check(v, abs(sum(p for _, _, p in cats) - 100.0) <= 0.01, "category percentages do not sum to 100")
    for r, row in analysis.mix.items():
        vals = [x for x in row.values() if x is not None]
        if vals:
            _check(v, abs(sum(vals) - 1.0) <= 1e-12, "interaction mix row %s does not sum to 1" % r)
    d = analysis.daily
    if d is not None:
        _check(v, all(a <= b for a, b in zip(d.cumulative, d.cumulative[1:])), "cumulative users decrease")
        _check(v, all(a <= c for a, c in zip(d.alive, d.cumulative)), "alive users exceed cumulative users")
        _check(v, d.alive[-1] == 0, "alive users on the last day is not 0")
    return v


def validate(dataset: Dataset, config: Config | None = None) -> list[str]:
    violations = validate_dataset(dataset)
    try:
        analysis = analyze(dataset, config)
    except (ValueError, KeyError, OSError) as e:
        return violations + ["analysis failed: %s" % e]
    return violations + validate_analysis(analysis)
