"""Nested social circles and the cohort-level structural tables.

Clusters are ordered by decreasing center frequency; circle ``i`` is the
union of the first ``i`` clusters, so sizes are cumulative and the outermost
circle is the whole filtered ego network. Per-circle frequency and bond
length statistics use the same cumulative member sets unless ``rings=True``,
in which case they are computed over each ring (circle minus the previous
circle) only.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .meanshift import ClusterResult, cluster_frequencies
from .ties import TieRecord


@dataclass(frozen=True)
class Circle:
    members: frozenset[str]
    cumulative_size: int
    min_frequency: float
    mean_frequency: float
    mean_bond_length: float


@dataclass(frozen=True)
class EgoNetwork:
    ego: str
    circles: tuple[Circle, ...]

    @property
    def k(self) -> int:
        return len(self.circles)

    @property
    def sizes(self) -> list[int]:
        return [c.cumulative_size for c in self.circles]

    def ring(self, i: int) -> frozenset[str]:
        inner = self.circles[i - 1].members if i > 0 else frozenset()
        return self.circles[i].members - inner


def build_circles(ties: Sequence[TieRecord], result: ClusterResult, rings: bool = False) -> EgoNetwork:
    ties = list(ties)
    if len(result.labels) != len(ties):
        raise ValueError("cluster labels cover %d ties, expected %d" % (len(result.labels), len(ties)))
    if not ties:
        raise ValueError("no ties")
    ego = ties[0].ego
    order = np.argsort(-np.asarray(result.centers), kind="stable")
    groups: list[list[TieRecord]] = [[] for _ in order]
    rank = {int(c): r for r, c in enumerate(order)}
    for tie, label in zip(ties, result.labels):
        groups[rank[int(label)]].append(tie)
    groups = [g for g in groups if g]

    circles = []
    cumulative: list[TieRecord] = []
    for group in groups:
        cumulative = cumulative + group
        stat_set = group if rings else cumulative
        freqs = [t.F for t in cumulative]
        circles.append(
            Circle(
                members=frozenset(t.alter for t in cumulative),
                cumulative_size=len(cumulative),
                min_frequency=min(freqs),
                mean_frequency=float(np.mean([t.F for t in stat_set])),
                mean_bond_length=float(np.mean([t.bond_length_days for t in stat_set])),
            )
        )
    return EgoNetwork(ego, tuple(circles))


def ego_network(ties: Sequence[TieRecord], quantile: float = 0.3, rings: bool = False) -> EgoNetwork:
    """Cluster an ego's filtered ties and build its circles."""
    return build_circles(ties, cluster_frequencies(ties, quantile), rings=rings)


def scaling_ratios(sizes_or_net) -> list[float]:
    sizes = sizes_or_net.sizes if isinstance(sizes_or_net, EgoNetwork) else list(sizes_or_net)
    return [b / a for a, b in zip(sizes[:-1], sizes[1:])]


def circle_count_distribution(egonets: Iterable[EgoNetwork]) -> dict[int, int]:
    return dict(sorted(Counter(e.k for e in egonets).items()))


@dataclass(frozen=True)
class CohortRow:
    k: int
    egos: int
    sizes: list[float]
    ratios: list[float]
    frequencies: list[float]
    bond_lengths: list[float]

    @property
    def network_size(self) -> float:
        return self.sizes[-1]


def cohort_aggregate(egonets: Iterable[EgoNetwork]) -> dict[int, CohortRow]:
    """Per circle-count means. Scaling ratios are averaged per ego, not taken from mean sizes."""
    by_k: dict[int, list[EgoNetwork]] = defaultdict(list)
    for e in egonets:
        by_k[e.k].append(e)
    if not by_k:
        raise ValueError("empty cohort")
    rows = {}
    for k in sorted(by_k):
        nets = by_k[k]
        rows[k] = CohortRow(
            k=k,
            egos=len(nets),
            sizes=np.mean([n.sizes for n in nets], axis=0).tolist(),
            ratios=np.mean([scaling_ratios(n) for n in nets], axis=0).tolist() if k > 1 else [],
            frequencies=np.mean([[c.mean_frequency for c in n.circles] for n in nets], axis=0).tolist(),
            bond_lengths=np.mean([[c.mean_bond_length for c in n.circles] for n in nets], axis=0).tolist(),
        )
    return rows


def structural_violations(net: EgoNetwork) -> list[str]:
    """Nesting and monotonicity checks for one ego network (empty list when sound)."""
    out = []
    for i in range(1, net.k):
        inner, outer = net.circles[i - 1], net.circles[i]
        if not inner.members < outer.members:
            out.append("%s: circle %d not strictly inside circle %d" % (net.ego, i, i + 1))
        if not inner.cumulative_size < outer.cumulative_size:
            out.append("%s: size of circle %d not below circle %d" % (net.ego, i, i + 1))
        if not inner.min_frequency > outer.min_frequency:
            out.append("%s: min frequency not decreasing at circle %d" % (net.ego, i + 1))
        if not inner.mean_frequency > outer.mean_frequency:
            out.append("%s: mean frequency not decreasing at circle %d" % (net.ego, i + 1))
    for c in net.circles:
        if c.cumulative_size != len(c.members):
            out.append("%s: circle size does not match its member count" % net.ego)
    return out
