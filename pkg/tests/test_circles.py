import numpy as np
import pytest

from fedinet.circles import (
    build_circles,
    circle_count_distribution,
    cohort_aggregate,
    ego_network,
    scaling_ratios,
    structural_violations,
)
from fedinet.meanshift import ClusterResult
from conftest import make_tie


def _ties(freqs, ego="e@x"):
    return [make_tie("a%02d" % i, f, ego=ego) for i, f in enumerate(freqs)]


def _net(sizes, ego="e@x"):
    """An ego network whose cumulative sizes are ``sizes``, built from well-separated frequency groups."""
    freqs, labels, centers = [], [], []
    prev = 0
    for j, s in enumerate(sizes):
        f = 1000.0 / (10 ** j)
        centers.append(f)
        for _ in range(s - prev):
            freqs.append(f)
            labels.append(j)
        prev = s
    order = np.argsort(centers)
    relabel = {int(old): new for new, old in enumerate(order)}
    res = ClusterResult(np.array([relabel[x] for x in labels]), np.array(sorted(centers)), 1.0)
    return build_circles(_ties(freqs, ego), res)


def test_cumulative_circles():
    ties = _ties([100.0, 101.0, 30.0, 31.0, 32.0, 2.0])
    res = ClusterResult(np.array([2, 2, 1, 1, 1, 0]), np.array([2.0, 31.0, 100.5]), 5.0)
    net = build_circles(ties, res)
    assert net.k == 3 and net.sizes == [2, 5, 6]
    assert net.circles[0].members == {"a00", "a01"}
    assert net.ring(1) == {"a02", "a03", "a04"}
    assert net.circles[1].mean_frequency == pytest.approx(np.mean([t.F for t in ties[:5]]))
    assert net.circles[2].min_frequency == pytest.approx(ties[5].F)
    assert structural_violations(net) == []


def test_rings_mode_changes_only_stats():
    ties = _ties([100.0, 101.0, 30.0, 31.0, 32.0, 2.0])
    res = ClusterResult(np.array([2, 2, 1, 1, 1, 0]), np.array([2.0, 31.0, 100.5]), 5.0)
    cum = build_circles(ties, res)
    ring = build_circles(ties, res, rings=True)
    assert cum.sizes == ring.sizes
    assert ring.circles[1].mean_frequency == pytest.approx(np.mean([t.F for t in ties[2:5]]))
    assert ring.circles[2].mean_frequency == pytest.approx(ties[5].F)


def test_label_mismatch():
    with pytest.raises(ValueError):
        build_circles(_ties([1.5, 2.0]), ClusterResult(np.array([0]), np.array([1.0]), 1.0))


def test_ego_network_end_to_end():
    freqs = [80.0, 82.0, 20.0, 21.0, 22.0, 23.0, 3.0, 3.1, 3.2, 3.3, 3.4, 3.5]
    net = ego_network(_ties(freqs))
    assert net.sizes[-1] == len(freqs)
    assert structural_violations(net) == []


def test_scaling_ratios():
    assert scaling_ratios([1, 3, 9]) == [3.0, 3.0]
    assert scaling_ratios(_net([2, 5, 15])) == [2.5, 3.0]
    assert scaling_ratios([4]) == []


def test_cohort_means_ratios_per_ego():
    nets = [_net([1, 3, 9], "a"), _net([2, 4, 20], "b")]
    row = cohort_aggregate(nets)[3]
    assert row.egos == 2
    assert row.sizes == [1.5, 3.5, 14.5]
    assert row.ratios == pytest.approx([2.5, 4.0])
    assert row.ratios != pytest.approx(scaling_ratios(row.sizes))
    assert row.network_size == 14.5


def test_cohort_groups_by_k():
    nets = [_net([1, 3], "a"), _net([2, 6], "b"), _net([5], "c")]
    rows = cohort_aggregate(nets)
    assert sorted(rows) == [1, 2]
    assert rows[1].ratios == [] and rows[2].egos == 2
    assert circle_count_distribution(nets) == {1: 1, 2: 2}
    with pytest.raises(ValueError):
        cohort_aggregate([])


def test_violations_detected():
    net = _net([2, 5])
    broken = type(net)(net.ego, (net.circles[1], net.circles[0]))
    assert structural_violations(broken)
