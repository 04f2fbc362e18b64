import warnings
from datetime import timedelta

import pytest

from fedinet import crawler
from fedinet.client import FediError
from fedinet.crawler import (
    CheckpointError,
    CrawlWarning,
    SnowballCrawler,
    checkpoint,
    is_active_alter,
    new_state,
    order_alters,
    resume,
)
from fedinet.mock import build_network
from fedinet.ties import Dataset
from conftest import T_END, make_tie, mock_client, mock_network, utc

YEAR = timedelta(days=365.25)
T_END_DAY = "2023-12-31"


def test_is_active_alter():
    assert not is_active_alter(1, T_END - YEAR, T_END)
    assert is_active_alter(3, T_END - YEAR / 2, T_END)
    assert not is_active_alter(2, T_END - 3 * YEAR, T_END)
    assert is_active_alter(2, T_END - 2 * YEAR, T_END)  # exactly once a year


def test_order_alters():
    ties = [
        make_tie("B", C=3, T0=T_END - YEAR),
        make_tie("C", C=1, T0=T_END - YEAR),
        make_tie("D", C=5, T0=T_END - YEAR),
        make_tie("A", C=3, T0=T_END - YEAR),
        make_tie("E", C=2, T0=T_END - 5 * YEAR),
    ]
    assert order_alters(ties, T_END, set()) == ["D", "A", "B", "E", "C"]
    assert order_alters(ties, T_END, {"D", "E"}) == ["A", "B", "C"]


def _files(root):
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def _crawl(out, target=10, users=50):
    fake, names, _ = mock_network(users)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CrawlWarning)
        crawler.run(names[0], target, T_END_DAY, mock_client(fake), out)
    return resume((out / "checkpoint.json").read_bytes())


def test_visits_exactly_target_and_connected(tmp_data):
    fake, names, edges = mock_network()
    state = new_state(names[0], 10, T_END_DAY)
    SnowballCrawler(mock_client(fake), tmp_data / "ds").run(state)
    assert state.collected == 10 and len(set(state.visited)) == 10
    assert state.visited[0] == names[0]
    for i, u in enumerate(state.visited[1:], 1):
        assert any(u in dict(edges[v]) for v in state.visited[:i])
    assert not set(state.frontier) & set(state.visited)


def test_target_one_visits_seed_only(tmp_data):
    st = _crawl(tmp_data / "ds", target=1)
    assert st.visited == ["u00@a.example"]
    ds = Dataset.open(tmp_data / "ds")
    assert [a.handle for a in ds.accounts()] == ["u00@a.example"]
    assert {t.ego for t in ds.ties()} == {"u00@a.example"}


def test_runs_are_deterministic(tmp_data):
    a = _crawl(tmp_data / "a")
    b = _crawl(tmp_data / "b")
    assert a.visited == b.visited
    assert _files(tmp_data / "a") == _files(tmp_data / "b")


def test_resume_matches_uninterrupted(tmp_data):
    _crawl(tmp_data / "full")
    fake, names, _ = mock_network()
    state = new_state(names[0], 10, T_END_DAY)
    SnowballCrawler(mock_client(fake), tmp_data / "cut").run(state, max_steps=4)
    # a partially written record after the last checkpoint must be discarded
    with open(tmp_data / "cut" / Dataset.TOOTS, "a") as f:
        f.write('{"toot_id": "half')
    fake2, _, _ = mock_network()
    crawler.run(names[0], 10, T_END_DAY, mock_client(fake2), tmp_data / "cut",
                resume_from=(tmp_data / "cut" / "checkpoint.json").read_bytes())
    assert _files(tmp_data / "cut") == _files(tmp_data / "full")


def test_skipped_accounts_do_not_count(tmp_data):
    fake, names, _ = mock_network()
    probe = new_state(names[0], 1, T_END_DAY)
    SnowballCrawler(mock_client(fake), tmp_data / "probe").step(probe)
    first = probe.frontier[0]
    fake, _, _ = mock_network()
    fake.set_state(first, "suspended")
    st = new_state(names[0], 10, T_END_DAY)
    SnowballCrawler(mock_client(fake), tmp_data / "ds").run(st)
    assert first in st.skipped and first not in st.visited
    assert st.collected == 10


def test_private_account_skipped(tmp_data):
    fake = build_network({"a@x.example": [("b@x.example", 3), ("c@x.example", 2)]}, start=utc(2023, 1, 1), span_days=200)
    fake.set_state("b@x.example", "private")
    st = new_state("a@x.example", 5, T_END_DAY)
    with pytest.warns(CrawlWarning):
        SnowballCrawler(mock_client(fake), tmp_data / "ds").run(st)
    assert st.visited == ["a@x.example", "c@x.example"] and st.skipped == ["b@x.example"]


def test_small_component_warns(tmp_data):
    edges = {"u%d@x.example" % i: [("u%d@x.example" % ((i + 1) % 5), 2)] for i in range(5)}
    fake = build_network(edges, start=utc(2023, 1, 1), span_days=200)
    st = new_state("u0@x.example", 50, T_END_DAY)
    with pytest.warns(CrawlWarning):
        SnowballCrawler(mock_client(fake), tmp_data / "ds").run(st)
    assert st.collected == 5


def test_unresolvable_seed(tmp_data):
    fake, _, _ = mock_network(10)
    with pytest.raises(FediError):
        crawler.run("ghost@a.example", 3, T_END_DAY, mock_client(fake), tmp_data / "ds")


def test_toots_after_t_end_ignored(tmp_data):
    fake = build_network({"a@x.example": [("b@x.example", 2)]}, start=utc(2023, 6, 1), span_days=100)
    fake.add_status("a@x.example", utc(2024, 1, 1), mentions=["late@x.example"])
    fake.add_status("a@x.example", utc(2023, 12, 31, 23, 59, 59), mentions=["edge@x.example"])
    st = new_state("a@x.example", 1, T_END_DAY)
    SnowballCrawler(mock_client(fake), tmp_data / "ds").run(st)
    alters = {t.alter for t in Dataset.open(tmp_data / "ds").ties()}
    assert alters == {"b@x.example", "edge@x.example"}


def test_checkpoint_roundtrip_fresh():
    st = new_state("a@b.example", 3, T_END_DAY)
    again = resume(checkpoint(st))
    assert again == st


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b[: len(b) // 2],
        lambda b: b.replace(b'"target_n": 3', b'"target_n": 4'),
        lambda b: b.replace(b'"version": 1', b'"version": 99'),
        lambda b: b"\xff\xfe",
        lambda b: b"[]",
    ],
)
def test_corrupt_checkpoint(mutate):
    data = checkpoint(new_state("a@b.example", 3, T_END_DAY))
    with pytest.raises(CheckpointError):
        resume(mutate(data))


def test_step_preconditions(tmp_data):
    st = new_state("a@b.example", 1, T_END_DAY)
    st.frontier.clear()
    with pytest.raises(ValueError):
        SnowballCrawler(None, tmp_data / "ds").step(st)
    with pytest.raises(ValueError):
        new_state("a@b.example", 0, T_END_DAY)
