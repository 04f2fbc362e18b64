import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fedinet.ties import TieRecord, annual_frequency  # noqa: E402

T_END = datetime(2024, 1, 1, tzinfo=timezone.utc)


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


def make_tie(alter, F=None, *, ego="ego@x.example", C=4, T0=None, T_last=None, T_end=T_END):
    """A tie record; when ``F`` is given, ``T0`` is solved so the record is self-consistent."""
    if T0 is None:
        T0 = T_end - timedelta(days=365.25 * C / F) if F is not None else T_end - timedelta(days=300)
    T_last = T_last or T0 + (T_end - T0) / 2
    return TieRecord(ego, alter, C, T0, T_last, annual_frequency(C, T0, T_end))


@pytest.fixture
def tmp_data(tmp_path, monkeypatch):
    monkeypatch.delenv("FEDINET_DATA_DIR", raising=False)
    return tmp_path


def mock_network(n_users=50, seed=11):
    """Deterministic fake fediverse of ``n_users`` accounts spread over three instances."""
    import numpy as np

    from fedinet.mock import build_network

    rng = np.random.default_rng(seed)
    users = ["u%02d@%s" % (i, ("a.example", "b.example", "c.example")[i % 3]) for i in range(n_users)]
    edges = {}
    for i, u in enumerate(users):
        k = int(rng.integers(2, 6))
        alters = rng.choice([v for v in users if v != u], size=k, replace=False)
        edges[u] = [(str(a), int(rng.integers(1, 7))) for a in alters]
    return build_network(edges, start=utc(2022, 6, 1), span_days=540), users, edges


def mock_client(fake):
    from fedinet.client import MastodonClient

    return MastodonClient(fake.transport(), clock=fake.clock, sleep=fake.sleep)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
