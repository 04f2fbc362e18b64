# Snowball-crawl a small in-process fake fediverse and analyse what was collected.
# Nothing here touches the network: the client talks to MockFediverse through
# an httpx mock transport, with a fake clock so rate limits cost no real time.

import tempfile
from datetime import datetime, timezone

import numpy as np

from fedinet import crawler
from fedinet.client import MastodonClient
from fedinet.mock import build_network
from fedinet.report import analyze, validate

rng = np.random.default_rng(7)
users = ["user%02d@%s" % (i, ["a.social", "b.town"][i % 2]) for i in range(30)]
edges = {}
for u in users:
    alters = rng.choice([v for v in users if v != u], size=4, replace=False)
    edges[u] = [(str(a), int(rng.integers(1, 8))) for a in alters]

fake = build_network(edges, start=datetime(2022, 9, 1, tzinfo=timezone.utc), span_days=450)
fake.rate_limit = 20  # requests per 5 minutes per instance
client = MastodonClient(fake.transport(), clock=fake.clock, sleep=fake.sleep)

out = tempfile.mkdtemp(prefix="fedinet-crawl-") + "/ds"
ds = crawler.run(users[0], 12, "2023-12-31", client, out)

print("visited:", [a.handle for a in ds.accounts()])
print("requests made:", len(fake.requests), " rate-limited:", sum(1 for r in fake.requests if r[2] == 429))
print("simulated time spent waiting: %.0f s" % (fake.now - datetime(2024, 3, 1, tzinfo=timezone.utc).timestamp()))

a = analyze(ds)
print("\ntable I:", a.table_i)
print("table II:", a.table_ii)
print("circles per ego:", a.histogram)
print("invariant violations:", validate(ds) or "none")
