"""How contact counts turn into tie strengths, and which ties survive the filter."""

from datetime import datetime, timedelta, timezone

from fedinet.interactions import Toot, extract_interactions
from fedinet.ties import build_ties, filter_active_ties, split_active_network

T_END = datetime(2024, 1, 1, tzinfo=timezone.utc)  # end of 2023-12-31
day = timedelta(days=1)
me = "me@example.social"

# a few toots: one reply that also mentions two people, a boost, some mentions
toots = [
    Toot("1", me, T_END - 400 * day, in_reply_to_account="ann@x.org", mentions=("ann@x.org", "bo@y.net"), char_count=30),
    Toot("2", me, T_END - 300 * day, boost_of_author="ann@x.org"),
    Toot("3", me, T_END - 250 * day, mentions=("bo@y.net",), char_count=12),
    Toot("4", me, T_END - 100 * day, mentions=("cy@z.com",), char_count=12),
    Toot("5", me, T_END - 90 * day, mentions=("cy@z.com",), char_count=12),
    Toot("6", me, T_END - 700 * day, mentions=("di@w.io",), char_count=12),
    Toot("7", me, T_END - 20 * day, mentions=("di@w.io",), char_count=12),
]
interactions = [i for t in toots for i in extract_interactions(t)]
for i in interactions:
    print("%-10s -> %-10s %s" % (i.kind, i.alter, i.timestamp.date()))

ties = build_ties(interactions, me, T_END)
kept = {t.alter for t in filter_active_ties(ties, T_END)}
active, inactive = split_active_network(ties)
print("\nalter       C  first contact  F (/yr)  kept")
for t in ties:
    print("%-10s %2d  %s   %6.2f   %s" % (t.alter, t.C, t.T0.date(), t.F, t.alter in kept))
print("\nactive (F >= 1):", [t.alter for t in active])
print("inactive:", [t.alter for t in inactive])
# cy@z.com is contacted often but only recently: too young to keep.
# di@w.io has two contacts spread over almost two years: F just above 1.
