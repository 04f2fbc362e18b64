"""In-process fake of the Mastodon endpoints used by :mod:`fedinet.client`.

The fake keeps its own clock so rate-limit windows can be exercised without
real sleeping: pass ``fake.clock`` and ``fake.sleep`` to the client.
"""

from __future__ import annotations

import itertools
import math
import zlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import httpx

from .timeutil import format_ts, to_utc

EPOCH_START = datetime(2024, 3, 1, tzinfo=timezone.utc).timestamp()


@dataclass
class _MockAccount:
    account_id: str
    username: str
    host: str
    bot: bool
    created_at: datetime
    state: str = "active"  # active | suspended | private
    statuses: list[dict] = field(default_factory=list)
    gone_after_pages: int | None = None
    pages_served: int = 0


class MockFediverse:
    """A set of fake instances served through ``httpx.MockTransport``.

    ``rate_limit`` (requests per ``window`` seconds, per host) enables 429s.
    """

    def __init__(self, rate_limit: int | None = None, window: float = 300.0, start: float = EPOCH_START):
        self.rate_limit = rate_limit
        self.window = window
        self.now = start
        self.accounts: dict[str, _MockAccount] = {}
        self._by_id: dict[tuple[str, str], _MockAccount] = {}
        self._ids = itertools.count(1)
        self._windows: dict[str, tuple[float, int]] = {}
        self.requests: list[tuple[str, str, int]] = []  # (host, path+query, status)

    # -- clock -------------------------------------------------------------

    def clock(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.now += max(0.0, seconds)

    # -- fixture building --------------------------------------------------

    def add_account(
        self,
        handle: str,
        *,
        bot: bool = False,
        created_at: datetime | None = None,
        state: str = "active",
    ) -> str:
        username, host = handle.split("@")
        acc = _MockAccount(
            account_id=str(100000 + next(self._ids)),
            username=username,
            host=host,
            bot=bot,
            created_at=to_utc(created_at or datetime(2022, 1, 1)),
            state=state,
        )
        self.accounts[handle] = acc
        self._by_id[(host, acc.account_id)] = acc
        return acc.account_id

    def _status_id(self, created_at: datetime) -> str:
        # snowflake-like: millisecond timestamp in the high bits
        ms = int(created_at.timestamp() * 1000)
        return str((ms << 16) | (next(self._ids) & 0xFFFF))

    def _acct_ref(self, handle: str, host: str) -> dict:
        username, h = handle.split("@")
        target = self.accounts.get(handle)
        return {
            "id": target.account_id if target else str(zlib.crc32(handle.encode())),
            "username": username,
            "acct": username if h == host else handle,
            "url": "https://%s/@%s" % (h, username),
        }

    def add_status(
        self,
        author: str,
        created_at: datetime,
        *,
        text: str = "hello",
        mentions: list[str] = (),
        reply_to: str | None = None,
        reblog_of: str | None = None,
        tags: list[str] = (),
        urls: list[str] = (),
        media: int = 0,
    ) -> str:
        """Append a status; ``author``/``mentions``/etc. are ``user@host`` handles."""
        acc = self.accounts[author]
        created_at = to_utc(created_at)
        status = {
            "_created": created_at,
            "_author": author,
            "_mentions": list(mentions),
            "_reply_to": reply_to,
            "_reblog_of": reblog_of,
            "_tags": list(tags),
            "_urls": list(urls),
            "_text": text,
            "_media": media,
            "id": self._status_id(created_at),
        }
        if reply_to is not None and reply_to not in status["_mentions"] and reply_to != author:
            # Mastodon prepends the replied-to account to the mention list
            status["_mentions"].insert(0, reply_to)
        acc.statuses.append(status)
        acc.statuses.sort(key=lambda s: int(s["id"]), reverse=True)
        return status["id"]

    def _render(self, s: dict, host: str) -> dict:
        author = self.accounts[s["_author"]]
        account = {
            "id": author.account_id,
            "username": author.username,
            "acct": s["_author"] if author.host != host else author.username,
            "bot": author.bot,
            "created_at": format_ts(author.created_at),
        }
        base = {"id": s["id"], "created_at": format_ts(s["_created"]), "account": account}
        if s["_reblog_of"]:
            orig = self._acct_ref(s["_reblog_of"], host)
            base.update(
                content="",
                in_reply_to_id=None,
                in_reply_to_account_id=None,
                mentions=[],
                tags=[],
                media_attachments=[],
                reblog={"id": s["id"] + "0", "account": {**orig, "bot": False}, "content": "<p>original</p>"},
            )
            return base
        mentions = [self._acct_ref(m, host) for m in s["_mentions"]]
        parts = ["<p>"]
        for m in s["_mentions"]:
            u, h = m.split("@")
            parts.append('<span class="h-card"><a href="https://%s/@%s" class="u-url mention">@%s</a></span> ' % (h, u, u))
        parts.append(s["_text"])
        for t in s["_tags"]:
            parts.append(' <a href="https://%s/tags/%s" class="mention hashtag" rel="tag">#%s</a>' % (host, t, t))
        for u in s["_urls"]:
            parts.append(' <a href="%s" rel="nofollow noopener">%s</a>' % (u, u))
        parts.append("</p>")
        reply_account_id = None
        if s["_reply_to"]:
            reply_account_id = self._acct_ref(s["_reply_to"], host)["id"]
        base.update(
            content="".join(parts),
            in_reply_to_id="1" if s["_reply_to"] else None,
            in_reply_to_account_id=reply_account_id,
            mentions=mentions,
            tags=[{"name": t} for t in s["_tags"]],
            media_attachments=[{"id": str(i), "type": "image"} for i in range(s["_media"])],
            reblog=None,
        )
        return base

    # -- failure scripting -------------------------------------------------

    def set_state(self, handle: str, state: str) -> None:
        self.accounts[handle].state = state

    def gone_after(self, handle: str, pages: int) -> None:
        """Answer 410 for the timeline of ``handle`` once ``pages`` pages were served."""
        self.accounts[handle].gone_after_pages = pages

    # -- HTTP --------------------------------------------------------------

    def _rate_check(self, host: str) -> httpx.Response | None:
        if self.rate_limit is None:
            return None
        start, used = self._windows.get(host, (self.now, 0))
        if self.now >= start + self.window:
            start, used = self.now, 0
        reset = datetime.fromtimestamp(start + self.window, tz=timezone.utc)
        if used >= self.rate_limit:
            retry = start + self.window - self.now
            return httpx.Response(
                429,
                json={"error": "Too many requests"},
                headers={
                    "Retry-After": str(math.ceil(retry)),
                    "X-RateLimit-Remaining": "0",
                    "X-RateLimit-Reset": format_ts(reset),
                },
            )
        self._windows[host] = (start, used + 1)
        return None

    def _rate_headers(self, host: str) -> dict:
        if self.rate_limit is None:
            return {}
        start, used = self._windows[host]
        reset = datetime.fromtimestamp(start + self.window, tz=timezone.utc)
        return {
            "X-RateLimit-Limit": str(self.rate_limit),
            "X-RateLimit-Remaining": str(self.rate_limit - used),
            "X-RateLimit-Reset": format_ts(reset),
        }

    def handle(self, request: httpx.Request) -> httpx.Response:
        resp = self._dispatch(request)
        self.requests.append((request.url.host, str(request.url.raw_path, "ascii"), resp.status_code))
        return resp

    def _dispatch(self, request: httpx.Request) -> httpx.Response:
        host = request.url.host
        limited = self._rate_check(host)
        if limited is not None:
            return limited
        headers = self._rate_headers(host)
        path = request.url.path
        params = request.url.params
        if path == "/api/v1/accounts/lookup":
            acc = self.accounts.get("%s@%s" % (params.get("acct", ""), host))
            if acc is None or acc.state == "suspended":
                return httpx.Response(404, json={"error": "Record not found"}, headers=headers)
            if acc.state == "private":
                return httpx.Response(403, json={"error": "This action is not allowed"}, headers=headers)
            return httpx.Response(
                200,
                json={
                    "id": acc.account_id,
                    "username": acc.username,
                    "acct": acc.username,
                    "bot": acc.bot,
                    "created_at": format_ts(acc.created_at),
                },
                headers=headers,
            )
        parts = path.strip("/").split("/")
        if len(parts) == 5 and parts[:3] == ["api", "v1", "accounts"] and parts[4] == "statuses":
            acc = self._by_id.get((host, parts[3]))
            if acc is None or acc.state == "suspended":
                return httpx.Response(404, json={"error": "Record not found"}, headers=headers)
            if acc.gone_after_pages is not None and acc.pages_served >= acc.gone_after_pages:
                return httpx.Response(410, json={"error": "Gone"}, headers=headers)
            limit = min(int(params.get("limit", 20)), 40)
            statuses = acc.statuses
            if "max_id" in params:
                max_id = int(params["max_id"])
                statuses = [s for s in statuses if int(s["id"]) < max_id]
            page = [self._render(s, host) for s in statuses[:limit]]
            acc.pages_served += 1
            return httpx.Response(200, json=page, headers=headers)
        return httpx.Response(404, json={"error": "unknown endpoint"}, headers=headers)

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)


def build_network(edges: dict[str, list[tuple[str, int]]], *, start: datetime, span_days: float = 540.0) -> MockFediverse:
    """Fake fediverse where ``edges[u]`` lists ``(alter, n_contacts)`` for each user.

    Contacts are spread evenly over ``span_days`` from ``start`` as mention
    toots; every user also gets one plain toot so empty timelines do not occur.
    """
    fake = MockFediverse()
    users = sorted(set(edges) | {a for lst in edges.values() for a, _ in lst})
    for u in users:
        fake.add_account(u, created_at=start - timedelta(days=30))
    for u in users:
        fake.add_status(u, start, text="first toot")
        for j, (alter, n) in enumerate(edges.get(u, ())):
            for c in range(n):
                offset = span_days * (c + 1) / (n + 1) + j * 0.01
                fake.add_status(u, start + timedelta(days=offset), mentions=[alter], text="hi")
    return fake
