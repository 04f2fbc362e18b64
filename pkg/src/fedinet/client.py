"""Minimal read-only Mastodon REST client.

Only two endpoints are used: account lookup and the account statuses
timeline. Requests to one host are serialized behind a per-host limiter that
honours ``X-RateLimit-Remaining``/``X-RateLimit-Reset`` and backs off on
HTTP 429. The HTTP transport is injectable (any ``httpx.BaseTransport``), so
tests can run against :class:`fedinet.mock.MockFediverse`.
"""

from __future__ import annotations

import email.utils
import logging
import threading
import time
from dataclasses import dataclass
from datetime import datetime
from typing import Callable

import httpx

from .interactions import Toot, parse_status
from .timeutil import format_ts, parse_ts

log = logging.getLogger(__name__)

PAGE_SIZE = 40
MAX_RETRIES = 5
USER_AGENT = "fedinet/0.1 (research crawler)"


class FediError(Exception):
    """Base class for API failures."""


class InvalidHandle(FediError, ValueError):
    pass


class NotFound(FediError):
    pass


class Forbidden(FediError):
    pass


class Gone(FediError):
    """The account disappeared while its timeline was being read.

    ``partial`` holds the toots gathered before the failure.
    """

    def __init__(self, message: str, partial: list[Toot] | None = None):
        super().__init__(message)
        self.partial = partial or []


class RateLimited(FediError):
    def __init__(self, message: str, retry_after: float):
        super().__init__(message)
        self.retry_after = retry_after


class ApiError(FediError):
    pass


@dataclass(frozen=True)
class Account:
    account_id: str
    username: str
    instance: str
    is_bot: bool
    created_at: datetime

    def __post_init__(self):
        if not self.account_id:
            raise ValueError("account_id must be non-empty")

    @property
    def handle(self) -> str:
        return "%s@%s" % (self.username, self.instance)

    def to_dict(self) -> dict:
        return {
            "account_id": self.account_id,
            "username": self.username,
            "instance": self.instance,
            "is_bot": self.is_bot,
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_dict(cls, d) -> "Account":
        return cls(str(d["account_id"]), d["username"], d["instance"], bool(d["is_bot"]), parse_ts(d["created_at"]))


@dataclass(frozen=True)
class PageCursor:
    max_id: str | None = None


def split_handle(handle: str) -> tuple[str, str]:
    h = handle.strip().lstrip("@")
    parts = h.split("@")
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise InvalidHandle("expected 'user@instance', got %r" % handle)
    return parts[0], parts[1].lower()


def _status_sort_key(toot: Toot):
    # snowflake ids are decimal strings; compare by length first
    return (toot.created_at, len(toot.toot_id), toot.toot_id)


def _parse_retry_after(value: str | None, now: float) -> float | None:
    if not value:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        pass
    try:
        when = email.utils.parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    return max(0.0, when.timestamp() - now)


class _HostLimiter:
    def __init__(self):
        self.lock = threading.Lock()
        self.blocked_until = 0.0


class MastodonClient:
    """Read-only client spanning any number of instances.

    ``clock`` must return wall-clock epoch seconds (it is compared with
    ``X-RateLimit-Reset``); ``sleep`` is called for every pause.
    """

    def __init__(
        self,
        transport: httpx.BaseTransport | None = None,
        *,
        page_size: int = PAGE_SIZE,
        max_retries: int = MAX_RETRIES,
        clock: Callable[[], float] = time.time,
        sleep: Callable[[float], None] = time.sleep,
        scheme: str = "https",
        timeout: float = 30.0,
    ):
        self.page_size = page_size
        self.max_retries = max_retries
        self.clock = clock
        self.sleep = sleep
        self.scheme = scheme
        self._http = httpx.Client(transport=transport, timeout=timeout, headers={"User-Agent": USER_AGENT})
        self._limiters: dict[str, _HostLimiter] = {}
        self._limiters_lock = threading.Lock()

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _limiter(self, host: str) -> _HostLimiter:
        with self._limiters_lock:
            return self._limiters.setdefault(host, _HostLimiter())

    def _get(self, host: str, path: str, params: dict, *, missing: type[FediError] = NotFound):
        limiter = self._limiter(host)
        url = "%s://%s%s" % (self.scheme, host, path)
        with limiter.lock:
            for attempt in range(self.max_retries + 1):
                wait = limiter.blocked_until - self.clock()
                if wait > 0:
                    self.sleep(wait)
                try:
                    resp = self._http.get(url, params=params)
                except httpx.HTTPError as e:
                    raise ApiError("request to %s failed: %s" % (url, e)) from e
                now = self.clock()
                remaining = resp.headers.get("X-RateLimit-Remaining")
                reset = resp.headers.get("X-RateLimit-Reset")
                if remaining is not None and reset and remaining.strip() == "0":
                    try:
                        limiter.blocked_until = max(limiter.blocked_until, parse_ts(reset).timestamp())
                    except ValueError:
                        log.debug("unparseable X-RateLimit-Reset %r", reset)
                if resp.status_code == 429:
                    hint = _parse_retry_after(resp.headers.get("Retry-After"), now)
                    if hint is None:
                        hint = max(1.0, limiter.blocked_until - now)
                    if attempt == self.max_retries:
                        raise RateLimited("rate limited by %s after %d retries" % (host, attempt), hint)
                    delay = hint * (2**attempt)
                    log.info("429 from %s, backing off %.1fs (attempt %d)", host, delay, attempt + 1)
                    limiter.blocked_until = max(limiter.blocked_until, now + delay)
                    continue
                if resp.status_code in (404, 410):
                    raise missing("%s returned %d" % (url, resp.status_code))
                if resp.status_code in (401, 403):
                    raise Forbidden("%s returned %d" % (url, resp.status_code))
                if resp.status_code >= 400:
                    raise ApiError("%s returned %d" % (url, resp.status_code))
                try:
                    return resp.json()
                except ValueError as e:
                    raise ApiError("invalid JSON from %s" % url) from e
        raise AssertionError("unreachable")

    def lookup_account(self, handle: str) -> Account:
        username, host = split_handle(handle)
        data = self._get(host, "/api/v1/accounts/lookup", {"acct": username})
        if data.get("suspended"):
            raise NotFound("%s is suspended" % handle)
        return Account(
            account_id=str(data["id"]),
            username=data.get("username", username),
            instance=host,
            is_bot=bool(data.get("bot", False)),
            created_at=parse_ts(data["created_at"]),
        )

    def fetch_statuses(
        self, account: Account, cursor: PageCursor | None = None, until: datetime | None = None
    ) -> tuple[list[Toot], PageCursor | None]:
        """Read one page (newest first). Returns ``None`` as cursor at the end of the timeline."""
        params: dict = {"limit": self.page_size}
        if cursor is not None and cursor.max_id is not None:
            params["max_id"] = cursor.max_id
        page = self._get(account.instance, "/api/v1/accounts/%s/statuses" % account.account_id, params, missing=Gone)
        toots = [parse_status(s, account.instance) for s in page]
        # short page: nothing older is left
        next_cursor = None if len(page) < self.page_size else PageCursor(str(page[-1]["id"]))
        if until is not None:
            toots = [t for t in toots if t.created_at <= until]
        return toots, next_cursor

    def fetch_full_timeline(self, account: Account, until: datetime | None = None) -> list[Toot]:
        """All toots up to ``until``, sorted newest first.

        Raises :class:`Gone` carrying the partial result when the account
        vanishes between pages.
        """
        out: list[Toot] = []
        cursor: PageCursor | None = PageCursor()
        while cursor is not None:
            try:
                toots, cursor = self.fetch_statuses(account, cursor, until)
            except Gone as e:
                raise Gone(str(e), partial=sorted(out, key=_status_sort_key, reverse=True)) from e
            out.extend(toots)
        out.sort(key=_status_sort_key, reverse=True)
        return out
