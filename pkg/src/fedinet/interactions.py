"""Toot taxonomy and ego -> alter interaction extraction.

A toot is *directed* when it replies to, mentions or boosts another account;
anything else is *undirected*. Repeatable features (mentions, hashtags, URLs,
media) are counted once per toot.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping

from .timeutil import format_ts, parse_ts

REPLY = "reply"
BOOST = "boost"
MENTION = "mention"
KINDS = (REPLY, BOOST, MENTION)  # precedence order

TABLE_II_COLUMNS = (
    "toots",
    "directed",
    "undirected",
    "plaintext",
    "replies",
    "with_hashtags",
    "with_mentions",
    "with_urls",
    "boosts",
    "with_multimedia",
)


@dataclass(frozen=True)
class Toot:
    toot_id: str
    author: str
    created_at: datetime
    in_reply_to_account: str | None = None
    mentions: tuple[str, ...] = ()
    boost_of_author: str | None = None
    hashtags: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    media_count: int = 0
    char_count: int = 0

    def __post_init__(self):
        # dedupe while keeping first-seen order
        object.__setattr__(self, "mentions", tuple(dict.fromkeys(self.mentions)))
        object.__setattr__(self, "hashtags", tuple(self.hashtags))
        object.__setattr__(self, "urls", tuple(self.urls))
        object.__setattr__(self, "created_at", parse_ts(self.created_at))
        if self.media_count < 0 or self.char_count < 0:
            raise ValueError("media_count and char_count must be non-negative")
        if self.boost_of_author is not None and self.char_count > 0:
            raise ValueError("a boost carries no text of its own")

    def to_dict(self) -> dict:
        return {
            "toot_id": self.toot_id,
            "author": self.author,
            "created_at": format_ts(self.created_at),
            "in_reply_to_account": self.in_reply_to_account,
            "mentions": list(self.mentions),
            "boost_of_author": self.boost_of_author,
            "hashtags": list(self.hashtags),
            "urls": list(self.urls),
            "media_count": self.media_count,
            "char_count": self.char_count,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Toot":
        return cls(
            toot_id=str(d["toot_id"]),
            author=d["author"],
            created_at=parse_ts(d["created_at"]),
            in_reply_to_account=d.get("in_reply_to_account"),
            mentions=tuple(d.get("mentions", ())),
            boost_of_author=d.get("boost_of_author"),
            hashtags=tuple(d.get("hashtags", ())),
            urls=tuple(d.get("urls", ())),
            media_count=int(d.get("media_count", 0)),
            char_count=int(d.get("char_count", 0)),
        )


@dataclass(frozen=True)
class TootClass:
    directed: bool
    has_reply: bool
    has_mention: bool
    has_boost: bool
    has_hashtag: bool
    has_url: bool
    has_media: bool
    is_plaintext: bool


@dataclass(frozen=True)
class Interaction:
    ego: str
    alter: str
    timestamp: datetime
    kind: str
    toot_id: str = ""

    def to_dict(self) -> dict:
        return {
            "ego": self.ego,
            "alter": self.alter,
            "timestamp": format_ts(self.timestamp),
            "kind": self.kind,
            "toot_id": self.toot_id,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Interaction":
        return cls(d["ego"], d["alter"], parse_ts(d["timestamp"]), d["kind"], str(d.get("toot_id", "")))


def classify_toot(toot: Toot) -> TootClass:
    """Feature flags of one toot.

    References to the author's own account (thread continuations, self
    boosts, self mentions) do not make a toot directed.
    """
    me = toot.author
    has_reply = toot.in_reply_to_account not in (None, me)
    has_mention = any(m != me for m in toot.mentions)
    has_boost = toot.boost_of_author not in (None, me)
    has_hashtag = len(toot.hashtags) > 0
    has_url = len(toot.urls) > 0
    has_media = toot.media_count > 0
    directed = has_reply or has_mention or has_boost
    return TootClass(
        directed=directed,
        has_reply=has_reply,
        has_mention=has_mention,
        has_boost=has_boost,
        has_hashtag=has_hashtag,
        has_url=has_url,
        has_media=has_media,
        is_plaintext=not (directed or has_hashtag or has_url or has_media),
    )


def extract_interactions(toot: Toot) -> list[Interaction]:
    """One interaction per distinct alter; kind precedence reply > boost > mention.

    Self-references are dropped. Output order follows first appearance
    (reply target, boost origin, then mentions).
    """
    kinds: dict[str, str] = {}
    if toot.in_reply_to_account is not None:
        kinds[toot.in_reply_to_account] = REPLY
    if toot.boost_of_author is not None:
        kinds.setdefault(toot.boost_of_author, BOOST)
    for m in toot.mentions:
        kinds.setdefault(m, MENTION)
    return [
        Interaction(toot.author, alter, toot.created_at, kind, toot.toot_id)
        for alter, kind in kinds.items()
        if alter != toot.author
    ]


def dataset_summary(toots: Iterable[Toot]) -> dict[str, int]:
    """Per-feature toot counts with the column layout of the toot summary table."""
    counts = dict.fromkeys(TABLE_II_COLUMNS, 0)
    for toot in toots:
        c = classify_toot(toot)
        counts["toots"] += 1
        counts["directed"] += c.directed
        counts["undirected"] += not c.directed
        counts["plaintext"] += c.is_plaintext
        counts["replies"] += c.has_reply
        counts["with_hashtags"] += c.has_hashtag
        counts["with_mentions"] += c.has_mention
        counts["with_urls"] += c.has_url
        counts["boosts"] += c.has_boost
        counts["with_multimedia"] += c.has_media
    return counts


# --- Mastodon status JSON -------------------------------------------------

_HREF_RE = re.compile(r"<a\s[^>]*?href=\"([^\"]+)\"[^>]*>", re.IGNORECASE)
_CLASS_RE = re.compile(r"class=\"([^\"]*)\"", re.IGNORECASE)
_TAG_RE = re.compile(r"<[^>]+>")


def normalize_acct(acct: str, host: str) -> str:
    """Mastodon reports local accounts without a domain; make every ref ``user@host``."""
    acct = acct.lstrip("@")
    return acct if "@" in acct else "%s@%s" % (acct, host)


def _plain_text(content: str) -> str:
    text = _TAG_RE.sub("", content.replace("<br>", "\n").replace("<br/>", "\n").replace("<br />", "\n"))
    return html.unescape(text)


def _content_urls(content: str) -> list[str]:
    urls = []
    for m in _HREF_RE.finditer(content):
        cls = _CLASS_RE.search(m.group(0))
        classes = cls.group(1).split() if cls else []
        if "mention" in classes or "hashtag" in classes:
            continue
        urls.append(m.group(1))
    return urls


def parse_status(status: Mapping, host: str) -> Toot:
    """Build a :class:`Toot` from a Mastodon API status served by ``host``."""
    account = status["account"]
    author = normalize_acct(account["acct"], host)
    mentions = [normalize_acct(m["acct"], host) for m in status.get("mentions") or ()]
    reblog = status.get("reblog")
    if reblog:
        # a boost carries no text of its own; the boosted content's mentions
        # belong to the original author
        return Toot(
            toot_id=str(status["id"]),
            author=author,
            created_at=parse_ts(status["created_at"]),
            boost_of_author=normalize_acct(reblog["account"]["acct"], host),
        )

    reply_to = None
    reply_id = status.get("in_reply_to_account_id")
    if reply_id is not None:
        reply_id = str(reply_id)
        if reply_id == str(account["id"]):
            reply_to = author
        else:
            by_id = {str(m["id"]): normalize_acct(m["acct"], host) for m in status.get("mentions") or ()}
            # ids are instance-local; an unmentioned target keeps a placeholder ref
            reply_to = by_id.get(reply_id, "#%s@%s" % (reply_id, host))

    content = status.get("content") or ""
    urls = _content_urls(content)
    card = status.get("card")
    if card and card.get("url") and card["url"] not in urls:
        urls.append(card["url"])
    return Toot(
        toot_id=str(status["id"]),
        author=author,
        created_at=parse_ts(status["created_at"]),
        in_reply_to_account=reply_to,
        mentions=tuple(mentions),
        hashtags=tuple(t["name"].lower() for t in status.get("tags") or ()),
        urls=tuple(urls),
        media_count=len(status.get("media_attachments") or ()),
        char_count=len(_plain_text(content)),
    )
