"""UTC timestamp helpers shared across the package."""

from __future__ import annotations

from datetime import date, datetime, time, timedelta, timezone

DAY_SECONDS = 86400.0
YEAR_DAYS = 365.25
SIX_MONTHS_DAYS = YEAR_DAYS / 2  # 182.625


def to_utc(dt: datetime) -> datetime:
    """Attach UTC to naive datetimes, convert aware ones."""
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def parse_ts(value: str | datetime) -> datetime:
    if isinstance(value, datetime):
        return to_utc(value)
    s = value.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    return to_utc(datetime.fromisoformat(s))


def format_ts(dt: datetime) -> str:
    return to_utc(dt).isoformat().replace("+00:00", "Z")


def parse_date(value: str | date) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    return date.fromisoformat(value.strip())


def start_of_day(d: date) -> datetime:
    return datetime.combine(d, time(0), tzinfo=timezone.utc)


def end_of_day(d: date) -> datetime:
    """The instant at which calendar day ``d`` (UTC) ends, i.e. next midnight."""
    return start_of_day(d) + timedelta(days=1)


def days_between(a: datetime, b: datetime) -> float:
    return (b - a).total_seconds() / DAY_SECONDS


def utc_day(dt: datetime) -> date:
    return to_utc(dt).date()
