"""UTC rendering and date-window math for `date` predicates.

Edge timestamps are integer microseconds; predicates compare against the
ISO-8601 rendering in UTC. A date value like "2019-09-03" (or a coarser
"2019-09" / "2019") also defines a [start, end) window used to seed
traversal reference times.
"""

from __future__ import annotations

from datetime import datetime, timezone

from graalf.model import Timestamp


def ts_to_iso(us: Timestamp) -> str:
    secs, rem = divmod(us, 1_000_000)
    dt = datetime.fromtimestamp(secs, tz=timezone.utc)
    return f"{dt.strftime('%Y-%m-%dT%H:%M:%S')}.{rem:06d}"


def ts_matches(op: str, value: str, us: Timestamp) -> bool:
    rendered = ts_to_iso(us)
    if op == "is":
        return rendered[:10] == value
    return rendered.startswith(value)


def date_window(value: str) -> tuple[Timestamp, Timestamp] | None:
    """[start, end) microsecond window for a date prefix, if parseable."""
    value = value.strip()
    for fmt, unit in (("%Y-%m-%d", "day"), ("%Y-%m", "month"), ("%Y", "year")):
        try:
            dt = datetime.strptime(value[: {"day": 10, "month": 7, "year": 4}[unit]], fmt)
        except ValueError:
            continue
        start = dt.replace(tzinfo=timezone.utc)
        if unit == "day":
            end = _add_days(start, 1)
        elif unit == "month":
            end = (start.replace(year=start.year + 1, month=1)
                   if start.month == 12 else start.replace(month=start.month + 1))
        else:
            end = start.replace(year=start.year + 1)
        return int(start.timestamp() * 1_000_000), int(end.timestamp() * 1_000_000)
    return None


def _add_days(dt: datetime, days: int) -> datetime:
    from datetime import timedelta

    return dt + timedelta(days=days)
