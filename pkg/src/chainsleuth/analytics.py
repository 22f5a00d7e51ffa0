"""Lifetime and creator statistics over the token and pool datasets.

A subject's lifetime runs from its creation block to the last block in which
it emitted any event. Durations prefer real timestamps; without them they are
estimated from the chain's mean block interval. The "one-day" share counts
every subject that died within 24 hours, one-block subjects included, which
is how the headline short-lifetime figures are quoted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from math import ceil
from pathlib import Path
from typing import Iterable, Sequence

from .core import Address, BlockRef, ChainDataError
from .fixtures import ChainProfile
from .pools import PoolTimeline
from .tokens import TokenRecord

ONE_DAY_SECONDS = 86_400.0

CLASS_ONE_BLOCK = "one-block"
CLASS_ONE_DAY = "one-day"
CLASS_LONGER = "longer"


@dataclass(frozen=True, slots=True)
class LifetimeRecord:
    subject: Address
    kind: str  # "token" or "pool"
    created_block: BlockRef
    last_event_block: BlockRef
    lifetime_blocks: int
    lifetime_seconds: float
    lifetime_class: str


@dataclass(frozen=True)
class CreatorProfile:
    creator: Address
    tokens_created: int
    via_creation_tx: int
    via_internal: int
    one_day_tokens: int
    is_spammer: bool = False


def _lifetime(created: BlockRef, last: BlockRef, profile: ChainProfile) -> tuple[int, float]:
    blocks = last.number - created.number
    if blocks < 0:
        raise ChainDataError(
            f"last event block {last.number} precedes creation {created.number}"
        )
    if created.timestamp is not None and last.timestamp is not None:
        seconds = float(last.timestamp - created.timestamp)
        if seconds < 0:
            raise ChainDataError("timestamps run backwards across the lifetime")
    else:
        seconds = profile.seconds_for_blocks(blocks)
    return blocks, seconds


def _classify(blocks: int, seconds: float) -> str:
    if blocks == 0:
        return CLASS_ONE_BLOCK
    if seconds < ONE_DAY_SECONDS:
        return CLASS_ONE_DAY
    return CLASS_LONGER


def compute_lifetimes(
    tokens: Iterable[TokenRecord],
    pools: Iterable[PoolTimeline],
    profile: ChainProfile,
) -> list[LifetimeRecord]:
    """One record per token and per pool, classified by how fast it died."""
    out: list[LifetimeRecord] = []
    for tok in tokens:
        blocks, seconds = _lifetime(tok.first_block, tok.last_event_block, profile)
        out.append(LifetimeRecord(
            subject=tok.address, kind="token",
            created_block=tok.first_block, last_event_block=tok.last_event_block,
            lifetime_blocks=blocks, lifetime_seconds=seconds,
            lifetime_class=_classify(blocks, seconds),
        ))
    for timeline in pools:
        rec = timeline.record
        blocks, seconds = _lifetime(rec.created_block, rec.last_event_block, profile)
        out.append(LifetimeRecord(
            subject=rec.pool, kind="pool",
            created_block=rec.created_block, last_event_block=rec.last_event_block,
            lifetime_blocks=blocks, lifetime_seconds=seconds,
            lifetime_class=_classify(blocks, seconds),
        ))
    return out


def lifetime_class_shares(records: Sequence[LifetimeRecord]) -> dict[str, float]:
    """Fractions of one-block, one-day (inclusive of one-block), and longer."""
    n = len(records)
    if n == 0:
        return {CLASS_ONE_BLOCK: 0.0, CLASS_ONE_DAY: 0.0, CLASS_LONGER: 0.0}
    one_block = sum(1 for r in records if r.lifetime_class == CLASS_ONE_BLOCK)
    within_day = sum(1 for r in records if r.lifetime_seconds < ONE_DAY_SECONDS)
    return {
        CLASS_ONE_BLOCK: one_block / n,
        CLASS_ONE_DAY: within_day / n,
        CLASS_LONGER: (n - within_day) / n,
    }


def default_grid(profile: ChainProfile) -> list[float]:
    """1 block, 10 min, 1 h, 4 h, 24 h, 7 d, 30 d, 365 d, in seconds."""
    day = 86_400.0
    return [profile.mean_block_interval, 600.0, 3_600.0, 4 * 3_600.0,
            day, 7 * day, 30 * day, 365 * day]


def lifetime_cdf(
    records: Sequence[LifetimeRecord],
    grid: Sequence[float],
) -> list[tuple[float, float]]:
    """Fraction of subjects dead by each grid duration (lifetime <= d)."""
    for a, b in zip(grid, grid[1:]):
        if b <= a:
            raise ValueError(f"grid must be strictly increasing, {b} after {a}")
    if not records:
        return []
    lifetimes = sorted(r.lifetime_seconds for r in records)
    n = len(lifetimes)
    out: list[tuple[float, float]] = []
    i = 0
    for d in grid:
        while i < n and lifetimes[i] <= d:
            i += 1
        out.append((d, i / n))
    return out


def creator_profiles(
    tokens: Iterable[TokenRecord],
    profile: ChainProfile,
) -> list[CreatorProfile]:
    """Per-deployer creation counts, ordered by descending volume then address."""
    grouped: dict[Address, list[int]] = {}
    for tok in tokens:
        row = grouped.setdefault(tok.creation.deployer, [0, 0, 0, 0])
        row[0] += 1
        if tok.creation.via_internal:
            row[2] += 1
        else:
            row[1] += 1
        _, seconds = _lifetime(tok.first_block, tok.last_event_block, profile)
        if seconds < ONE_DAY_SECONDS:
            row[3] += 1
    out = [
        CreatorProfile(creator=addr, tokens_created=row[0],
                       via_creation_tx=row[1], via_internal=row[2],
                       one_day_tokens=row[3])
        for addr, row in grouped.items()
    ]
    out.sort(key=lambda p: (-p.tokens_created, p.creator))
    return out


def flag_spammers(
    profiles: Sequence[CreatorProfile],
    percentile: float = 0.01,
) -> tuple[list[CreatorProfile], int]:
    """Mark the top ``percentile`` of creators by volume as token spammers.

    Ties at the boundary are all included, so slightly more than the exact
    percentile can be flagged. Returns the profiles (same canonical order)
    and the minimal tokens_created among the flagged.
    """
    if not profiles:
        raise ValueError("cannot flag spammers over an empty creator set")
    if not 0 < percentile <= 1:
        raise ValueError(f"percentile must be in (0, 1], got {percentile}")
    ranked = sorted(profiles, key=lambda p: (-p.tokens_created, p.creator))
    k = ceil(percentile * len(ranked))
    threshold = ranked[k - 1].tokens_created
    flagged = [replace(p, is_spammer=p.tokens_created >= threshold) for p in profiles]
    return flagged, threshold


def spammer_summary(profiles: Sequence[CreatorProfile]) -> dict:
    """Share of all tokens held by flagged creators, recomputable from profiles."""
    total_tokens = sum(p.tokens_created for p in profiles)
    spammers = [p for p in profiles if p.is_spammer]
    spammer_tokens = sum(p.tokens_created for p in spammers)
    return {
        "creators": len(profiles),
        "spammers": len(spammers),
        "token_total": total_tokens,
        "spammer_tokens": spammer_tokens,
        "spammer_token_share": spammer_tokens / total_tokens if total_tokens else 0.0,
    }


def creation_share_curve(
    profiles: Sequence[CreatorProfile],
) -> list[tuple[float, float]]:
    """Cumulative token share of the bottom fraction of creators.

    Creators are ranked ascending by volume; each point is (fraction of
    creators considered, fraction of tokens they created).
    """
    ranked = sorted(profiles, key=lambda p: (p.tokens_created, p.creator))
    total = sum(p.tokens_created for p in ranked)
    if total == 0:
        return []
    points = []
    cum = 0
    for i, p in enumerate(ranked, start=1):
        cum += p.tokens_created
        points.append((i / len(ranked), cum / total))
    return points


LIFETIME_CSV_COLUMNS = ["subject", "kind", "created_block", "last_event_block",
                        "lifetime_blocks", "lifetime_seconds", "class"]
CREATOR_CSV_COLUMNS = ["creator", "tokens_created", "via_creation_tx",
                       "via_internal", "one_day_tokens", "is_spammer"]


def write_lifetime_csv(path: str | Path, records: Iterable[LifetimeRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LIFETIME_CSV_COLUMNS)
        for r in records:
            w.writerow([r.subject.hex, r.kind, r.created_block.number,
                        r.last_event_block.number, r.lifetime_blocks,
                        repr(r.lifetime_seconds), r.lifetime_class])


def write_cdf_csv(path: str | Path, table: Iterable[tuple[float, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["duration_seconds", "fraction_dead"])
        for duration, fraction in table:
            w.writerow([repr(duration), repr(fraction)])


def write_creator_csv(path: str | Path, profiles: Iterable[CreatorProfile]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CREATOR_CSV_COLUMNS)
        for p in profiles:
            w.writerow([p.creator.hex, p.tokens_created, p.via_creation_tx,
                        p.via_internal, p.one_day_tokens, int(p.is_spammer)])
