"""Exit-scam detection and gain accounting over pool timelines.

The pattern: a pool with exactly one Mint and one Burn, the Burn after the
Mint and destroying at least a threshold fraction (default 99%) of the
minted LP tokens. The minting transaction's sender is the operator. Gains
are measured in the pool's quote token:

    base_gain = delta_B - fees_base
    net_gain  = base_gain - T_in + T_out - fees_swap

where delta_B is quote withdrawn at the Burn minus quote deposited at the
Mint, T_in/T_out are the operator's own-swap quote flows, and the fee terms
are gas, in native-coin units.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .core import Address, ChainDataError, ContractCreation
from .pools import BurnEvent, MintEvent, PoolRecord, PoolTimeline, SwapEvent

DEFAULT_LP_BURN_THRESHOLD = Fraction(99, 100)

MANIPULATION_NONE = "none"
MANIPULATION_PUMP = "pump"
MANIPULATION_HEDGE = "hedge"
MANIPULATION_WASH = "wash_trading"

QUOTE_OK = "ok"
QUOTE_NEITHER = "neither_valuable"
QUOTE_BOTH = "both_valuable"


def as_fraction(threshold) -> Fraction:
    """Exact threshold: floats go through their decimal rendering."""
    if isinstance(threshold, Fraction):
        frac = threshold
    elif isinstance(threshold, float):
        frac = Fraction(str(threshold))
    else:
        frac = Fraction(threshold)
    if not 0 < frac <= 1:
        raise ValueError(f"LP burn threshold must be in (0, 1], got {threshold}")
    return frac


@dataclass(frozen=True)
class ExitScamMatch:
    """Outcome of the structural check, with the events that matched."""

    is_exit_scam: bool
    reason: str
    operator: Address | None = None
    mint: MintEvent | None = None
    burn: BurnEvent | None = None
    operator_mismatch: bool = False


def detect_exit_scam(
    timeline: PoolTimeline,
    lp_burn_threshold=DEFAULT_LP_BURN_THRESHOLD,
) -> ExitScamMatch:
    """Exactly one Mint, exactly one Burn after it, burning >= threshold LP.

    The operator is the Mint's transaction sender; a differing Burn sender is
    flagged but does not defeat detection.
    """
    threshold = as_fraction(lp_burn_threshold)
    mints = timeline.mints()
    burns = timeline.burns()
    if len(mints) != 1 or len(burns) != 1:
        return ExitScamMatch(
            is_exit_scam=False,
            reason=f"{len(mints)} mint(s), {len(burns)} burn(s)",
        )
    mint, burn = mints[0], burns[0]
    if burn.order_key <= mint.order_key:
        return ExitScamMatch(is_exit_scam=False, reason="burn precedes mint",
                             operator=mint.tx_sender, mint=mint, burn=burn)
    # Exact comparison: burned / minted >= threshold.
    if burn.lp_amount * threshold.denominator < threshold.numerator * mint.lp_amount:
        return ExitScamMatch(
            is_exit_scam=False,
            reason=f"burned {burn.lp_amount} of {mint.lp_amount} LP, below threshold",
            operator=mint.tx_sender, mint=mint, burn=burn,
        )
    return ExitScamMatch(
        is_exit_scam=True, reason="matched",
        operator=mint.tx_sender, mint=mint, burn=burn,
        operator_mismatch=burn.tx_sender != mint.tx_sender,
    )


@dataclass(frozen=True)
class QuoteAssignment:
    status: str
    scam_token: Address | None = None
    quote_token: Address | None = None
    quote_side: int | None = None


def identify_quote_token(record: PoolRecord, valuable: set[Address]) -> QuoteAssignment:
    """The pair member in the valuable set is the quote token; the other is
    the scam-side token. Pools with zero or two valuable members cannot be
    priced."""
    in0 = record.token0 in valuable
    in1 = record.token1 in valuable
    if in0 and in1:
        return QuoteAssignment(status=QUOTE_BOTH)
    if not in0 and not in1:
        return QuoteAssignment(status=QUOTE_NEITHER)
    if in0:
        return QuoteAssignment(status=QUOTE_OK, scam_token=record.token1,
                               quote_token=record.token0, quote_side=0)
    return QuoteAssignment(status=QUOTE_OK, scam_token=record.token0,
                           quote_token=record.token1, quote_side=1)


@dataclass(frozen=True)
class GainBreakdown:
    delta_b: int
    t_in: int
    t_out: int
    fees_base: int
    fees_swap: int
    base_gain: int
    net_gain: int
    fees_partial: bool   # token-creation transaction was unavailable
    fees_aggregated: bool  # some base actions shared a transaction

    @property
    def successful(self) -> bool:
        return self.net_gain > 0


def operator_swaps(timeline: PoolTimeline, operator: Address) -> list[SwapEvent]:
    return [s for s in timeline.swaps() if s.tx_sender == operator]


def compute_gains(
    timeline: PoolTimeline,
    operator: Address,
    quote_side: int,
    token_creation: ContractCreation | None = None,
) -> GainBreakdown:
    """Gain fields for a detected exit scam; call after detect_exit_scam."""
    mints = timeline.mints()
    burns = timeline.burns()
    if len(mints) != 1 or len(burns) != 1:
        raise ChainDataError(
            f"pool {timeline.record.pool} does not have the 1-mint/1-burn shape"
        )
    mint, burn = mints[0], burns[0]
    quote_of_mint = mint.amount0 if quote_side == 0 else mint.amount1
    quote_of_burn = burn.amount0 if quote_side == 0 else burn.amount1
    delta_b = quote_of_burn - quote_of_mint

    base_items: list[tuple[bytes | None, int]] = [
        (timeline.record.tx_hash, timeline.record.creation_fee),
        (mint.tx_hash, mint.fee),
        (burn.tx_hash, burn.fee),
    ]
    if token_creation is not None:
        base_items.insert(0, (token_creation.tx_hash, token_creation.fee))
    fees_base, aggregated = _sum_distinct_tx_fees(base_items)

    own = operator_swaps(timeline, operator)
    t_in = sum(s.amount_in(quote_side) for s in own)
    t_out = sum(s.amount_out(quote_side) for s in own)
    fees_swap, _ = _sum_distinct_tx_fees([(s.tx_hash, s.fee) for s in own])

    base_gain = delta_b - fees_base
    net_gain = base_gain - t_in + t_out - fees_swap
    return GainBreakdown(
        delta_b=delta_b, t_in=t_in, t_out=t_out,
        fees_base=fees_base, fees_swap=fees_swap,
        base_gain=base_gain, net_gain=net_gain,
        fees_partial=token_creation is None,
        fees_aggregated=aggregated,
    )


def _sum_distinct_tx_fees(items: Sequence[tuple[bytes | None, int]]) -> tuple[int, bool]:
    """Sum fees counting each transaction once; unknown hashes count singly."""
    seen: set[bytes] = set()
    total = 0
    aggregated = False
    for tx_hash, fee in items:
        if tx_hash is None:
            total += fee
            continue
        if tx_hash in seen:
            aggregated = True
            continue
        seen.add(tx_hash)
        total += fee
    return total, aggregated


def classify_manipulation(
    timeline: PoolTimeline,
    operator: Address,
    quote_side: int,
) -> str:
    """none / pump (operator only buys) / hedge (only sells) / wash_trading."""
    bought = sold = False
    for swap in operator_swaps(timeline, operator):
        if swap.amount_in(quote_side) > 0:
            bought = True  # quote in, scam token out
        else:
            sold = True
    if bought and sold:
        return MANIPULATION_WASH
    if bought:
        return MANIPULATION_PUMP
    if sold:
        return MANIPULATION_HEDGE
    return MANIPULATION_NONE


@dataclass(frozen=True)
class RugPullReport:
    pool: Address
    scam_token: Address
    quote_token: Address
    operator: Address
    delta_b: int
    t_in: int
    t_out: int
    fees_base: int
    fees_swap: int
    base_gain: int
    net_gain: int
    manipulation: str
    successful: bool
    buy_count: int
    sell_count: int
    buyer_addresses: tuple[Address, ...]
    operator_mismatch: bool = False
    fees_partial: bool = False
    fees_aggregated: bool = False


def build_report(
    timeline: PoolTimeline,
    match: ExitScamMatch,
    quote: QuoteAssignment,
    token_creation: ContractCreation | None = None,
) -> RugPullReport:
    """Assemble the full verdict for a detected, priced exit scam."""
    if not match.is_exit_scam or match.operator is None:
        raise ChainDataError("build_report requires a positive detection")
    if quote.status != QUOTE_OK or quote.quote_side is None:
        raise ChainDataError("build_report requires a priced pool")
    gains = compute_gains(timeline, match.operator, quote.quote_side, token_creation)
    manipulation = classify_manipulation(timeline, match.operator, quote.quote_side)

    buy_count = sell_count = 0
    buyers: set[Address] = set()
    for swap in timeline.swaps():
        if swap.tx_sender == match.operator:
            continue
        if swap.amount_in(quote.quote_side) > 0:
            buy_count += 1
            buyers.add(swap.tx_sender)
        else:
            sell_count += 1

    return RugPullReport(
        pool=timeline.record.pool,
        scam_token=quote.scam_token,
        quote_token=quote.quote_token,
        operator=match.operator,
        delta_b=gains.delta_b, t_in=gains.t_in, t_out=gains.t_out,
        fees_base=gains.fees_base, fees_swap=gains.fees_swap,
        base_gain=gains.base_gain, net_gain=gains.net_gain,
        manipulation=manipulation,
        successful=gains.net_gain > 0,
        buy_count=buy_count, sell_count=sell_count,
        buyer_addresses=tuple(sorted(buyers)),
        operator_mismatch=match.operator_mismatch,
        fees_partial=gains.fees_partial,
        fees_aggregated=gains.fees_aggregated,
    )


SCOPE_ONE_DAY = "one-day"
SCOPE_ALL = "all"


@dataclass
class RugPullScan:
    reports: list[RugPullReport]
    unpriceable: list[tuple[Address, str]]  # (pool, quote status)
    out_of_scope: int
    pools_considered: int


def scan_rugpulls(
    timelines: Mapping[Address, PoolTimeline],
    valuable: set[Address],
    *,
    lp_burn_threshold=DEFAULT_LP_BURN_THRESHOLD,
    scope: str = SCOPE_ONE_DAY,
    one_day_tokens: set[Address] | None = None,
    token_creations: Mapping[Address, ContractCreation] | None = None,
) -> RugPullScan:
    """Run detection over every timeline, applying the scope filter.

    Under the default one-day scope, only pools whose scam-side token is in
    ``one_day_tokens`` are considered. Detected pools that cannot be priced
    are reported separately and excluded from gain accounting.
    """
    if scope not in (SCOPE_ONE_DAY, SCOPE_ALL):
        raise ValueError(f"scope must be {SCOPE_ONE_DAY!r} or {SCOPE_ALL!r}")
    if scope == SCOPE_ONE_DAY and one_day_tokens is None:
        raise ValueError("one-day scope needs the one-day token set")
    creations = token_creations or {}
    reports: list[RugPullReport] = []
    unpriceable: list[tuple[Address, str]] = []
    out_of_scope = 0
    considered = 0

    for pool_addr in sorted(timelines):
        timeline = timelines[pool_addr]
        quote = identify_quote_token(timeline.record, valuable)
        if scope == SCOPE_ONE_DAY:
            if quote.status != QUOTE_OK or quote.scam_token not in one_day_tokens:
                out_of_scope += 1
                continue
        considered += 1
        match = detect_exit_scam(timeline, lp_burn_threshold)
        if not match.is_exit_scam:
            continue
        if quote.status != QUOTE_OK:
            unpriceable.append((pool_addr, quote.status))
            continue
        creation = creations.get(quote.scam_token)
        reports.append(build_report(timeline, match, quote, creation))
    return RugPullScan(reports=reports, unpriceable=unpriceable,
                       out_of_scope=out_of_scope, pools_considered=considered)


@dataclass(frozen=True)
class VictimStats:
    unique_victims: int
    buy_count: int
    sell_count: int
    buy_fraction: float
    mean_swap_quote: float


def victim_stats(
    reports: Sequence[RugPullReport],
    timelines: Mapping[Address, PoolTimeline],
) -> VictimStats:
    """Aggregate victim activity over the reported pools.

    Victims are non-operator swappers; buys are swaps whose output is the
    scam token. Mean swap size is in quote base units.
    """
    victims: set[Address] = set()
    buys = sells = 0
    quote_total = 0
    swap_total = 0
    for report in reports:
        timeline = timelines[report.pool]
        side = 0 if timeline.record.token0 == report.quote_token else 1
        for swap in timeline.swaps():
            if swap.tx_sender == report.operator:
                continue
            victims.add(swap.tx_sender)
            swap_total += 1
            if swap.amount_in(side) > 0:
                buys += 1
                quote_total += swap.amount_in(side)
            else:
                sells += 1
                quote_total += swap.amount_out(side)
    return VictimStats(
        unique_victims=len(victims),
        buy_count=buys,
        sell_count=sells,
        buy_fraction=buys / (buys + sells) if buys + sells else 0.0,
        mean_swap_quote=quote_total / swap_total if swap_total else 0.0,
    )


RUGPULL_CSV_COLUMNS = [
    "pool", "scam_token", "quote_token", "operator", "delta_b", "t_in", "t_out",
    "fees_base", "fees_swap", "base_gain", "net_gain", "manipulation",
    "successful", "buy_count", "sell_count", "operator_mismatch",
    "fees_partial", "fees_aggregated",
]


def write_rugpull_csv(path: str | Path, reports: Iterable[RugPullReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUGPULL_CSV_COLUMNS)
        for r in reports:
            w.writerow([
                r.pool.hex, r.scam_token.hex, r.quote_token.hex, r.operator.hex,
                r.delta_b, r.t_in, r.t_out, r.fees_base, r.fees_swap,
                r.base_gain, r.net_gain, r.manipulation, int(r.successful),
                r.buy_count, r.sell_count, int(r.operator_mismatch),
                int(r.fees_partial), int(r.fees_aggregated),
            ])


def write_rugpull_json(path: str | Path, reports: Iterable[RugPullReport]) -> None:
    rows = []
    for r in reports:
        rows.append({
            "pool": r.pool.hex, "scam_token": r.scam_token.hex,
            "quote_token": r.quote_token.hex, "operator": r.operator.hex,
            "delta_b": str(r.delta_b), "t_in": str(r.t_in), "t_out": str(r.t_out),
            "fees_base": str(r.fees_base), "fees_swap": str(r.fees_swap),
            "base_gain": str(r.base_gain), "net_gain": str(r.net_gain),
            "manipulation": r.manipulation, "successful": r.successful,
            "buy_count": r.buy_count, "sell_count": r.sell_count,
            "buyer_addresses": [a.hex for a in r.buyer_addresses],
            "operator_mismatch": r.operator_mismatch,
            "fees_partial": r.fees_partial,
            "fees_aggregated": r.fees_aggregated,
        })
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(rows, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
