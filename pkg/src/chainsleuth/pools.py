"""Decoding of pool lifecycle events and per-pool timeline assembly.

Events follow the Uniswap-V2 core layouts. The Mint/Burn payloads carry only
the two reserve amounts; the LP-token quantity lives in the pool-emitted
Transfer of the same transaction (mint: from the zero address, burn: to the
zero address), so those two decoders take the companion Transfer log.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Union

from . import abi
from .core import (
    Address,
    BURN_TOPIC,
    BlockRef,
    ChainDataError,
    LogRecord,
    MINT_TOPIC,
    PAIR_CREATED_TOPIC,
    SWAP_TOPIC,
    TRANSFER_TOPIC,
    ZERO_ADDRESS,
)


class DecodeError(ChainDataError):
    """An event log does not match the expected layout."""


@dataclass(frozen=True, slots=True)
class PoolRecord:
    """A liquidity pool from its PairCreated event."""

    pool: Address
    factory: Address
    creator: Address
    token0: Address
    token1: Address
    created_block: BlockRef
    last_event_block: BlockRef
    gas_used: int
    gas_price: int
    tx_hash: bytes | None = None

    def __post_init__(self) -> None:
        if self.token0 == self.token1:
            raise DecodeError(f"pool {self.pool} pairs a token with itself")
        if self.last_event_block.number < self.created_block.number:
            raise DecodeError(f"pool {self.pool} last event precedes creation")

    @property
    def creation_fee(self) -> int:
        return self.gas_used * self.gas_price


@dataclass(frozen=True, slots=True)
class MintEvent:
    pool: Address
    block: BlockRef
    log_index: int
    tx_hash: bytes
    tx_sender: Address
    lp_amount: int
    amount0: int
    amount1: int
    gas_used: int
    gas_price: int

    def __post_init__(self) -> None:
        if self.lp_amount <= 0:
            raise DecodeError(f"mint in pool {self.pool} has no LP amount")

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.block.number, self.log_index)

    @property
    def fee(self) -> int:
        return self.gas_used * self.gas_price


@dataclass(frozen=True, slots=True)
class BurnEvent:
    pool: Address
    block: BlockRef
    log_index: int
    tx_hash: bytes
    tx_sender: Address
    lp_amount: int
    amount0: int
    amount1: int
    gas_used: int
    gas_price: int

    def __post_init__(self) -> None:
        if self.lp_amount <= 0:
            raise DecodeError(f"burn in pool {self.pool} has no LP amount")

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.block.number, self.log_index)

    @property
    def fee(self) -> int:
        return self.gas_used * self.gas_price


@dataclass(frozen=True, slots=True)
class SwapEvent:
    pool: Address
    block: BlockRef
    log_index: int
    tx_hash: bytes
    tx_sender: Address
    amount0_in: int
    amount1_in: int
    amount0_out: int
    amount1_out: int
    gas_used: int
    gas_price: int

    def __post_init__(self) -> None:
        forward = (self.amount0_in > 0 and self.amount1_out > 0
                   and self.amount1_in == 0 and self.amount0_out == 0)
        backward = (self.amount1_in > 0 and self.amount0_out > 0
                    and self.amount0_in == 0 and self.amount1_out == 0)
        if not (forward or backward):
            raise DecodeError(
                f"swap in pool {self.pool} is not a two-token exchange: "
                f"in=({self.amount0_in}, {self.amount1_in}) "
                f"out=({self.amount0_out}, {self.amount1_out})"
            )

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.block.number, self.log_index)

    @property
    def fee(self) -> int:
        return self.gas_used * self.gas_price

    def amount_in(self, side: int) -> int:
        return self.amount0_in if side == 0 else self.amount1_in

    def amount_out(self, side: int) -> int:
        return self.amount0_out if side == 0 else self.amount1_out


PoolEvent = Union[MintEvent, BurnEvent, SwapEvent]


@dataclass
class PoolTimeline:
    """A pool's ordered Mint/Burn/Swap history."""

    record: PoolRecord
    events: list[PoolEvent] = field(default_factory=list)

    def mints(self) -> list[MintEvent]:
        return [e for e in self.events if isinstance(e, MintEvent)]

    def burns(self) -> list[BurnEvent]:
        return [e for e in self.events if isinstance(e, BurnEvent)]

    def swaps(self) -> list[SwapEvent]:
        return [e for e in self.events if isinstance(e, SwapEvent)]


def _expect_topic(log: LogRecord, topic, what: str) -> None:
    if log.topic0 != topic:
        raise DecodeError(
            f"not a {what} log: topic0 is {log.topic0.hex}, expected {topic.hex}"
        )


def decode_pair_created(log: LogRecord) -> PoolRecord:
    """PairCreated(token0 indexed, token1 indexed, pair, poolCount)."""
    _expect_topic(log, PAIR_CREATED_TOPIC, "PairCreated")
    if len(log.indexed_topics) != 2:
        raise DecodeError("PairCreated needs 2 indexed topics (token0, token1)")
    token0 = abi.topic_to_address(log.indexed_topics[0])
    token1 = abi.topic_to_address(log.indexed_topics[1])
    pool = abi.decode_address(log.data, 0)
    return PoolRecord(
        pool=pool, factory=log.emitter, creator=log.tx_sender,
        token0=token0, token1=token1,
        created_block=log.block, last_event_block=log.block,
        gas_used=log.gas_used, gas_price=log.gas_price, tx_hash=log.tx_hash,
    )


def lp_transfer_amount(log: LogRecord, direction: str) -> int:
    """LP quantity moved by a pool-emitted Transfer.

    direction "mint": from the zero address to a holder; "burn": to the zero
    address.
    """
    _expect_topic(log, TRANSFER_TOPIC, "Transfer")
    if len(log.indexed_topics) != 2:
        raise DecodeError("Transfer needs 2 indexed topics (from, to)")
    src = abi.topic_to_address(log.indexed_topics[0])
    dst = abi.topic_to_address(log.indexed_topics[1])
    value = abi.decode_u256(log.data, 0)
    if direction == "mint":
        if src != ZERO_ADDRESS or dst == ZERO_ADDRESS:
            raise DecodeError("not an LP mint transfer (zero address -> holder)")
    elif direction == "burn":
        if dst != ZERO_ADDRESS:
            raise DecodeError("not an LP burn transfer (holder -> zero address)")
    else:
        raise ValueError(f"direction must be 'mint' or 'burn', got {direction!r}")
    return value


def decode_mint(log: LogRecord, lp_transfer: LogRecord) -> MintEvent:
    """Mint(sender indexed, amount0, amount1) plus its LP Transfer."""
    _expect_topic(log, MINT_TOPIC, "Mint")
    _check_companion(log, lp_transfer)
    return MintEvent(
        pool=log.emitter, block=log.block, log_index=log.log_index,
        tx_hash=log.tx_hash, tx_sender=log.tx_sender,
        lp_amount=lp_transfer_amount(lp_transfer, "mint"),
        amount0=abi.decode_u256(log.data, 0),
        amount1=abi.decode_u256(log.data, 1),
        gas_used=log.gas_used, gas_price=log.gas_price,
    )


def decode_burn(log: LogRecord, lp_transfer: LogRecord) -> BurnEvent:
    """Burn(sender indexed, amount0, amount1, to indexed) plus its LP Transfer."""
    _expect_topic(log, BURN_TOPIC, "Burn")
    _check_companion(log, lp_transfer)
    return BurnEvent(
        pool=log.emitter, block=log.block, log_index=log.log_index,
        tx_hash=log.tx_hash, tx_sender=log.tx_sender,
        lp_amount=lp_transfer_amount(lp_transfer, "burn"),
        amount0=abi.decode_u256(log.data, 0),
        amount1=abi.decode_u256(log.data, 1),
        gas_used=log.gas_used, gas_price=log.gas_price,
    )


def _check_companion(log: LogRecord, lp_transfer: LogRecord) -> None:
    if lp_transfer.tx_hash != log.tx_hash:
        raise DecodeError("LP transfer comes from a different transaction")
    if lp_transfer.emitter != log.emitter:
        raise DecodeError("LP transfer was not emitted by the pool")


def decode_swap(log: LogRecord) -> SwapEvent:
    """Swap(sender indexed, amount0In, amount1In, amount0Out, amount1Out, to indexed)."""
    _expect_topic(log, SWAP_TOPIC, "Swap")
    return SwapEvent(
        pool=log.emitter, block=log.block, log_index=log.log_index,
        tx_hash=log.tx_hash, tx_sender=log.tx_sender,
        amount0_in=abi.decode_u256(log.data, 0),
        amount1_in=abi.decode_u256(log.data, 1),
        amount0_out=abi.decode_u256(log.data, 2),
        amount1_out=abi.decode_u256(log.data, 3),
        gas_used=log.gas_used, gas_price=log.gas_price,
    )


@dataclass
class AssembledPools:
    """Timeline per pool, plus whatever did not fit."""

    timelines: dict[Address, PoolTimeline]
    orphans: list[LogRecord]
    decode_failures: list[tuple[LogRecord, str]]


def assemble_timelines(
    pools: Iterable[PoolRecord],
    logs: Iterable[LogRecord],
) -> AssembledPools:
    """Group pool events into sorted per-pool timelines.

    The result is a function of the input multisets only: logs may arrive in
    any order. Mint/Burn logs are joined with their same-transaction LP
    Transfer by transaction hash. Events for unknown pools become orphans
    rather than being dropped.
    """
    records = {p.pool: p for p in pools}
    orphans: list[LogRecord] = []
    failures: list[tuple[LogRecord, str]] = []
    lp_moves: dict[tuple[bytes, Address, str], LogRecord] = {}
    pending: list[LogRecord] = []
    swaps_by_pool: dict[Address, list[SwapEvent]] = {p: [] for p in records}

    for log in logs:
        topic = log.topic0
        known = log.emitter in records
        if topic == SWAP_TOPIC:
            if not known:
                orphans.append(log)
                continue
            try:
                swaps_by_pool[log.emitter].append(decode_swap(log))
            except DecodeError as exc:
                failures.append((log, str(exc)))
        elif topic == MINT_TOPIC or topic == BURN_TOPIC:
            if not known:
                orphans.append(log)
                continue
            pending.append(log)
        elif topic == TRANSFER_TOPIC and known:
            try:
                direction = _lp_direction(log)
            except DecodeError as exc:
                failures.append((log, str(exc)))
                continue
            if direction is not None:
                lp_moves[(log.tx_hash, log.emitter, direction)] = log

    events_by_pool: dict[Address, list[PoolEvent]] = {
        p: list(swaps) for p, swaps in swaps_by_pool.items()
    }
    for log in pending:
        direction = "mint" if log.topic0 == MINT_TOPIC else "burn"
        companion = lp_moves.get((log.tx_hash, log.emitter, direction))
        if companion is None:
            failures.append((log, f"no LP {direction} transfer in transaction"))
            continue
        try:
            if direction == "mint":
                events_by_pool[log.emitter].append(decode_mint(log, companion))
            else:
                events_by_pool[log.emitter].append(decode_burn(log, companion))
        except DecodeError as exc:
            failures.append((log, str(exc)))

    timelines: dict[Address, PoolTimeline] = {}
    for pool_addr in sorted(records):
        events = events_by_pool[pool_addr]
        events.sort(key=lambda e: e.order_key)
        record = records[pool_addr]
        last = record.created_block
        if events and events[-1].block.number > last.number:
            last = events[-1].block
        timelines[pool_addr] = PoolTimeline(
            record=replace(record, last_event_block=last),
            events=events,
        )
    orphans.sort(key=lambda log: log.order_key)
    return AssembledPools(timelines=timelines, orphans=orphans,
                          decode_failures=failures)


def _lp_direction(log: LogRecord) -> str | None:
    """mint/burn/None for a pool-emitted Transfer (None: holder-to-holder)."""
    if len(log.indexed_topics) != 2:
        raise DecodeError("Transfer needs 2 indexed topics")
    src = abi.topic_to_address(log.indexed_topics[0])
    dst = abi.topic_to_address(log.indexed_topics[1])
    if dst == ZERO_ADDRESS and src != ZERO_ADDRESS:
        return "burn"
    if src == ZERO_ADDRESS and dst != ZERO_ADDRESS:
        return "mint"
    return None


def factory_counts(pools: Iterable[PoolRecord]) -> dict[Address, int]:
    """Number of pools created per factory."""
    counts: dict[Address, int] = {}
    for p in pools:
        counts[p.factory] = counts.get(p.factory, 0) + 1
    return counts


def factory_shares(pools: Iterable[PoolRecord]) -> dict[Address, float]:
    counts = factory_counts(pools)
    total = sum(counts.values())
    return {f: c / total for f, c in sorted(counts.items())} if total else {}


POOL_CSV_COLUMNS = [
    "pool", "factory", "creator", "token0", "token1", "created_block",
    "last_event_block", "gas_used", "gas_price",
]
EVENT_CSV_COLUMNS = {
    "mint": ["pool", "block", "log_index", "tx_sender", "lp_amount",
             "amount0", "amount1", "gas_used", "gas_price"],
    "burn": ["pool", "block", "log_index", "tx_sender", "lp_amount",
             "amount0", "amount1", "gas_used", "gas_price"],
    "swap": ["pool", "block", "log_index", "tx_sender", "amount0_in",
             "amount1_in", "amount0_out", "amount1_out", "gas_used", "gas_price"],
}


def write_pool_csv(path: str | Path, timelines: Iterable[PoolTimeline]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(POOL_CSV_COLUMNS)
        for t in timelines:
            r = t.record
            w.writerow([
                r.pool.hex, r.factory.hex, r.creator.hex, r.token0.hex,
                r.token1.hex, r.created_block.number, r.last_event_block.number,
                r.gas_used, r.gas_price,
            ])


def write_event_csvs(out_dir: str | Path, timelines: Iterable[PoolTimeline]) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {kind: out_dir / f"{kind}s.csv" for kind in EVENT_CSV_COLUMNS}
    handles = {kind: open(p, "w", encoding="utf-8", newline="")
               for kind, p in paths.items()}
    try:
        writers = {kind: csv.writer(fh) for kind, fh in handles.items()}
        for kind, w in writers.items():
            w.writerow(EVENT_CSV_COLUMNS[kind])
        for t in timelines:
            for e in t.events:
                if isinstance(e, MintEvent):
                    writers["mint"].writerow([
                        e.pool.hex, e.block.number, e.log_index, e.tx_sender.hex,
                        e.lp_amount, e.amount0, e.amount1, e.gas_used, e.gas_price,
                    ])
                elif isinstance(e, BurnEvent):
                    writers["burn"].writerow([
                        e.pool.hex, e.block.number, e.log_index, e.tx_sender.hex,
                        e.lp_amount, e.amount0, e.amount1, e.gas_used, e.gas_price,
                    ])
                else:
                    writers["swap"].writerow([
                        e.pool.hex, e.block.number, e.log_index, e.tx_sender.hex,
                        e.amount0_in, e.amount1_in, e.amount0_out, e.amount1_out,
                        e.gas_used, e.gas_price,
                    ])
    finally:
        for fh in handles.values():
            fh.close()
    return paths
