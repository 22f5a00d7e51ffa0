"""Fixture files: newline-delimited JSON snapshots of chain records.

One header line describing the chain, then one record per line (contract
creations and event logs), sorted by (block number, intra-block index).
All byte fields are 0x-prefixed lowercase hex; amounts that can exceed 64
bits are decimal strings. Files are UTF-8.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Union

from .core import (
    Address,
    BlockRef,
    ChainDataError,
    ContractCreation,
    LogRecord,
    TokenMetadata,
    Topic,
)

Record = Union[ContractCreation, LogRecord]


class FixtureError(ChainDataError):
    """A fixture file violates the format or its header invariants."""


@dataclass(frozen=True)
class ChainProfile:
    """Per-chain constants used for time estimates and detector defaults."""

    name: str
    mean_block_interval: float
    start_block: int = 0
    end_block: int = (1 << 63) - 1
    start_timestamp: int | None = None
    wrapped_native_token: Address | None = None
    sniper_delay_blocks: int = 5
    sniper_pool_threshold: int = 100

    def __post_init__(self) -> None:
        if self.mean_block_interval <= 0:
            raise ChainDataError("mean_block_interval must be positive")
        if self.start_block > self.end_block:
            raise ChainDataError("start_block must not exceed end_block")

    def seconds_for_blocks(self, blocks: int) -> float:
        return blocks * self.mean_block_interval

    def timestamp_at(self, block_number: int) -> int | None:
        """Block timestamp extrapolated from the profile start, if anchored."""
        if self.start_timestamp is None:
            return None
        delta = block_number - self.start_block
        return self.start_timestamp + round(delta * self.mean_block_interval)


# BSC blocks average 3 s, Ethereum 15 s; the sniper thresholds are the
# per-chain defaults (5 blocks / 100 pools and 3 blocks / 10 pools).
WBNB = Address.from_hex("0xbb4cdb9cbd36b01bd1cbaebf2de08d9173bc095c")
WETH = Address.from_hex("0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2")

BSC_PROFILE = ChainProfile(
    name="bsc", mean_block_interval=3.0, wrapped_native_token=WBNB,
    sniper_delay_blocks=5, sniper_pool_threshold=100,
)
ETHEREUM_PROFILE = ChainProfile(
    name="ethereum", mean_block_interval=15.0, wrapped_native_token=WETH,
    sniper_delay_blocks=3, sniper_pool_threshold=10,
)

PROFILES = {"bsc": BSC_PROFILE, "ethereum": ETHEREUM_PROFILE}


@dataclass
class FixtureFile:
    """A parsed fixture: chain header plus ordered records."""

    profile: ChainProfile
    records: list[Record] = field(default_factory=list)

    def logs(self) -> Iterator[LogRecord]:
        return (r for r in self.records if isinstance(r, LogRecord))

    def creations(self) -> Iterator[ContractCreation]:
        return (r for r in self.records if isinstance(r, ContractCreation))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FixtureFile):
            return NotImplemented
        return self.profile == other.profile and self.records == other.records


def profile_to_dict(p: ChainProfile) -> dict:
    return {
        "kind": "header",
        "chain": p.name,
        "mean_block_interval": p.mean_block_interval,
        "start_block": p.start_block,
        "end_block": p.end_block,
        "start_timestamp": p.start_timestamp,
        "wrapped_native_token": p.wrapped_native_token.hex if p.wrapped_native_token else None,
        "sniper_delay_blocks": p.sniper_delay_blocks,
        "sniper_pool_threshold": p.sniper_pool_threshold,
    }


def profile_from_dict(d: dict) -> ChainProfile:
    wnt = d.get("wrapped_native_token")
    return ChainProfile(
        name=d["chain"],
        mean_block_interval=d["mean_block_interval"],
        start_block=d["start_block"],
        end_block=d["end_block"],
        start_timestamp=d.get("start_timestamp"),
        wrapped_native_token=Address.from_hex(wnt) if wnt else None,
        sniper_delay_blocks=d.get("sniper_delay_blocks", 5),
        sniper_pool_threshold=d.get("sniper_pool_threshold", 100),
    )


def record_to_dict(r: Record) -> dict:
    if isinstance(r, ContractCreation):
        d = {
            "kind": "creation",
            "block": r.block.number,
            "index": r.log_index,
            "timestamp": r.block.timestamp,
            "contract": r.contract.hex,
            "deployer": r.deployer.hex,
            "via_internal": r.via_internal,
            "tx_hash": "0x" + r.tx_hash.hex() if r.tx_hash else None,
            "gas_used": r.gas_used,
            "gas_price": r.gas_price,
            "bytecode": "0x" + r.bytecode.hex(),
        }
        if r.metadata is not None:
            m = r.metadata
            d["metadata"] = {
                "name": m.name,
                "symbol": m.symbol,
                "decimals": m.decimals,
                "total_supply": str(m.total_supply) if m.total_supply is not None else None,
                "undecodable": list(m.undecodable),
            }
        return d
    return {
        "kind": "log",
        "block": r.block.number,
        "index": r.log_index,
        "timestamp": r.block.timestamp,
        "emitter": r.emitter.hex,
        "tx_hash": "0x" + r.tx_hash.hex(),
        "tx_sender": r.tx_sender.hex,
        "topic0": r.topic0.hex,
        "topics": ["0x" + t.hex() for t in r.indexed_topics],
        "data": "0x" + r.data.hex(),
        "gas_used": r.gas_used,
        "gas_price": r.gas_price,
    }


class _AddressCache(dict):
    """Interns Address objects while parsing; repeats are the common case."""

    def __missing__(self, hexstr: str) -> Address:
        addr = Address.from_hex(hexstr)
        self[hexstr] = addr
        return addr


def record_from_dict(d: dict, addr_cache: dict | None = None) -> Record:
    cache = addr_cache if addr_cache is not None else _AddressCache()
    kind = d["kind"]
    block = BlockRef(d["block"], d.get("timestamp"))
    if kind == "creation":
        meta = None
        md = d.get("metadata")
        if md is not None:
            ts = md.get("total_supply")
            meta = TokenMetadata(
                name=md.get("name"),
                symbol=md.get("symbol"),
                decimals=md.get("decimals"),
                total_supply=int(ts) if ts is not None else None,
                undecodable=tuple(md.get("undecodable", ())),
            )
        tx = d.get("tx_hash")
        return ContractCreation(
            contract=cache[d["contract"]],
            deployer=cache[d["deployer"]],
            block=block,
            via_internal=d["via_internal"],
            bytecode=bytes.fromhex(d["bytecode"][2:]),
            gas_used=d["gas_used"],
            gas_price=d["gas_price"],
            tx_hash=bytes.fromhex(tx[2:]) if tx else None,
            log_index=d["index"],
            metadata=meta,
        )
    if kind == "log":
        return LogRecord(
            emitter=cache[d["emitter"]],
            block=block,
            log_index=d["index"],
            tx_hash=bytes.fromhex(d["tx_hash"][2:]),
            tx_sender=cache[d["tx_sender"]],
            topic0=Topic.from_hex(d["topic0"]),
            indexed_topics=tuple(bytes.fromhex(t[2:]) for t in d["topics"]),
            data=bytes.fromhex(d["data"][2:]),
            gas_used=d["gas_used"],
            gas_price=d["gas_price"],
        )
    raise FixtureError(f"unknown record kind {kind!r}")


def _check_order(prev_key: tuple[int, int] | None, rec: Record, where: str) -> tuple[int, int]:
    key = rec.order_key
    if prev_key is not None and key <= prev_key:
        raise FixtureError(
            f"{where}: records out of order, {key} after {prev_key}"
        )
    return key


def write_fixture(path: str | Path, profile: ChainProfile, records: Iterable[Record]) -> None:
    """Write a fixture file; rejects out-of-order or out-of-range records."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_fixture(fh, profile, records)


def dump_fixture(fh, profile: ChainProfile, records: Iterable[Record]) -> None:
    fh.write(json.dumps(profile_to_dict(profile), ensure_ascii=False) + "\n")
    prev: tuple[int, int] | None = None
    for rec in records:
        prev = _check_order(prev, rec, "write_fixture")
        if not profile.start_block <= rec.block.number <= profile.end_block:
            raise FixtureError(
                f"write_fixture: record at block {rec.block.number} outside "
                f"header range [{profile.start_block}, {profile.end_block}]"
            )
        fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False) + "\n")


def fixture_to_bytes(profile: ChainProfile, records: Iterable[Record]) -> bytes:
    buf = io.StringIO()
    dump_fixture(buf, profile, records)
    return buf.getvalue().encode("utf-8")


def read_fixture(path: str | Path) -> FixtureFile:
    """Read and validate a whole fixture file into memory."""
    profile, it = iter_fixture(path)
    return FixtureFile(profile, list(it))


def iter_fixture(path: str | Path) -> tuple[ChainProfile, Iterator[Record]]:
    """Streaming fixture reader: returns the header and a validating iterator."""
    fh = open(path, "r", encoding="utf-8")
    header_line = fh.readline()
    if not header_line:
        fh.close()
        raise FixtureError(f"{path}: empty file, missing header")
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        fh.close()
        raise FixtureError(f"{path}: line 1: invalid JSON header: {exc}") from exc
    if header.get("kind") != "header":
        fh.close()
        raise FixtureError(f"{path}: line 1: first record must be the header")
    profile = profile_from_dict(header)

    def _records() -> Iterator[Record]:
        cache = _AddressCache()
        prev: tuple[int, int] | None = None
        prev_ts: int | None = None
        lineno = 1
        try:
            for line in fh:
                lineno += 1
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    rec = record_from_dict(d, cache)
                except FixtureError as exc:
                    raise FixtureError(f"{path}: line {lineno}: {exc}") from exc
                except (KeyError, ValueError, TypeError) as exc:
                    raise FixtureError(f"{path}: line {lineno}: malformed record: {exc}") from exc
                if not profile.start_block <= rec.block.number <= profile.end_block:
                    raise FixtureError(
                        f"{path}: line {lineno}: block {rec.block.number} outside "
                        f"header range [{profile.start_block}, {profile.end_block}]"
                    )
                prev = _check_order(prev, rec, f"{path}: line {lineno}")
                ts = rec.block.timestamp
                if ts is not None:
                    if prev_ts is not None and ts < prev_ts:
                        raise FixtureError(
                            f"{path}: line {lineno}: timestamp {ts} decreases below {prev_ts}"
                        )
                    prev_ts = ts
                yield rec
        finally:
            fh.close()

    return profile, _records()


def content_hash(path: str | Path) -> str:
    """sha256 of the file bytes, streamed."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def with_block_range(profile: ChainProfile, start: int, end: int) -> ChainProfile:
    """Copy of ``profile`` with a concrete [start, end] block range."""
    return replace(profile, start_block=start, end_block=end)
