"""Token identification from runtime bytecode, and the token dataset.

A contract counts as a fungible token when its bytecode contains the
standard's mandatory method selectors. Selectors are extracted from the
decoded opcode stream (operands of PUSH4 instructions); when the stream
cannot be decoded cleanly the extraction falls back to a permissive raw
byte-substring scan.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .core import (
    Address,
    BlockRef,
    ContractCreation,
    LogRecord,
    Selector,
    TokenMetadata,
    Topic,
    TRANSFER_TOPIC,
    keccak_selector,
)


@dataclass(frozen=True)
class StandardSpec:
    """A fungible-token interface standard: which selectors are required."""

    name: str
    mandatory_selectors: frozenset[Selector]
    optional_selectors: frozenset[Selector]
    transfer_topic: Topic

    def __post_init__(self) -> None:
        if self.mandatory_selectors & self.optional_selectors:
            raise ValueError("mandatory and optional selector sets must be disjoint")


SEL_NAME = keccak_selector("name()")
SEL_SYMBOL = keccak_selector("symbol()")
SEL_DECIMALS = keccak_selector("decimals()")
SEL_TOTAL_SUPPLY = keccak_selector("totalSupply()")
SEL_BALANCE_OF = keccak_selector("balanceOf(address)")
SEL_TRANSFER = keccak_selector("transfer(address,uint256)")
SEL_TRANSFER_FROM = keccak_selector("transferFrom(address,address,uint256)")
SEL_APPROVE = keccak_selector("approve(address,uint256)")
SEL_ALLOWANCE = keccak_selector("allowance(address,address)")

_CORE_SELECTORS = frozenset({
    SEL_TOTAL_SUPPLY, SEL_BALANCE_OF, SEL_TRANSFER,
    SEL_TRANSFER_FROM, SEL_APPROVE, SEL_ALLOWANCE,
})

# ERC-20 leaves name/symbol/decimals optional; BEP-20 requires everything
# except symbol().
ERC20 = StandardSpec(
    name="erc20",
    mandatory_selectors=_CORE_SELECTORS,
    optional_selectors=frozenset({SEL_NAME, SEL_SYMBOL, SEL_DECIMALS}),
    transfer_topic=TRANSFER_TOPIC,
)
BEP20 = StandardSpec(
    name="bep20",
    mandatory_selectors=_CORE_SELECTORS | {SEL_NAME, SEL_DECIMALS},
    optional_selectors=frozenset({SEL_SYMBOL}),
    transfer_topic=TRANSFER_TOPIC,
)

STANDARDS = {"erc20": ERC20, "bep20": BEP20}

_PUSH1 = 0x60
_PUSH32 = 0x7F
_PUSH4 = 0x63


def extract_selectors(bytecode: bytes) -> set[Selector]:
    """Every 4-byte selector present in the bytecode.

    Primary rule: the operand of each PUSH4 in a linear disassembly (other
    opcodes advance one byte, PUSHn skips its n-byte operand). If the stream
    ends inside a push operand the disassembly is untrustworthy and the scan
    falls back to every 4-byte substring, which subsumes the primary rule.
    """
    if not bytecode:
        raise ValueError("bytecode must be non-empty")
    selectors: set[Selector] = set()
    i = 0
    n = len(bytecode)
    while i < n:
        op = bytecode[i]
        if _PUSH1 <= op <= _PUSH32:
            width = op - _PUSH1 + 1
            if i + 1 + width > n:
                return _substring_selectors(bytecode)
            if op == _PUSH4:
                selectors.add(Selector(bytecode[i + 1:i + 5]))
            i += 1 + width
        else:
            i += 1
    return selectors


def _substring_selectors(bytecode: bytes) -> set[Selector]:
    return {Selector(bytecode[i:i + 4]) for i in range(len(bytecode) - 3)}


@dataclass(frozen=True)
class ComplianceResult:
    compliant: bool
    has_all_optional: bool


def is_compliant(bytecode: bytes, spec: StandardSpec) -> ComplianceResult:
    """Whether the bytecode implements all of the standard's mandatory methods."""
    present = extract_selectors(bytecode) if bytecode else set()
    compliant = spec.mandatory_selectors <= present
    has_optional = compliant and spec.optional_selectors <= present
    return ComplianceResult(compliant=compliant, has_all_optional=has_optional)


@dataclass(frozen=True, slots=True)
class TokenRecord:
    """An identified standard-compliant token with its provenance."""

    address: Address
    creation: ContractCreation
    standard: str
    implements_optional: bool
    metadata: TokenMetadata | None
    first_block: BlockRef
    last_event_block: BlockRef
    is_lp_token: bool = False
    duplicate_creation: bool = False

    def __post_init__(self) -> None:
        if self.last_event_block.number < self.first_block.number:
            raise ValueError(
                f"{self.address}: last event block {self.last_event_block.number} "
                f"precedes creation block {self.first_block.number}"
            )

    @property
    def name(self) -> str | None:
        return self.metadata.name if self.metadata else None


def last_event_blocks(logs: Iterable[LogRecord]) -> dict[Address, BlockRef]:
    """Latest block in which each contract emitted any event."""
    out: dict[Address, BlockRef] = {}
    for log in logs:
        prev = out.get(log.emitter)
        if prev is None or log.block.number > prev.number:
            out[log.emitter] = log.block
    return out


def build_token_dataset(
    creations: Iterable[ContractCreation],
    logs: Iterable[LogRecord],
    spec: StandardSpec,
    pool_addresses: set[Address] = frozenset(),
) -> list[TokenRecord]:
    """Classify every created contract; keep the compliant ones.

    Contracts whose address is a known pool are marked ``is_lp_token`` so the
    standard-token totals can exclude them. Duplicate creations keep the
    first record and flag the token.
    """
    return build_token_dataset_from_last_blocks(
        creations, last_event_blocks(logs), spec, pool_addresses
    )


def build_token_dataset_from_last_blocks(
    creations: Iterable[ContractCreation],
    last_blocks: dict[Address, BlockRef],
    spec: StandardSpec,
    pool_addresses: set[Address] = frozenset(),
) -> list[TokenRecord]:
    seen: dict[Address, int] = {}
    rows: list[TokenRecord] = []
    for creation in creations:
        addr = creation.contract
        if addr in seen:
            idx = seen[addr]
            if idx >= 0 and not rows[idx].duplicate_creation:
                rows[idx] = _replace_dup(rows[idx])
            continue
        verdict = is_compliant(creation.bytecode, spec)
        if not verdict.compliant:
            seen[addr] = -1
            continue
        last = last_blocks.get(addr, creation.block)
        if last.number < creation.block.number:
            last = creation.block
        seen[addr] = len(rows)
        rows.append(TokenRecord(
            address=addr,
            creation=creation,
            standard=spec.name,
            implements_optional=verdict.has_all_optional,
            metadata=creation.metadata,
            first_block=creation.block,
            last_event_block=last,
            is_lp_token=addr in pool_addresses,
        ))
    rows.sort(key=lambda r: r.address)
    return rows


def _replace_dup(rec: TokenRecord) -> TokenRecord:
    return replace(rec, duplicate_creation=True)


def standard_tokens(records: Iterable[TokenRecord]) -> list[TokenRecord]:
    """Compliant tokens that are not LP tokens (the "w/o LP" totals)."""
    return [r for r in records if not r.is_lp_token]


TOKEN_CSV_COLUMNS = [
    "address", "deployer", "via_internal", "block_created", "last_event_block",
    "compliant_standard", "has_optional", "name", "symbol", "decimals",
    "total_supply", "is_lp_token",
]


def write_token_csv(path: str | Path, records: Iterable[TokenRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TOKEN_CSV_COLUMNS)
        for r in records:
            m = r.metadata or TokenMetadata()
            w.writerow([
                r.address.hex,
                r.creation.deployer.hex,
                int(r.creation.via_internal),
                r.first_block.number,
                r.last_event_block.number,
                r.standard,
                int(r.implements_optional),
                m.name if m.name is not None else "",
                m.symbol if m.symbol is not None else "",
                m.decimals if m.decimals is not None else "",
                m.total_supply if m.total_supply is not None else "",
                int(r.is_lp_token),
            ])


def synthetic_bytecode(
    selectors: Iterable[Selector],
    *,
    embedded_raw: Iterable[Selector] = (),
    truncated_push: bool = False,
) -> bytes:
    """Assemble a dispatcher-shaped bytecode fixture.

    ``selectors`` become PUSH4 operands in a jump-table idiom. Entries in
    ``embedded_raw`` appear only inside a PUSH32 data constant, invisible to
    the opcode scan but present as substrings. ``truncated_push`` appends a
    push whose operand runs past the end, forcing the substring fallback.
    """
    out = bytearray.fromhex("6080604052")  # PUSH1 80 PUSH1 40 MSTORE
    dest = 0x0100
    for sel in selectors:
        out += b"\x63" + sel.raw          # PUSH4 selector
        out += b"\x81\x14"                # DUP2 EQ
        out += b"\x61" + dest.to_bytes(2, "big")  # PUSH2 dest
        out += b"\x57"                    # JUMPI
        dest += 0x10
    raws = list(embedded_raw)
    for group_start in range(0, len(raws), 8):
        word = b"".join(s.raw for s in raws[group_start:group_start + 8])
        out += b"\x7f" + word.ljust(32, b"\x00")  # PUSH32 with raw selectors
        out += b"\x50"                    # POP
    out += b"\x00"                        # STOP
    if truncated_push:
        out += b"\x7f\xaa\xbb"            # PUSH32 with only 2 operand bytes
    return bytes(out)
