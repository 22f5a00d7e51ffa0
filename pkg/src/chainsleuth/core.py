"""Core chain vocabulary: addresses, blocks, selectors, topics, decoded records.

All types are immutable value types; every operation here is a pure function.
Quantities that can exceed 64 bits (token amounts, supplies) are plain Python
ints in base units, so arithmetic is exact at any magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering

from .keccak import keccak256


class ChainDataError(ValueError):
    """Malformed or inconsistent chain data."""


@total_ordering
@dataclass(frozen=True, eq=True)
class Address:
    """A 20-byte account identifier, rendered as 0x + 40 lowercase hex chars."""

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != 20:
            raise ChainDataError(f"address must be 20 bytes, got {len(self.raw)}")

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        return cls(_bytes_from_hex(text, 20, "address"))

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"Address({self.hex})"

    def __lt__(self, other: "Address") -> bool:
        return self.raw < other.raw

    def __hash__(self) -> int:
        return hash(self.raw)


ZERO_ADDRESS = Address(b"\x00" * 20)


@dataclass(frozen=True)
class BlockRef:
    """A block position, optionally carrying the block timestamp (epoch seconds)."""

    number: int
    timestamp: int | None = None

    def __post_init__(self) -> None:
        if self.number < 0 or self.number >= 1 << 64:
            raise ChainDataError(f"block number out of range: {self.number}")


@dataclass(frozen=True)
class Amount:
    """A non-negative integer quantity in base units plus its display decimals."""

    value: int
    decimals: int = 0

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ChainDataError(f"amount must be non-negative, got {self.value}")
        if not 0 <= self.decimals <= 77:
            raise ChainDataError(f"decimals out of range: {self.decimals}")

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class Selector:
    """First 4 bytes of the Keccak-256 hash of a canonical method signature."""

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != 4:
            raise ChainDataError(f"selector must be 4 bytes, got {len(self.raw)}")

    @classmethod
    def from_hex(cls, text: str) -> "Selector":
        return cls(_bytes_from_hex(text, 4, "selector"))

    @property
    def hex(self) -> str:
        return self.raw.hex()

    def __repr__(self) -> str:
        return f"Selector({self.hex})"

    def __hash__(self) -> int:
        return hash(self.raw)


@dataclass(frozen=True)
class Topic:
    """Full 32-byte Keccak-256 hash of a canonical event signature (topic0)."""

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != 32:
            raise ChainDataError(f"topic must be 32 bytes, got {len(self.raw)}")

    @classmethod
    def from_hex(cls, text: str) -> "Topic":
        return cls(_bytes_from_hex(text, 32, "topic"))

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    @property
    def prefix(self) -> Selector:
        """The 4-byte prefix, for checking against signature-table fixtures."""
        return Selector(self.raw[:4])

    def __repr__(self) -> str:
        return f"Topic({self.hex})"

    def __hash__(self) -> int:
        return hash(self.raw)


@dataclass(frozen=True)
class TokenMetadata:
    """Result of the optional name/symbol/decimals/totalSupply read-only calls.

    ``None`` fields were absent or reverted; fields listed in ``undecodable``
    returned data that could not be interpreted.
    """

    name: str | None = None
    symbol: str | None = None
    decimals: int | None = None
    total_supply: int | None = None
    undecodable: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return (self.name is None and self.symbol is None
                and self.decimals is None and self.total_supply is None)


@dataclass(frozen=True, slots=True)
class LogRecord:
    """One decoded chain event.

    ``tx_sender`` is the EOA that originated the transaction (not the message
    sender of any internal call). ``log_index`` is the producer-assigned
    position within the block; (block.number, log_index) is a total order.
    """

    emitter: Address
    block: BlockRef
    log_index: int
    tx_hash: bytes
    tx_sender: Address
    topic0: Topic
    indexed_topics: tuple[bytes, ...]
    data: bytes
    gas_used: int
    gas_price: int

    def __post_init__(self) -> None:
        if len(self.tx_hash) != 32:
            raise ChainDataError("tx_hash must be 32 bytes")
        if self.gas_used < 0 or self.gas_price < 0:
            raise ChainDataError("gas fields must be non-negative")
        for t in self.indexed_topics:
            if len(t) != 32:
                raise ChainDataError("indexed topics must be 32 bytes")

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.block.number, self.log_index)

    @property
    def fee(self) -> int:
        return self.gas_used * self.gas_price


@dataclass(frozen=True, slots=True)
class ContractCreation:
    """A contract deployment observed on chain.

    ``via_internal`` means the contract was created by another contract; the
    recorded deployer is then the EOA whose transaction triggered the chain of
    calls. ``metadata`` carries token metadata when the producer resolved it.
    """

    contract: Address
    deployer: Address
    block: BlockRef
    via_internal: bool
    bytecode: bytes
    gas_used: int
    gas_price: int
    tx_hash: bytes | None = None
    log_index: int = 0
    metadata: TokenMetadata | None = None

    def __post_init__(self) -> None:
        if not self.bytecode:
            raise ChainDataError(f"empty bytecode for {self.contract}")
        if self.gas_used < 0 or self.gas_price < 0:
            raise ChainDataError("gas fields must be non-negative")
        if self.tx_hash is not None and len(self.tx_hash) != 32:
            raise ChainDataError("tx_hash must be 32 bytes")

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.block.number, self.log_index)

    @property
    def fee(self) -> int:
        return self.gas_used * self.gas_price


def keccak_selector(signature_text: str) -> Selector:
    """4-byte method selector: first 4 bytes of Keccak-256 of the signature.

    The signature must be canonical, e.g. ``"transfer(address,uint256)"``
    (no argument names, no spaces).
    """
    return Selector(keccak256(signature_text.encode("utf-8"))[:4])


def keccak_topic(event_signature_text: str) -> Topic:
    """Full 32-byte event topic (topic0) for a canonical event signature."""
    return Topic(keccak256(event_signature_text.encode("utf-8")))


def tx_fee(gas_used: int, gas_price: int) -> int:
    """Transaction fee in native-coin base units (wei): gas_used x gas_price."""
    if gas_used < 0 or gas_price < 0:
        raise ChainDataError("gas_used and gas_price must be non-negative")
    return gas_used * gas_price


def _bytes_from_hex(text: str, expect_len: int, what: str) -> bytes:
    s = text[2:] if text.startswith(("0x", "0X")) else text
    try:
        raw = bytes.fromhex(s)
    except ValueError as exc:
        raise ChainDataError(f"invalid hex for {what}: {text!r}") from exc
    if len(raw) != expect_len:
        raise ChainDataError(f"{what} must be {expect_len} bytes, got {len(raw)}")
    return raw


# Event topics used throughout the toolkit, derived rather than hard-coded so
# they cannot drift from the hashing rule.
TRANSFER_TOPIC = keccak_topic("Transfer(address,address,uint256)")
APPROVAL_TOPIC = keccak_topic("Approval(address,address,uint256)")
PAIR_CREATED_TOPIC = keccak_topic("PairCreated(address,address,address,uint256)")
MINT_TOPIC = keccak_topic("Mint(address,uint256,uint256)")
BURN_TOPIC = keccak_topic("Burn(address,uint256,uint256,address)")
SWAP_TOPIC = keccak_topic("Swap(address,uint256,uint256,uint256,uint256,address)")
