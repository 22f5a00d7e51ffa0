"""Minimal ABI encoding/decoding for the event payloads and calls we handle."""

from __future__ import annotations

from .core import Address, ChainDataError

WORD = 32


def encode_u256(value: int) -> bytes:
    if value < 0 or value >= 1 << 256:
        raise ChainDataError(f"uint256 out of range: {value}")
    return value.to_bytes(WORD, "big")


def decode_u256(data: bytes, word_index: int = 0) -> int:
    start = word_index * WORD
    word = data[start:start + WORD]
    if len(word) != WORD:
        raise ChainDataError(
            f"payload too short: word {word_index} needs bytes "
            f"[{start}, {start + WORD}) of {len(data)}"
        )
    return int.from_bytes(word, "big")


def encode_address(addr: Address) -> bytes:
    return b"\x00" * 12 + addr.raw


def decode_address(data: bytes, word_index: int = 0) -> Address:
    start = word_index * WORD
    word = data[start:start + WORD]
    if len(word) != WORD:
        raise ChainDataError(f"payload too short for address word {word_index}")
    if any(word[:12]):
        raise ChainDataError(f"address word {word_index} has non-zero padding")
    return Address(word[12:])


def topic_to_address(topic: bytes) -> Address:
    if len(topic) != WORD:
        raise ChainDataError("indexed topic must be 32 bytes")
    if any(topic[:12]):
        raise ChainDataError("address topic has non-zero padding")
    return Address(topic[12:])


def encode_string(text: str) -> bytes:
    """ABI-encode a single dynamic string return value."""
    raw = text.encode("utf-8")
    padded_len = (len(raw) + WORD - 1) // WORD * WORD
    return (
        encode_u256(WORD)
        + encode_u256(len(raw))
        + raw.ljust(padded_len, b"\x00")
    )


def decode_string(data: bytes) -> str:
    """Decode a single ABI string return; tolerates bytes32-style returns."""
    if len(data) == WORD:
        # Some legacy tokens return a right-padded bytes32 instead.
        return data.rstrip(b"\x00").decode("utf-8")
    offset = decode_u256(data, 0)
    if offset % WORD or offset + WORD > len(data):
        raise ChainDataError(f"bad string offset {offset}")
    length = int.from_bytes(data[offset:offset + WORD], "big")
    start = offset + WORD
    if start + length > len(data):
        raise ChainDataError("string payload truncated")
    return data[start:start + length].decode("utf-8")
