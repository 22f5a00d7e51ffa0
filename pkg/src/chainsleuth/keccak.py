"""Pure-Python Keccak-256 (the original Keccak padding, as used by the EVM).

This is deliberately not hashlib's sha3_256: the EVM ecosystem predates the
NIST SHA-3 standard and uses the 0x01 multi-rate padding instead of 0x06.
"""

from __future__ import annotations

_ROUND_CONSTANTS = (
    0x0000000000000001, 0x0000000000008082, 0x800000000000808A, 0x8000000080008000,
    0x000000000000808B, 0x0000000080000001, 0x8000000080008081, 0x8000000000008009,
    0x000000000000008A, 0x0000000000000088, 0x0000000080008009, 0x000000008000000A,
    0x000000008000808B, 0x800000000000008B, 0x8000000000008089, 0x8000000000008003,
    0x8000000000008002, 0x8000000000000080, 0x000000000000800A, 0x800000008000000A,
    0x8000000080008081, 0x8000000000008080, 0x0000000080000001, 0x8000000080008008,
)

# Rho rotation offset for lane (x, y), flattened as x + 5*y.
_ROTATIONS = (
    0, 1, 62, 28, 27,
    36, 44, 6, 55, 20,
    3, 10, 43, 25, 39,
    41, 45, 15, 21, 8,
    18, 2, 61, 56, 14,
)

_MASK = (1 << 64) - 1

_RATE_BYTES = 136  # 1088-bit rate / 512-bit capacity


def _keccak_f1600(lanes: list[int]) -> None:
    """Apply the Keccak-f[1600] permutation to 25 lanes in place."""
    for rc in _ROUND_CONSTANTS:
        # Theta
        c = [lanes[x] ^ lanes[x + 5] ^ lanes[x + 10] ^ lanes[x + 15] ^ lanes[x + 20]
             for x in range(5)]
        for x in range(5):
            d = c[(x - 1) % 5] ^ (((c[(x + 1) % 5] << 1) | (c[(x + 1) % 5] >> 63)) & _MASK)
            for y in range(0, 25, 5):
                lanes[x + y] ^= d
        # Rho and Pi
        b = [0] * 25
        for x in range(5):
            for y in range(5):
                v = lanes[x + 5 * y]
                r = _ROTATIONS[5 * y + x]
                b[y + 5 * ((2 * x + 3 * y) % 5)] = ((v << r) | (v >> (64 - r))) & _MASK
        # Chi
        for y in range(0, 25, 5):
            row = b[y:y + 5]
            for x in range(5):
                lanes[x + y] = row[x] ^ ((~row[(x + 1) % 5]) & row[(x + 2) % 5])
        # Iota
        lanes[0] ^= rc


def keccak256(data: bytes) -> bytes:
    """Return the 32-byte Keccak-256 digest of ``data``."""
    # Multi-rate padding: 0x01 ... 0x80 (merged to 0x81 for a single pad byte).
    padlen = _RATE_BYTES - (len(data) % _RATE_BYTES)
    if padlen == 1:
        padded = data + b"\x81"
    else:
        padded = data + b"\x01" + b"\x00" * (padlen - 2) + b"\x80"

    lanes = [0] * 25
    for offset in range(0, len(padded), _RATE_BYTES):
        block = padded[offset:offset + _RATE_BYTES]
        for i in range(17):  # 136 bytes = 17 lanes
            lanes[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
        _keccak_f1600(lanes)

    out = b"".join(lanes[i].to_bytes(8, "little") for i in range(4))
    return out


def keccak256_hex(data: bytes) -> str:
    """Hex rendering of :func:`keccak256`, without a 0x prefix."""
    return keccak256(data).hex()
