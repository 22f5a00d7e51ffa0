"""Constant-product pool arithmetic, exact over integers.

Every division rounds in the pool's favor: swap outputs and pro-rata
redemptions round down, the reserve kept after a swap rounds up. That makes
the zero-fee invariant precise: after a swap of effective input ``a`` into
reserve ``x``, the product never decreases and its excess over the old
product is less than ``x + a``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import isqrt

FEE_DENOM = 10_000
DEFAULT_FEE_BPS = 30
MINIMUM_LIQUIDITY = 1_000


class AmmError(ValueError):
    """A pool operation violated its precondition."""


@dataclass(frozen=True)
class PoolState:
    """Reserves and LP supply of one two-token pool."""

    reserve0: int
    reserve1: int
    lp_total_supply: int
    fee_bps: int = DEFAULT_FEE_BPS

    def __post_init__(self) -> None:
        if self.reserve0 < 0 or self.reserve1 < 0 or self.lp_total_supply < 0:
            raise AmmError("reserves and LP supply must be non-negative")
        if not 0 <= self.fee_bps <= 1000:
            raise AmmError(f"fee_bps out of range: {self.fee_bps}")
        empty = self.reserve0 == 0 and self.reserve1 == 0
        if (self.lp_total_supply == 0) != empty:
            raise AmmError("LP supply is zero exactly when both reserves are zero")

    @property
    def product(self) -> int:
        return self.reserve0 * self.reserve1


EMPTY_POOL = PoolState(0, 0, 0)


def swap_exact_in(state: PoolState, amount_in: int, side: int) -> tuple[int, PoolState]:
    """Swap ``amount_in`` of token ``side`` (0 or 1) into the pool.

    Returns (amount_out, new_state). The fee stays in the pool: the full
    input is added to the in-side reserve while the output is computed from
    the fee-reduced input.
    """
    if side not in (0, 1):
        raise AmmError(f"side must be 0 or 1, got {side}")
    if amount_in <= 0:
        raise AmmError("swap requires a positive input amount")
    if state.reserve0 == 0 or state.reserve1 == 0:
        raise AmmError("cannot swap against an empty pool")

    x, y = (state.reserve0, state.reserve1) if side == 0 else (state.reserve1, state.reserve0)
    a_eff = amount_in * (FEE_DENOM - state.fee_bps) // FEE_DENOM
    # Keep at least ceil(x*y / (x + a_eff)) on the out side.
    kept = -(x * y // -(x + a_eff)) if a_eff > 0 else y
    amount_out = y - kept
    if amount_out <= 0:
        raise AmmError(f"dust input {amount_in}: swap output would be zero")

    if side == 0:
        new_state = replace(state, reserve0=x + amount_in, reserve1=kept)
    else:
        new_state = replace(state, reserve1=x + amount_in, reserve0=kept)
    return amount_out, new_state


def add_liquidity(
    state: PoolState,
    amount0: int,
    amount1: int,
    lock_minimum_liquidity: bool = False,
) -> tuple[int, PoolState]:
    """Deposit both tokens; returns (lp_minted_to_provider, new_state).

    The first provision mints floor(sqrt(amount0 * amount1)) LP total; with
    ``lock_minimum_liquidity`` the first MINIMUM_LIQUIDITY of that stays
    locked and is excluded from the amount credited to the provider. Later
    provisions must match the reserve ratio up to one unit of rounding and
    mint pro-rata, rounded down.
    """
    if amount0 < 0 or amount1 < 0:
        raise AmmError("liquidity amounts must be non-negative")

    if state.lp_total_supply == 0:
        if amount0 == 0 or amount1 == 0:
            raise AmmError("first provision requires both amounts positive")
        minted = isqrt(amount0 * amount1)
        credited = minted - MINIMUM_LIQUIDITY if lock_minimum_liquidity else minted
        if credited <= 0:
            raise AmmError("first provision too small to mint LP tokens")
        new_state = replace(
            state, reserve0=amount0, reserve1=amount1, lp_total_supply=minted
        )
        return credited, new_state

    if not _ratio_matches(state.reserve0, state.reserve1, amount0, amount1):
        raise AmmError(
            f"provision ({amount0}, {amount1}) does not match reserve ratio "
            f"({state.reserve0}, {state.reserve1}) within rounding"
        )
    total = state.lp_total_supply
    minted = min(amount0 * total // state.reserve0, amount1 * total // state.reserve1)
    if minted <= 0:
        raise AmmError("provision too small to mint LP tokens")
    new_state = replace(
        state,
        reserve0=state.reserve0 + amount0,
        reserve1=state.reserve1 + amount1,
        lp_total_supply=total + minted,
    )
    return minted, new_state


def remove_liquidity(state: PoolState, lp_burned: int) -> tuple[int, int, PoolState]:
    """Burn LP tokens for a pro-rata share of both reserves, rounded down."""
    if lp_burned <= 0:
        raise AmmError("must burn a positive LP amount")
    if lp_burned > state.lp_total_supply:
        raise AmmError(
            f"cannot burn {lp_burned} of {state.lp_total_supply} LP tokens"
        )
    total = state.lp_total_supply
    amount0 = state.reserve0 * lp_burned // total
    amount1 = state.reserve1 * lp_burned // total
    new_state = PoolState(
        reserve0=state.reserve0 - amount0,
        reserve1=state.reserve1 - amount1,
        lp_total_supply=total - lp_burned,
        fee_bps=state.fee_bps,
    )
    return amount0, amount1, new_state


def _ratio_matches(r0: int, r1: int, a0: int, a1: int) -> bool:
    # Accept the floor and ceil of the exact proportional counterpart,
    # checked from both sides so neither token is privileged.
    if a0 == 0 and a1 == 0:
        return False
    want1 = a0 * r1
    if want1 // r0 <= a1 <= -(want1 // -r0):
        return True
    want0 = a1 * r0
    return want0 // r1 <= a0 <= -(want0 // -r1)
