"""Scripted scenario runner over the constant-product engine.

A scenario is an ordered list of actions (create token, create pool, add or
remove liquidity, swap, advance blocks) executed by named actors. Running it
produces two artifacts: a fixture with exactly the records a chain would
show (contract creations, token Transfers, PairCreated/Mint/Burn/Swap), and
a per-actor value ledger that detectors are checked against.

Each step is one transaction. Execution is deterministic: addresses and
transaction hashes are derived from names and counters, never from RNG.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Union

from . import abi
from .amm import EMPTY_POOL, AmmError, DEFAULT_FEE_BPS, PoolState, add_liquidity, remove_liquidity, swap_exact_in
from .core import (
    Address,
    BURN_TOPIC,
    BlockRef,
    ContractCreation,
    LogRecord,
    MINT_TOPIC,
    PAIR_CREATED_TOPIC,
    SWAP_TOPIC,
    TRANSFER_TOPIC,
    TokenMetadata,
    ZERO_ADDRESS,
)
from .fixtures import ChainProfile, FixtureFile, Record, with_block_range
from .tokens import BEP20, synthetic_bytecode

NATIVE = "native"

GAS_PRICE_DEFAULT = 5 * 10**9
GAS_DEFAULTS = {
    "create_token": 1_200_000,
    "create_pool": 2_300_000,
    "add_liquidity": 190_000,
    "swap": 120_000,
    "remove_liquidity": 160_000,
}


class ScenarioError(ValueError):
    """A scenario references something unknown or fails a step precondition."""


# All simulated contracts expose the full interface, LP pools included.
_FULL_BYTECODE = synthetic_bytecode(
    sorted(BEP20.mandatory_selectors | BEP20.optional_selectors, key=lambda s: s.raw)
)


def derived_address(namespace: str, name: str) -> Address:
    digest = hashlib.sha256(f"chainsleuth/{namespace}:{name}".encode("utf-8")).digest()
    return Address(digest[:20])


def actor_address(name: str) -> Address:
    return derived_address("actor", name)


def token_address(token_id: str) -> Address:
    return derived_address("token", token_id)


def pool_address(pool_id: str) -> Address:
    return derived_address("pool", pool_id)


def factory_address(factory_id: str) -> Address:
    return derived_address("factory", factory_id)


@dataclass(frozen=True)
class CreateToken:
    actor: str
    token: str
    supply: int
    name: str | None = None
    symbol: str | None = None
    decimals: int = 18
    via_internal: bool = False
    gas_used: int = GAS_DEFAULTS["create_token"]
    gas_price: int = GAS_PRICE_DEFAULT


@dataclass(frozen=True)
class CreatePool:
    actor: str
    pool: str
    token_a: str
    token_b: str
    fee_bps: int = DEFAULT_FEE_BPS
    lock_minimum_liquidity: bool = False
    factory: str = "factory0"
    gas_used: int = GAS_DEFAULTS["create_pool"]
    gas_price: int = GAS_PRICE_DEFAULT


@dataclass(frozen=True)
class AddLiquidity:
    actor: str
    pool: str
    amount_a: int
    amount_b: int
    gas_used: int = GAS_DEFAULTS["add_liquidity"]
    gas_price: int = GAS_PRICE_DEFAULT


@dataclass(frozen=True)
class Swap:
    actor: str
    pool: str
    token_in: str
    amount_in: int
    gas_used: int = GAS_DEFAULTS["swap"]
    gas_price: int = GAS_PRICE_DEFAULT


@dataclass(frozen=True)
class RemoveLiquidity:
    actor: str
    pool: str
    lp_amount: int | str = "all"
    gas_used: int = GAS_DEFAULTS["remove_liquidity"]
    gas_price: int = GAS_PRICE_DEFAULT


@dataclass(frozen=True)
class AdvanceBlocks:
    blocks: int


Step = Union[CreateToken, CreatePool, AddLiquidity, Swap, RemoveLiquidity, AdvanceBlocks]

_STEP_OPS = {
    CreateToken: "create_token",
    CreatePool: "create_pool",
    AddLiquidity: "add_liquidity",
    Swap: "swap",
    RemoveLiquidity: "remove_liquidity",
    AdvanceBlocks: "advance_blocks",
}
_OP_STEPS = {v: k for k, v in _STEP_OPS.items()}
_BIG_FIELDS = {"supply", "amount_a", "amount_b", "amount_in", "lp_amount"}


@dataclass
class Scenario:
    """A named script: chain profile, actor names, ordered steps."""

    name: str
    profile: ChainProfile
    actors: list[str]
    steps: list[Step] = field(default_factory=list)


@dataclass
class Ledger:
    """Ground-truth value flows: who moved what through each pool.

    ``flows[(pool, actor)]`` is [in0, out0, in1, out1] in base units of the
    pool's token0/token1; ``gas_fees[actor]`` is cumulative wei spent on gas.
    """

    pool_tokens: dict[Address, tuple[Address, Address]] = field(default_factory=dict)
    flows: dict[tuple[Address, Address], list[int]] = field(default_factory=dict)
    gas_fees: dict[Address, int] = field(default_factory=dict)
    _pool_net: dict[Address, list[int]] = field(default_factory=dict)

    def add_flow(self, pool: Address, actor: Address, side: int,
                 paid_in: int = 0, received: int = 0) -> None:
        f = self.flows.setdefault((pool, actor), [0, 0, 0, 0])
        f[2 * side] += paid_in
        f[2 * side + 1] += received
        net = self._pool_net.setdefault(pool, [0, 0])
        net[side] += paid_in - received

    def pool_net(self, pool: Address, side: int) -> int:
        """Running sum over actors of (paid in - received) for one side."""
        net = self._pool_net.get(pool)
        return net[side] if net else 0

    def paid_in(self, pool: Address, actor: Address, side: int) -> int:
        f = self.flows.get((pool, actor))
        return f[2 * side] if f else 0

    def received(self, pool: Address, actor: Address, side: int) -> int:
        f = self.flows.get((pool, actor))
        return f[2 * side + 1] if f else 0

    def net_received(self, pool: Address, actor: Address, side: int) -> int:
        """Amount of token ``side`` the actor took out minus what they put in."""
        return self.received(pool, actor, side) - self.paid_in(pool, actor, side)

    def gas(self, actor: Address) -> int:
        return self.gas_fees.get(actor, 0)

    def pool_reserve_from_flows(self, pool: Address, side: int) -> int:
        total = 0
        for (p, _actor), f in self.flows.items():
            if p == pool:
                total += f[2 * side] - f[2 * side + 1]
        return total

    def actors_of(self, pool: Address) -> list[Address]:
        return sorted({a for (p, a) in self.flows if p == pool})

    def side_of(self, pool: Address, token: Address) -> int:
        t0, t1 = self.pool_tokens[pool]
        if token == t0:
            return 0
        if token == t1:
            return 1
        raise KeyError(f"{token} is not a side of pool {pool}")

    def to_dict(self) -> dict:
        return {
            "pools": {
                p.hex: {"token0": t0.hex, "token1": t1.hex}
                for p, (t0, t1) in sorted(self.pool_tokens.items())
            },
            "flows": [
                {
                    "pool": p.hex, "actor": a.hex,
                    "in0": str(f[0]), "out0": str(f[1]),
                    "in1": str(f[2]), "out1": str(f[3]),
                }
                for (p, a), f in sorted(self.flows.items())
            ],
            "gas_fees": {a.hex: str(v) for a, v in sorted(self.gas_fees.items())},
        }


@dataclass
class _TokenSim:
    address: Address
    decimals: int
    balances: dict[Address, int] = field(default_factory=dict)


@dataclass
class _PoolSim:
    address: Address
    token0: str
    token1: str
    a_is_token0: bool
    state: PoolState
    lock_minimum_liquidity: bool
    lp_balances: dict[Address, int] = field(default_factory=dict)


class _Runner:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.profile = scenario.profile
        self.block = scenario.profile.start_block
        self.index = 0
        self.tx_counter = 0
        self.pool_counter = 0
        self.actors = {name: actor_address(name) for name in scenario.actors}
        self.tokens: dict[str, _TokenSim] = {}
        self.pools: dict[str, _PoolSim] = {}
        self.records: list[Record] = []
        self.ledger = Ledger()

    # -- helpers -----------------------------------------------------------

    def _actor(self, name: str, step_no: int) -> Address:
        try:
            return self.actors[name]
        except KeyError:
            raise ScenarioError(f"step {step_no}: unknown actor {name!r}") from None

    def _token_addr(self, token_id: str, step_no: int) -> Address:
        if token_id == NATIVE:
            wnt = self.profile.wrapped_native_token
            if wnt is None:
                raise ScenarioError(
                    f"step {step_no}: profile has no wrapped native token"
                )
            return wnt
        try:
            return self.tokens[token_id].address
        except KeyError:
            raise ScenarioError(f"step {step_no}: unknown token {token_id!r}") from None

    def _block_ref(self) -> BlockRef:
        return BlockRef(self.block, self.profile.timestamp_at(self.block))

    def _next_tx(self, actor: Address, gas_used: int, gas_price: int) -> bytes:
        self.tx_counter += 1
        self.ledger.gas_fees[actor] = self.ledger.gas(actor) + gas_used * gas_price
        return hashlib.sha256(f"chainsleuth/tx:{self.tx_counter}".encode()).digest()

    def _emit_log(self, emitter: Address, tx_hash: bytes, tx_sender: Address,
                  topic0, indexed: tuple[bytes, ...], data: bytes,
                  gas_used: int, gas_price: int) -> None:
        self.records.append(LogRecord(
            emitter=emitter, block=self._block_ref(), log_index=self.index,
            tx_hash=tx_hash, tx_sender=tx_sender, topic0=topic0,
            indexed_topics=indexed, data=data,
            gas_used=gas_used, gas_price=gas_price,
        ))
        self.index += 1

    def _emit_transfer(self, token: Address, src: Address, dst: Address, value: int,
                       tx_hash: bytes, sender: Address, gas_used: int, gas_price: int) -> None:
        self._emit_log(
            token, tx_hash, sender, TRANSFER_TOPIC,
            (abi.encode_address(src), abi.encode_address(dst)),
            abi.encode_u256(value), gas_used, gas_price,
        )

    def _debit(self, token_id: str, holder: Address, amount: int, step_no: int) -> None:
        if token_id == NATIVE:
            return
        tok = self.tokens[token_id]
        have = tok.balances.get(holder, 0)
        if have < amount:
            raise ScenarioError(
                f"step {step_no}: {holder} holds {have} of {token_id!r}, needs {amount}"
            )
        tok.balances[holder] = have - amount

    def _credit(self, token_id: str, holder: Address, amount: int) -> None:
        if token_id == NATIVE:
            return
        tok = self.tokens[token_id]
        tok.balances[holder] = tok.balances.get(holder, 0) + amount

    def _check_conservation(self, pool: _PoolSim) -> None:
        for side in (0, 1):
            from_flows = self.ledger.pool_net(pool.address, side)
            reserve = pool.state.reserve0 if side == 0 else pool.state.reserve1
            if from_flows != reserve:
                raise AssertionError(
                    f"ledger conservation broken for {pool.address} side {side}: "
                    f"flows say {from_flows}, reserve is {reserve}"
                )

    # -- steps -------------------------------------------------------------

    def run(self) -> tuple[FixtureFile, Ledger]:
        for step_no, step in enumerate(self.scenario.steps):
            try:
                self._run_step(step, step_no)
            except AmmError as exc:
                raise ScenarioError(f"step {step_no}: {exc}") from exc
        profile = with_block_range(
            self.profile, self.scenario.profile.start_block, self.block
        )
        return FixtureFile(profile, self.records), self.ledger

    def _run_step(self, step: Step, step_no: int) -> None:
        if isinstance(step, AdvanceBlocks):
            if step.blocks < 1:
                raise ScenarioError(f"step {step_no}: must advance at least 1 block")
            self.block += step.blocks
            self.index = 0
            return
        if isinstance(step, CreateToken):
            self._create_token(step, step_no)
        elif isinstance(step, CreatePool):
            self._create_pool(step, step_no)
        elif isinstance(step, AddLiquidity):
            self._add_liquidity(step, step_no)
        elif isinstance(step, Swap):
            self._swap(step, step_no)
        elif isinstance(step, RemoveLiquidity):
            self._remove_liquidity(step, step_no)
        else:
            raise ScenarioError(f"step {step_no}: unknown step type {type(step).__name__}")

    def _create_token(self, step: CreateToken, step_no: int) -> None:
        if step.token in self.tokens or step.token == NATIVE:
            raise ScenarioError(f"step {step_no}: token {step.token!r} already exists")
        if step.supply <= 0:
            raise ScenarioError(f"step {step_no}: token supply must be positive")
        actor = self._actor(step.actor, step_no)
        addr = token_address(step.token)
        tx = self._next_tx(actor, step.gas_used, step.gas_price)
        self.records.append(ContractCreation(
            contract=addr, deployer=actor, block=self._block_ref(),
            via_internal=step.via_internal,
            bytecode=_FULL_BYTECODE,
            gas_used=step.gas_used, gas_price=step.gas_price,
            tx_hash=tx, log_index=self.index,
            metadata=TokenMetadata(name=step.name, symbol=step.symbol,
                                   decimals=step.decimals, total_supply=step.supply),
        ))
        self.index += 1
        self._emit_transfer(addr, ZERO_ADDRESS, actor, step.supply,
                            tx, actor, step.gas_used, step.gas_price)
        self.tokens[step.token] = _TokenSim(addr, step.decimals, {actor: step.supply})

    def _create_pool(self, step: CreatePool, step_no: int) -> None:
        if step.pool in self.pools:
            raise ScenarioError(f"step {step_no}: pool {step.pool!r} already exists")
        actor = self._actor(step.actor, step_no)
        addr_a = self._token_addr(step.token_a, step_no)
        addr_b = self._token_addr(step.token_b, step_no)
        if addr_a == addr_b:
            raise ScenarioError(f"step {step_no}: pool sides must differ")
        # Pools order their pair by address, like the factory does.
        a_is_token0 = addr_a < addr_b
        if a_is_token0:
            token0, token1 = step.token_a, step.token_b
        else:
            token0, token1 = step.token_b, step.token_a
        pool_addr = pool_address(step.pool)
        factory = factory_address(step.factory)
        tx = self._next_tx(actor, step.gas_used, step.gas_price)
        self.records.append(ContractCreation(
            contract=pool_addr, deployer=actor, block=self._block_ref(),
            via_internal=True,
            bytecode=_FULL_BYTECODE,
            gas_used=step.gas_used, gas_price=step.gas_price,
            tx_hash=tx, log_index=self.index,
            metadata=TokenMetadata(name=f"LP {step.pool}", symbol="LP", decimals=18),
        ))
        self.index += 1
        self.pool_counter += 1
        self._emit_log(
            factory, tx, actor, PAIR_CREATED_TOPIC,
            (abi.encode_address(self._token_addr(token0, step_no)),
             abi.encode_address(self._token_addr(token1, step_no))),
            abi.encode_address(pool_addr) + abi.encode_u256(self.pool_counter),
            step.gas_used, step.gas_price,
        )
        self.pools[step.pool] = _PoolSim(
            address=pool_addr, token0=token0, token1=token1,
            a_is_token0=a_is_token0,
            state=replace(EMPTY_POOL, fee_bps=step.fee_bps),
            lock_minimum_liquidity=step.lock_minimum_liquidity,
        )
        self.ledger.pool_tokens[pool_addr] = (
            self._token_addr(token0, step_no), self._token_addr(token1, step_no)
        )

    def _pool(self, pool_id: str, step_no: int) -> _PoolSim:
        try:
            return self.pools[pool_id]
        except KeyError:
            raise ScenarioError(f"step {step_no}: unknown pool {pool_id!r}") from None

    def _oriented_amounts(self, pool: _PoolSim, step: AddLiquidity) -> tuple[int, int]:
        # Step amounts are in (token_a, token_b) order of the create_pool step;
        # orient them to the pool's sorted (token0, token1).
        if pool.a_is_token0:
            return step.amount_a, step.amount_b
        return step.amount_b, step.amount_a

    def _add_liquidity(self, step: AddLiquidity, step_no: int) -> None:
        pool = self._pool(step.pool, step_no)
        actor = self._actor(step.actor, step_no)
        amount0, amount1 = self._oriented_amounts(pool, step)
        first = pool.state.lp_total_supply == 0
        minted, new_state = add_liquidity(
            pool.state, amount0, amount1,
            lock_minimum_liquidity=pool.lock_minimum_liquidity and first,
        )
        self._debit(pool.token0, actor, amount0, step_no)
        self._debit(pool.token1, actor, amount1, step_no)
        pool.state = new_state
        pool.lp_balances[actor] = pool.lp_balances.get(actor, 0) + minted

        tx = self._next_tx(actor, step.gas_used, step.gas_price)
        t0 = self._token_addr(pool.token0, step_no)
        t1 = self._token_addr(pool.token1, step_no)
        self._emit_transfer(t0, actor, pool.address, amount0, tx, actor,
                            step.gas_used, step.gas_price)
        self._emit_transfer(t1, actor, pool.address, amount1, tx, actor,
                            step.gas_used, step.gas_price)
        if pool.lock_minimum_liquidity and first:
            locked = new_state.lp_total_supply - minted
            self._emit_transfer(pool.address, ZERO_ADDRESS, ZERO_ADDRESS, locked,
                                tx, actor, step.gas_used, step.gas_price)
        self._emit_transfer(pool.address, ZERO_ADDRESS, actor, minted, tx, actor,
                            step.gas_used, step.gas_price)
        self._emit_log(
            pool.address, tx, actor, MINT_TOPIC,
            (abi.encode_address(actor),),
            abi.encode_u256(amount0) + abi.encode_u256(amount1),
            step.gas_used, step.gas_price,
        )
        self.ledger.add_flow(pool.address, actor, 0, paid_in=amount0)
        self.ledger.add_flow(pool.address, actor, 1, paid_in=amount1)
        self._check_conservation(pool)

    def _swap(self, step: Swap, step_no: int) -> None:
        pool = self._pool(step.pool, step_no)
        actor = self._actor(step.actor, step_no)
        token_in = step.token_in
        if token_in not in (pool.token0, pool.token1):
            raise ScenarioError(
                f"step {step_no}: token {token_in!r} is not a side of pool {step.pool!r}"
            )
        side = 0 if token_in == pool.token0 else 1
        amount_out, new_state = swap_exact_in(pool.state, step.amount_in, side)
        token_out = pool.token1 if side == 0 else pool.token0
        self._debit(token_in, actor, step.amount_in, step_no)
        self._credit(token_out, actor, amount_out)
        pool.state = new_state

        tx = self._next_tx(actor, step.gas_used, step.gas_price)
        self._emit_transfer(self._token_addr(token_in, step_no), actor, pool.address,
                            step.amount_in, tx, actor, step.gas_used, step.gas_price)
        self._emit_transfer(self._token_addr(token_out, step_no), pool.address, actor,
                            amount_out, tx, actor, step.gas_used, step.gas_price)
        in0, in1 = (step.amount_in, 0) if side == 0 else (0, step.amount_in)
        out0, out1 = (0, amount_out) if side == 0 else (amount_out, 0)
        self._emit_log(
            pool.address, tx, actor, SWAP_TOPIC,
            (abi.encode_address(actor), abi.encode_address(actor)),
            abi.encode_u256(in0) + abi.encode_u256(in1)
            + abi.encode_u256(out0) + abi.encode_u256(out1),
            step.gas_used, step.gas_price,
        )
        self.ledger.add_flow(pool.address, actor, side, paid_in=step.amount_in)
        self.ledger.add_flow(pool.address, actor, 1 - side, received=amount_out)
        self._check_conservation(pool)

    def _remove_liquidity(self, step: RemoveLiquidity, step_no: int) -> None:
        pool = self._pool(step.pool, step_no)
        actor = self._actor(step.actor, step_no)
        held = pool.lp_balances.get(actor, 0)
        lp = held if step.lp_amount == "all" else int(step.lp_amount)
        if lp <= 0:
            raise ScenarioError(f"step {step_no}: nothing to burn")
        if lp > held:
            raise ScenarioError(
                f"step {step_no}: {actor} holds {held} LP of {step.pool!r}, "
                f"cannot burn {lp}"
            )
        amount0, amount1, new_state = remove_liquidity(pool.state, lp)
        pool.lp_balances[actor] = held - lp
        self._credit(pool.token0, actor, amount0)
        self._credit(pool.token1, actor, amount1)
        pool.state = new_state

        tx = self._next_tx(actor, step.gas_used, step.gas_price)
        self._emit_transfer(pool.address, actor, ZERO_ADDRESS, lp, tx, actor,
                            step.gas_used, step.gas_price)
        t0 = self._token_addr(pool.token0, step_no)
        t1 = self._token_addr(pool.token1, step_no)
        self._emit_transfer(t0, pool.address, actor, amount0, tx, actor,
                            step.gas_used, step.gas_price)
        self._emit_transfer(t1, pool.address, actor, amount1, tx, actor,
                            step.gas_used, step.gas_price)
        self._emit_log(
            pool.address, tx, actor, BURN_TOPIC,
            (abi.encode_address(actor), abi.encode_address(actor)),
            abi.encode_u256(amount0) + abi.encode_u256(amount1),
            step.gas_used, step.gas_price,
        )
        self.ledger.add_flow(pool.address, actor, 0, received=amount0)
        self.ledger.add_flow(pool.address, actor, 1, received=amount1)
        self._check_conservation(pool)


def run_scenario(scenario: Scenario) -> tuple[FixtureFile, Ledger]:
    """Execute a scenario; returns (fixture, ledger). Deterministic."""
    return _Runner(scenario).run()


# -- scenario file round-trip ----------------------------------------------


def step_to_dict(step: Step) -> dict:
    d = {"kind": "step", "op": _STEP_OPS[type(step)]}
    for f in type(step).__dataclass_fields__:
        v = getattr(step, f)
        if f in _BIG_FIELDS and isinstance(v, int):
            v = str(v)
        d[f] = v
    return d


def step_from_dict(d: dict) -> Step:
    op = d.get("op")
    cls = _OP_STEPS.get(op)
    if cls is None:
        raise ScenarioError(f"unknown step op {op!r}")
    kwargs = {}
    for f in cls.__dataclass_fields__:
        if f in d:
            v = d[f]
            if f in _BIG_FIELDS and isinstance(v, str) and v != "all":
                v = int(v)
            kwargs[f] = v
    return cls(**kwargs)


def write_scenario(path: str | Path, scenario: Scenario) -> None:
    from .fixtures import profile_to_dict

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = {
            "kind": "scenario",
            "name": scenario.name,
            "profile": profile_to_dict(scenario.profile),
            "actors": scenario.actors,
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for step in scenario.steps:
            fh.write(json.dumps(step_to_dict(step), ensure_ascii=False) + "\n")


def read_scenario(path: str | Path) -> Scenario:
    from .fixtures import profile_from_dict

    with open(path, "r", encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: invalid scenario header: {exc}") from exc
        if header.get("kind") != "scenario":
            raise ScenarioError(f"{path}: first line must be the scenario header")
        steps = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                steps.append(step_from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError, ScenarioError) as exc:
                raise ScenarioError(f"{path}: line {lineno}: {exc}") from exc
        return Scenario(
            name=header.get("name", "scenario"),
            profile=profile_from_dict(header["profile"]),
            actors=list(header.get("actors", [])),
            steps=steps,
        )
