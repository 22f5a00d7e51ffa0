"""Ready-made and seeded random scenarios for exercising the detectors.

The exit-scam case study is reproduced exactly: a throwaway token paired
with the wrapped native coin, 20 B of liquidity, 13 buys totaling 2.67 B,
and a full burn about two hours later. The random generators script valid
operator behavior (none / pump / hedge / wash trading) while mirroring pool
state with the same integer arithmetic, so every generated swap is legal.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .amm import AmmError, PoolState, add_liquidity, swap_exact_in
from .fixtures import BSC_PROFILE, ChainProfile
from .simulator import (
    AddLiquidity,
    AdvanceBlocks,
    CreatePool,
    CreateToken,
    RemoveLiquidity,
    Scenario,
    Swap,
)

CASE_STUDY_START_BLOCK = 8_090_747
CASE_STUDY_START_TS = 1_623_073_234  # 2021-06-07 13:40:34 UTC
CASE_STUDY_LIQUIDITY_B = 20 * 10**18
CASE_STUDY_LIQUIDITY_TOKEN = 44 * 10**30  # 44 trillion tokens at 18 decimals
CASE_STUDY_TOTAL_BUYS_B = 267 * 10**16  # 2.67 B across 13 buys


def onlyfans_scenario() -> Scenario:
    """The case-study exit scam: one operator, 13 buyers, full burn at ~2 h."""
    victims = [f"victim{i}" for i in range(1, 14)]
    # First buy is 0.002 B; the remaining 12 sum to 2.668 B exactly.
    buys = [2 * 10**15] + [2 * 10**17] * 8 + [267 * 10**15] * 4
    assert sum(buys) == CASE_STUDY_TOTAL_BUYS_B and len(buys) == 13

    steps: list = [
        CreateToken(actor="eve", token="tau", supply=10**32,
                    name="OnlyFans", symbol="\U0001F48BOnlyFans", decimals=18),
        AdvanceBlocks(blocks=4),
        CreatePool(actor="eve", pool="pool", token_a="tau", token_b="native"),
        AddLiquidity(actor="eve", pool="pool",
                     amount_a=CASE_STUDY_LIQUIDITY_TOKEN,
                     amount_b=CASE_STUDY_LIQUIDITY_B),
        AdvanceBlocks(blocks=2),
    ]
    block = CASE_STUDY_START_BLOCK + 6
    for victim, amount in zip(victims, buys):
        steps.append(Swap(actor=victim, pool="pool", token_in="native",
                          amount_in=amount))
        steps.append(AdvanceBlocks(blocks=1))
        block += 1
    burn_block = CASE_STUDY_START_BLOCK + 2_354
    steps.append(AdvanceBlocks(blocks=burn_block - block))
    steps.append(RemoveLiquidity(actor="eve", pool="pool", lp_amount="all"))

    profile = replace(BSC_PROFILE, start_block=CASE_STUDY_START_BLOCK,
                      start_timestamp=CASE_STUDY_START_TS)
    return Scenario(name="onlyfans", profile=profile,
                    actors=["eve"] + victims, steps=steps)


MANIPULATIONS = ("none", "pump", "hedge", "wash_trading")


@dataclass
class RugPullScript:
    """A generated scenario plus the labels the detectors must recover."""

    scenario: Scenario
    operator: str
    pool: str
    token: str
    manipulation: str
    victim_buys: int = 0
    victim_sells: int = 0


@dataclass
class _PoolMirror:
    """Tracks pool state and balances while generating, using the real math."""

    state: PoolState
    token_is_0: bool
    holdings: dict[str, int] = field(default_factory=dict)  # scam-token balances

    def quote_reserve(self) -> int:
        return self.state.reserve1 if self.token_is_0 else self.state.reserve0

    def token_reserve(self) -> int:
        return self.state.reserve0 if self.token_is_0 else self.state.reserve1

    def buy(self, actor: str, quote_in: int) -> int:
        side = 1 if self.token_is_0 else 0
        out, self.state = swap_exact_in(self.state, quote_in, side)
        self.holdings[actor] = self.holdings.get(actor, 0) + out
        return out

    def sell(self, actor: str, token_in: int) -> int:
        side = 0 if self.token_is_0 else 1
        out, self.state = swap_exact_in(self.state, token_in, side)
        self.holdings[actor] = self.holdings.get(actor, 0) - token_in
        return out


def random_rugpull_script(
    seed: int,
    *,
    max_victims: int = 50,
    profile: ChainProfile | None = None,
) -> RugPullScript:
    """One seeded exit-scam scenario with a random manipulation style.

    The operator creates a token and pool, adds liquidity once, optionally
    manipulates with own swaps, and finally burns all LP tokens.
    """
    rng = random.Random(seed)
    manipulation = rng.choice(MANIPULATIONS)
    n_victims = rng.randint(0, max_victims)
    base = profile or BSC_PROFILE
    prof = replace(base, start_block=rng.randrange(1_000, 10_000_000),
                   start_timestamp=1_600_000_000 + rng.randrange(0, 50_000_000))

    fee_bps = rng.choice((0, 5, 30, 100))
    gas_price = rng.choice((3, 5, 7, 10)) * 10**9
    quote_liq = rng.randrange(10**18, 100 * 10**18)
    token_liq = rng.randrange(10**21, 10**30)
    retained = rng.randrange(token_liq // 2, 4 * token_liq)
    supply = token_liq + retained

    op = "eve"
    victims = [f"v{i}" for i in range(n_victims)]
    token_id, pool_id = "scam", "pool"
    steps: list = [
        CreateToken(actor=op, token=token_id, supply=supply,
                    name=f"Scam {seed}", symbol="SCAM",
                    via_internal=rng.random() < 0.3, gas_price=gas_price),
        AdvanceBlocks(blocks=rng.randint(1, 20)),
        CreatePool(actor=op, pool=pool_id, token_a=token_id, token_b="native",
                   fee_bps=fee_bps,
                   lock_minimum_liquidity=rng.random() < 0.25,
                   gas_price=gas_price),
        AddLiquidity(actor=op, pool=pool_id, amount_a=token_liq,
                     amount_b=quote_liq, gas_price=gas_price),
    ]

    token_addr_is_0 = _token_sorts_first(token_id, prof)
    mirror = _PoolMirror(
        state=PoolState(
            reserve0=token_liq if token_addr_is_0 else quote_liq,
            reserve1=quote_liq if token_addr_is_0 else token_liq,
            lp_total_supply=1,  # only reserves matter for swap mirroring
            fee_bps=fee_bps,
        ),
        token_is_0=token_addr_is_0,
        holdings={op: retained},
    )

    # Interleave victim trades with operator manipulation swaps.
    op_buys = rng.randint(1, 5) if manipulation in ("pump", "wash_trading") else 0
    op_sells = rng.randint(1, 5) if manipulation in ("hedge", "wash_trading") else 0
    actions: list[tuple[str, str]] = []
    actions += [("victim_buy", v) for v in victims]
    actions += [("op_buy", op)] * op_buys + [("op_sell", op)] * op_sells
    rng.shuffle(actions)

    for kind, actor in actions:
        if rng.random() < 0.7:
            steps.append(AdvanceBlocks(blocks=rng.randint(1, 30)))
        if kind == "op_sell":
            held = mirror.holdings.get(op, 0)
            amount = max(1, held * rng.randint(1, 25) // 100)
            try:
                mirror.sell(op, amount)
            except AmmError:
                continue
            steps.append(Swap(actor=op, pool=pool_id, token_in=token_id,
                              amount_in=amount, gas_price=gas_price))
            continue
        quote_in = max(1, mirror.quote_reserve() * rng.randint(1, 8) // 100)
        try:
            mirror.buy(actor, quote_in)
        except AmmError:
            continue
        steps.append(Swap(actor=actor, pool=pool_id, token_in="native",
                          amount_in=quote_in, gas_price=gas_price))
        if kind == "victim_buy" and rng.random() < 0.35:
            # Victim later dumps part of the position.
            part = max(1, mirror.holdings[actor] * rng.randint(10, 90) // 100)
            try:
                mirror.sell(actor, part)
            except AmmError:
                continue
            steps.append(Swap(actor=actor, pool=pool_id, token_in=token_id,
                              amount_in=part, gas_price=gas_price))

    steps.append(AdvanceBlocks(blocks=rng.randint(1, 25_000)))
    steps.append(RemoveLiquidity(actor=op, pool=pool_id, lp_amount="all",
                                 gas_price=gas_price))

    # Derive labels from what was actually emitted, in case a generated
    # swap was skipped as dust.
    op_bought = any(isinstance(s, Swap) and s.actor == op and s.token_in == "native"
                    for s in steps)
    op_sold = any(isinstance(s, Swap) and s.actor == op and s.token_in == token_id
                  for s in steps)
    if op_bought and op_sold:
        manipulation = "wash_trading"
    elif op_bought:
        manipulation = "pump"
    elif op_sold:
        manipulation = "hedge"
    else:
        manipulation = "none"
    buys = sum(1 for s in steps
               if isinstance(s, Swap) and s.actor != op and s.token_in == "native")
    sells = sum(1 for s in steps
                if isinstance(s, Swap) and s.actor != op and s.token_in == token_id)

    scenario = Scenario(name=f"rugpull-{seed}", profile=prof,
                        actors=[op] + victims, steps=steps)
    return RugPullScript(scenario=scenario, operator=op, pool=pool_id,
                         token=token_id, manipulation=manipulation,
                         victim_buys=buys, victim_sells=sells)


def _token_sorts_first(token_id: str, profile: ChainProfile) -> bool:
    from .simulator import token_address

    return token_address(token_id) < profile.wrapped_native_token


def detector_population(
    seed: int,
    n_rug: int = 300,
    n_legit: int = 200,
) -> tuple[Scenario, set[str], set[str]]:
    """One scenario holding a labeled mix of exit scams and legitimate pools.

    Legitimate pools either mint liquidity more than once, burn only part of
    their LP, or never burn at all. Returns (scenario, rug_ids, legit_ids)
    where ids name the pools.
    """
    rng = random.Random(seed)
    prof = replace(BSC_PROFILE, start_block=1_000, start_timestamp=1_650_000_000)
    steps: list = []
    actors = ["op", "alice", "bob", "carol"]
    rug_ids: set[str] = set()
    legit_ids: set[str] = set()

    kinds = ["rug"] * n_rug + ["legit"] * n_legit
    rng.shuffle(kinds)
    for i, kind in enumerate(kinds):
        tok, pool = f"tok{i}", f"pool{i}"
        quote = rng.randrange(10**18, 20 * 10**18)
        tliq = rng.randrange(10**22, 10**27)
        steps.append(CreateToken(actor="op", token=tok, supply=4 * tliq))
        steps.append(CreatePool(actor="op", pool=pool, token_a=tok, token_b="native",
                                fee_bps=30))
        steps.append(AddLiquidity(actor="op", pool=pool, amount_a=tliq, amount_b=quote))
        steps.append(AdvanceBlocks(blocks=rng.randint(1, 10)))
        variant = rng.randrange(3)
        if kind == "legit" and variant == 0:
            # Second provision before any swap moves the ratio: two Mints.
            steps.append(AddLiquidity(actor="op", pool=pool,
                                      amount_a=tliq, amount_b=quote))
            steps.append(AdvanceBlocks(blocks=rng.randint(1, 20)))
        buyer = rng.choice(actors[1:])
        steps.append(Swap(actor=buyer, pool=pool, token_in="native",
                          amount_in=max(1, quote // rng.randint(20, 100))))
        steps.append(AdvanceBlocks(blocks=rng.randint(1, 50)))
        if kind == "rug":
            steps.append(RemoveLiquidity(actor="op", pool=pool, lp_amount="all"))
            rug_ids.add(pool)
        else:
            legit_ids.add(pool)
            if variant == 0:
                steps.append(RemoveLiquidity(actor="op", pool=pool, lp_amount="all"))
            elif variant == 1:
                # Partial burn, below any sane exit-scam threshold.
                steps.append(_partial_burn(pool, tliq, quote,
                                           fraction_pct=rng.randint(20, 90)))
            # variant 2: liquidity stays; no Burn at all.
        steps.append(AdvanceBlocks(blocks=rng.randint(1, 10)))

    scenario = Scenario(name=f"population-{seed}", profile=prof,
                        actors=actors, steps=steps)
    return scenario, rug_ids, legit_ids


def _partial_burn(pool: str, tliq: int, quote: int, fraction_pct: int) -> RemoveLiquidity:
    from math import isqrt

    lp_minted = isqrt(tliq * quote)
    return RemoveLiquidity(pool=pool, actor="op",
                           lp_amount=lp_minted * fraction_pct // 100)


def sniper_population(
    seed: int,
    n_pools: int = 120,
    n_normal_traders: int = 10,
) -> tuple[Scenario, str]:
    """Pools that are all sniped at listing by one bot actor.

    The bot's swap lands in the same block as the first liquidity provision,
    after it; normal traders come blocks later. Returns (scenario, bot_name).
    """
    rng = random.Random(seed)
    prof = replace(BSC_PROFILE, start_block=5_000, start_timestamp=1_640_000_000)
    bot = "sniperbot"
    normals = [f"trader{i}" for i in range(n_normal_traders)]
    steps: list = []
    for i in range(n_pools):
        tok, pool = f"tok{i}", f"pool{i}"
        quote = rng.randrange(2 * 10**18, 10 * 10**18)
        tliq = rng.randrange(10**22, 10**26)
        steps.append(CreateToken(actor="op", token=tok, supply=2 * tliq))
        steps.append(AdvanceBlocks(blocks=rng.randint(1, 5)))
        steps.append(CreatePool(actor="op", pool=pool, token_a=tok, token_b="native"))
        steps.append(AddLiquidity(actor="op", pool=pool, amount_a=tliq, amount_b=quote))
        steps.append(Swap(actor=bot, pool=pool, token_in="native",
                          amount_in=max(1, quote // 50)))
        steps.append(AdvanceBlocks(blocks=rng.randint(6, 30)))
        steps.append(Swap(actor=rng.choice(normals), pool=pool, token_in="native",
                          amount_in=max(1, quote // 80)))
        steps.append(AdvanceBlocks(blocks=rng.randint(1, 10)))
        steps.append(RemoveLiquidity(actor="op", pool=pool, lp_amount="all"))
        steps.append(AdvanceBlocks(blocks=1))

    scenario = Scenario(name=f"snipers-{seed}", profile=prof,
                        actors=["op", bot] + normals, steps=steps)
    return scenario, bot


def bulk_scenario(seed: int, n_pools: int, swaps_per_pool: int) -> Scenario:
    """A large, regular scenario for throughput runs.

    Record count is (12 + 3 * swaps_per_pool) per pool: two creations plus
    token-mint Transfer and PairCreated, four logs for the provision, three
    per swap, four for the burn.
    """
    rng = random.Random(seed)
    prof = replace(BSC_PROFILE, start_block=0, start_timestamp=1_620_000_000)
    traders = [f"t{i}" for i in range(97)]
    steps: list = []
    for i in range(n_pools):
        tok, pool = f"tok{i}", f"pool{i}"
        quote = 10**19 + (i % 7) * 10**18
        tliq = 10**24 + (i % 13) * 10**21
        steps.append(CreateToken(actor="op", token=tok, supply=2 * tliq))
        steps.append(CreatePool(actor="op", pool=pool, token_a=tok, token_b="native"))
        steps.append(AddLiquidity(actor="op", pool=pool, amount_a=tliq, amount_b=quote))
        steps.append(AdvanceBlocks(blocks=1))
        for s in range(swaps_per_pool):
            trader = traders[(i + s) % len(traders)]
            steps.append(Swap(actor=trader, pool=pool, token_in="native",
                              amount_in=10**16 + (s % 11) * 10**15))
            if s % 3 == 2:
                steps.append(AdvanceBlocks(blocks=1))
        steps.append(RemoveLiquidity(actor="op", pool=pool, lp_amount="all"))
        steps.append(AdvanceBlocks(blocks=rng.randint(1, 3)))
    return Scenario(name=f"bulk-{seed}", profile=prof,
                    actors=["op"] + traders, steps=steps)
