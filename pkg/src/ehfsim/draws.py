"""Seeding, pot construction and every random draw of a replay.

Python-facing functions take and return plain tuples; each delegates to a
numba kernel that the replay loop calls directly, so both paths consume the
variate stream identically.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .rng import RngStream, next_below, next_double

GROUP_LABELS = "ABCD"

# Random-variant reranking score: SCORE_SPREAD * Rnd + (SCORE_BASE - rank).
SCORE_SPREAD = 44.0
SCORE_BASE = 28.0


class Seeding(str, enum.Enum):
    SEEDED = "seeded"
    RANDOM = "random"


class Identification(str, enum.Enum):
    CORRECT = "correct"
    ERRONEOUS = "erroneous"


@dataclass(frozen=True)
class SeedingPolicy:
    variant: Seeding = Seeding.SEEDED
    identification: Identification = Identification.CORRECT

    def __post_init__(self):
        object.__setattr__(self, "variant", Seeding(self.variant))
        object.__setattr__(self, "identification", Identification(self.identification))

    @property
    def codes(self) -> tuple[int, int]:
        return (int(self.variant is Seeding.RANDOM), int(self.identification is Identification.ERRONEOUS))

    @property
    def tag(self) -> str:
        return "S" if self.variant is Seeding.SEEDED else "R"


# Feasible group pairings for the Round of 16 of D(4x6): row k maps the group
# of a group winner (runner-up) to the group of its fourth-placed (third-placed)
# opponent.  Column order follows the published table.
R16_MATCHINGS = np.array(
    [
        [1, 0, 3, 2],  # A-B B-A C-D D-C
        [1, 2, 3, 0],
        [1, 3, 0, 2],
        [2, 0, 3, 1],
        [2, 3, 0, 1],
        [2, 3, 1, 0],
        [3, 0, 1, 2],
        [3, 2, 0, 1],
        [3, 2, 1, 0],
    ],
    dtype=np.int64,
)


def feasible_r16_matchings() -> list[tuple[int, ...]]:
    """Group permutations without a same-group clash, by enumeration."""
    return [p for p in itertools.permutations(range(4)) if all(p[g] != g for g in range(4))]


# ---------------------------------------------------------------- kernels


@njit(cache=True)
def adjusted_rank(i, erroneous):
    if not erroneous:
        return i
    if i == 9:
        return 17
    if 10 <= i <= 17:
        return i - 1
    return i


@njit(cache=True)
def perceived_order_kernel(n, random_variant, erroneous, state, order):
    """Fill ``order`` with ranks, strongest-perceived first."""
    if not random_variant:
        for i in range(1, n + 1):
            order[adjusted_rank(i, erroneous) - 1] = i
        return
    score = np.empty(n)
    for i in range(1, n + 1):
        score[i - 1] = SCORE_SPREAD * next_double(state) + (SCORE_BASE - adjusted_rank(i, erroneous))
        order[i - 1] = i
    # insertion sort, descending score; equal scores keep ascending true rank
    for k in range(1, n):
        t = order[k]
        s = score[t - 1]
        m = k - 1
        while m >= 0 and score[order[m] - 1] < s:
            order[m + 1] = order[m]
            m -= 1
        order[m + 1] = t


@njit(cache=True)
def shuffle_kernel(values, count, state):
    """In-place Fisher-Yates over ``values[:count]``; ``count - 1`` variates."""
    for k in range(count - 1, 0, -1):
        m = next_below(state, k + 1)
        t = values[k]
        values[k] = values[m]
        values[m] = t


@njit(cache=True)
def draw_groups_kernel(order, pot_size, pot_groups, state, groups, group_len):
    n_pots = pot_groups.shape[0]
    targets = np.empty(pot_size, dtype=np.int64)
    group_len[:] = 0
    for p in range(n_pots):
        for m in range(pot_size):
            targets[m] = pot_groups[p, m]
        shuffle_kernel(targets, pot_size, state)
        for m in range(pot_size):
            g = targets[m]
            groups[g, group_len[g]] = order[p * pot_size + m]
            group_len[g] += 1


@njit(cache=True)
def r16_draw_kernel(standings, state, pairs):
    """Eight R16 ties: winners v fourths, then runners-up v thirds."""
    top = R16_MATCHINGS[next_below(state, R16_MATCHINGS.shape[0])]
    second = R16_MATCHINGS[next_below(state, R16_MATCHINGS.shape[0])]
    for g in range(4):
        pairs[g, 0] = standings[g, 0]
        pairs[g, 1] = standings[top[g], 3]
        pairs[4 + g, 0] = standings[g, 1]
        pairs[4 + g, 1] = standings[second[g], 2]


@njit(cache=True)
def qf_draw_kernel(pot1, pot2, state, pairs):
    perm = np.empty(4, dtype=np.int64)
    for k in range(4):
        perm[k] = pot2[k]
    shuffle_kernel(perm, 4, state)
    for k in range(4):
        pairs[k, 0] = pot1[k]
        pairs[k, 1] = perm[k]


@njit(cache=True)
def f4_draw_kernel(finalists, state, pairs):
    """One of the three ways to split four teams into two semifinals."""
    partner = 1 + next_below(state, 3)
    pairs[0, 0] = finalists[0]
    pairs[0, 1] = finalists[partner]
    k = 1
    for m in range(1, 4):
        if m != partner:
            pairs[1, k - 1] = finalists[m]
            k += 1


# ---------------------------------------------------------------- public API


def identification_adjusted_rank(i: int, identification: Identification | str) -> int:
    identification = Identification(identification)
    if not 1 <= i <= 28:
        raise ValueError(f"rank {i} outside 1..28")
    return int(adjusted_rank(i, identification is Identification.ERRONEOUS))


def perceived_ranking(teams: Sequence[int], policy: SeedingPolicy, rng: RngStream | None = None) -> tuple[int, ...]:
    n = len(teams)
    if sorted(teams) != list(range(1, n + 1)):
        raise ValueError("teams must be the ranks 1..n")
    random_variant, erroneous = policy.codes
    if random_variant and rng is None:
        raise ValueError("the random variant needs an RngStream")
    order = np.empty(n, dtype=np.int64)
    state = rng.state if rng is not None else np.zeros(8, dtype=np.uint64)
    perceived_order_kernel(n, random_variant, erroneous, state, order)
    return tuple(int(t) for t in order)


def assign_pots(ranking: Sequence[int], fmt) -> tuple[tuple[int, ...], ...]:
    if len(ranking) != fmt.n_teams:
        raise ValueError(f"{fmt.id} needs {fmt.n_teams} teams, ranking has {len(ranking)}")
    s = fmt.pot_size
    return tuple(tuple(ranking[k : k + s]) for k in range(0, fmt.n_teams, s))


def draw_groups(pots: Sequence[Sequence[int]], fmt, rng: RngStream) -> dict[str, tuple[int, ...]]:
    if len(pots) != fmt.n_pots or any(len(p) != fmt.pot_size for p in pots):
        raise ValueError(f"pot shape does not match {fmt.id}")
    order = np.array([t for pot in pots for t in pot], dtype=np.int64)
    groups = np.zeros((4, 8), dtype=np.int64)
    group_len = np.zeros(4, dtype=np.int64)
    draw_groups_kernel(order, fmt.pot_size, fmt.pot_groups, rng.state, groups, group_len)
    return {GROUP_LABELS[g]: tuple(int(t) for t in groups[g, : group_len[g]]) for g in range(4)}


def draw_r16_d46(tables: Sequence[Sequence[int]], rng: RngStream) -> list[tuple[int, int]]:
    """``tables[g]`` is group g's final order (at least four teams)."""
    if len(tables) != 4 or any(len(t) < 4 for t in tables):
        raise ValueError("need four group tables of at least four teams")
    standings = np.zeros((4, 8), dtype=np.int64)
    for g, table in enumerate(tables):
        standings[g, : len(table)] = table
    pairs = np.zeros((8, 2), dtype=np.int64)
    r16_draw_kernel(standings, rng.state, pairs)
    return [(int(a), int(b)) for a, b in pairs]


def draw_qf_d46(pot1: Sequence[int], pot2: Sequence[int], rng: RngStream) -> list[tuple[int, int]]:
    if len(pot1) != 4 or len(pot2) != 4:
        raise ValueError("quarter-final pots must hold exactly four teams each")
    pairs = np.zeros((4, 2), dtype=np.int64)
    qf_draw_kernel(np.asarray(pot1, dtype=np.int64), np.asarray(pot2, dtype=np.int64), rng.state, pairs)
    return [(int(a), int(b)) for a, b in pairs]


def draw_final_four(finalists: Sequence[int], rng: RngStream) -> list[tuple[int, int]]:
    if len(finalists) != 4 or len(set(finalists)) != 4:
        raise ValueError("the Final Four needs four distinct teams")
    pairs = np.zeros((2, 2), dtype=np.int64)
    f4_draw_kernel(np.asarray(finalists, dtype=np.int64), rng.state, pairs)
    return [(int(a), int(b)) for a, b in pairs]
