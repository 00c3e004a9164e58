"""Replay orchestration: sharding, worker threads and the convergence mode.

Replay ``k`` always draws from stream ``(master_seed, k)`` and accumulators
are integer sums, so the report is a pure function of the configuration and
seed whatever the shard size or worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from numba import njit

from .draws import Identification, Seeding, SeedingPolicy, draw_groups_kernel, perceived_order_kernel
from .formats import MAX_GROUP, FormatSpec, get_format, run_tournament_kernel
from .metrics import AggregateStats, MetricsReport, accumulate_kernel, finalize, merge
from .models import MatrixModel, TullockModel, WinModel
from .rng import STATE_SIZE, seed_state

log = logging.getLogger(__name__)

DEFAULT_RUNS = 1_000_000
DEFAULT_SHARD = 10_000
CONVERGENCE_LADDER = tuple(
    int(m * 10**e) for e in range(3, 8) for m in (1, 2.5, 5) if m * 10**e <= 10**7
)


@dataclass(frozen=True)
class SimConfig:
    format_id: str
    model: WinModel
    seeding: Seeding = Seeding.SEEDED
    identification: Identification = Identification.CORRECT
    runs: int = DEFAULT_RUNS
    master_seed: int = 1
    shard_size: int = DEFAULT_SHARD

    def __post_init__(self):
        object.__setattr__(self, "format_id", self.format_id.lower())
        object.__setattr__(self, "seeding", Seeding(self.seeding))
        object.__setattr__(self, "identification", Identification(self.identification))
        fmt = get_format(self.format_id)
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if isinstance(self.model, MatrixModel) and self.model.n != fmt.n_teams:
            raise ValueError(f"matrix covers {self.model.n} teams but {fmt.id} has {fmt.n_teams}")

    @property
    def fmt(self) -> FormatSpec:
        return get_format(self.format_id)

    @property
    def policy(self) -> SeedingPolicy:
        return SeedingPolicy(self.seeding, self.identification)

    @property
    def key(self) -> str:
        """Identity of everything that shapes the result except the run count."""
        return "|".join(
            (self.format_id, self.seeding.value, self.identification.value, self.model.label, str(self.master_seed))
        )

    def table(self) -> np.ndarray:
        if isinstance(self.model, TullockModel):
            return self.model.table(self.fmt.n_teams)
        return self.model.table(self.model.n)

    def to_dict(self) -> dict:
        model = {"kind": "tullock", "r": self.model.r} if isinstance(self.model, TullockModel) else {
            "kind": "matrix", "source": self.model.name}
        return {
            "format": self.format_id,
            "seeding": self.seeding.value,
            "identification": self.identification.value,
            "model": model,
            "runs": self.runs,
            "master_seed": self.master_seed,
        }


@njit(cache=True, nogil=True)
def run_shard_kernel(
    kargs, pot_size, pot_groups, random_variant, erroneous, top_groups, table, seed, start, stop,
    totals, place_rank, place_rank_sq, place_count, matches, win_ratio, win_count, top_count, stage_matches,
):
    n = matches.shape[0] - 1
    state = np.zeros(STATE_SIZE, dtype=np.uint64)
    order = np.empty(n, dtype=np.int64)
    groups = np.zeros((4, MAX_GROUP), dtype=np.int64)
    group_len = np.zeros(4, dtype=np.int64)
    records = np.zeros((256, 5), dtype=np.int64)
    standings = np.zeros((4, MAX_GROUP), dtype=np.int64)
    placements = np.zeros(4, dtype=np.int64)
    played = np.zeros(n + 1, dtype=np.int64)
    wins = np.zeros(n + 1, dtype=np.int64)
    for k in range(start, stop):
        seed_state(state, seed, np.uint64(k))
        perceived_order_kernel(n, random_variant, erroneous, state, order)
        draw_groups_kernel(order, pot_size, pot_groups, state, groups, group_len)
        nrec = run_tournament_kernel(kargs, groups, table, state, records, standings, placements)
        accumulate_kernel(
            records, nrec, placements, groups, top_groups, erroneous, totals, place_rank, place_rank_sq,
            place_count, matches, win_ratio, win_count, top_count, stage_matches, played, wins,
        )


def run_range(config: SimConfig, start: int, stop: int, table: Optional[np.ndarray] = None) -> AggregateStats:
    """Accumulate replays ``start .. stop-1`` of ``config``."""
    fmt = config.fmt
    random_variant, erroneous = config.policy.codes
    acc = AggregateStats(fmt.id, fmt.n_teams, config.key, stop - start, bool(erroneous))
    run_shard_kernel(
        fmt.kernel_args, fmt.pot_size, fmt.pot_groups, random_variant, erroneous, acc.tracks_top_groups,
        config.table() if table is None else table, np.uint64(config.master_seed), start, stop, *acc.arrays,
    )
    return acc


def _ranges(total: int, shard: int, cuts: Iterable[int] = ()) -> list[tuple[int, int]]:
    bounds = sorted({0, total, *range(shard, total, shard), *(c for c in cuts if 0 < c < total)})
    return list(zip(bounds[:-1], bounds[1:]))


def _run_shards(config: SimConfig, ranges: Sequence[tuple[int, int]], threads: int) -> list[AggregateStats]:
    table = config.table()
    if threads <= 1 or len(ranges) == 1:
        return [run_range(config, a, b, table) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: run_range(config, ab[0], ab[1], table), ranges))


def simulate_stats(config: SimConfig, threads: int = 1) -> AggregateStats:
    ranges = _ranges(config.runs, config.shard_size)
    log.info("%s: %d replays in %d shards on %d threads", config.key, config.runs, len(ranges), threads)
    shards = _run_shards(config, ranges, threads)
    acc = shards[0]
    for part in shards[1:]:
        acc = merge(acc, part)
    return acc


def simulate(config: SimConfig, threads: int = 1) -> MetricsReport:
    return finalize(simulate_stats(config, threads))


class ConvergencePoint(NamedTuple):
    runs: int
    win_share_team1: float
    mean_meetings_1_2: float


def convergence_run(config: SimConfig, checkpoints: Sequence[int], threads: int = 1) -> list[ConvergencePoint]:
    """Running estimates at each checkpoint, from one pass over the replays."""
    checkpoints = list(checkpoints)
    if not checkpoints or any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoints must be strictly ascending")
    if checkpoints[0] < 1 or checkpoints[-1] > config.runs:
        raise ValueError(f"checkpoints must lie in 1..{config.runs}")
    stop = checkpoints[-1]
    ranges = _ranges(stop, config.shard_size, checkpoints)
    shards = _run_shards(config, ranges, threads)
    series = []
    acc = None
    marks = iter(checkpoints)
    mark = next(marks)
    for (_, b), part in zip(ranges, shards):
        acc = part if acc is None else merge(acc, part)
        if b == mark:
            report = finalize(acc)
            series.append(ConvergencePoint(b, report.win_share_team1, report.mean_meetings_1_2))
            mark = next(marks, None)
    return series
