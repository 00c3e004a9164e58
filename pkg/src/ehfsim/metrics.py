"""Integer-exact accumulation of tournament metrics and their finalization.

All accumulator fields are int64, so merging shards is plain addition and
the result does not depend on how replays were split or scheduled.  Per-replay
winning ratios are stored scaled by ``WIN_SCALE = lcm(1..20)``: every team
plays between 10 and 20 matches, so ``wins * WIN_SCALE / matches`` is an
integer.

``win_pct`` in the report is pooled (all wins over all matches played); the
mean of the per-replay ratios is kept alongside as ``win_ratio_mean``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import reduce
from typing import Optional

import numpy as np
from numba import njit

from .draws import adjusted_rank

WIN_SCALE = reduce(math.lcm, range(1, 21))  # 232_792_560
PRIZE_POINTS = (5, 3, 2, 1)
PRIZE_TAIL = 5  # no prize ratio for the last four teams

# layout of AggregateStats.totals; the *_SEEN sums use the ranks the seeding
# believed in, which differ from the true ranks only under erroneous identification
(QUALITY, QUALITY_SQ, BALANCE, BALANCE_SQ, PAIRINGS, MATCHES, MEETINGS_1_2,
 QUALITY_SEEN, BALANCE_SEEN) = range(9)
N_TOTALS = 9
N_STAGES = 7  # matches Stage in formats


@njit(cache=True)
def accumulate_kernel(
    records, nrec, placements, groups, top_groups, erroneous, totals, place_rank, place_rank_sq,
    place_count, matches, win_ratio, win_count, top_count, stage_matches, played, wins,
):
    n = played.shape[0] - 1
    played[:] = 0
    wins[:] = 0
    quality = 0
    balance = 0
    pairings = 0
    meetings = 0
    quality_seen = 0
    balance_seen = 0
    for r in range(nrec):
        a = records[r, 1]
        b = records[r, 2]
        played[a] += 1
        played[b] += 1
        wins[records[r, 3]] += 1
        stage_matches[a, records[r, 0]] += 1
        stage_matches[b, records[r, 0]] += 1
        quality += a + b
        balance += abs(a - b)
        ea = adjusted_rank(a, erroneous)
        eb = adjusted_rank(b, erroneous)
        quality_seen += ea + eb
        balance_seen += abs(ea - eb)
        if records[r, 4] == 0:
            pairings += 1
        if a + b == 3 and a * b == 2:
            meetings += 1
    totals[QUALITY] += quality
    totals[QUALITY_SQ] += quality * quality
    totals[BALANCE] += balance
    totals[BALANCE_SQ] += balance * balance
    totals[PAIRINGS] += pairings
    totals[MATCHES] += nrec
    totals[MEETINGS_1_2] += meetings
    totals[QUALITY_SEEN] += quality_seen
    totals[BALANCE_SEEN] += balance_seen
    for k in range(4):
        t = placements[k]
        place_rank[k] += t
        place_rank_sq[k] += t * t
        place_count[t, k] += 1
    for t in range(1, n + 1):
        matches[t] += played[t]
        win_count[t] += wins[t]
        win_ratio[t] += wins[t] * WIN_SCALE // played[t]
    if top_groups:
        for g in range(2):
            for m in range(groups.shape[1]):
                if groups[g, m] > 0:
                    top_count[groups[g, m]] += 1


@dataclass(eq=False)
class AggregateStats:
    """Mergeable sums over replays of one configuration."""

    format_id: str
    n_teams: int
    config_key: str = ""
    replays: int = 0
    erroneous: bool = False
    totals: np.ndarray = field(default=None)
    place_rank: np.ndarray = field(default=None)
    place_rank_sq: np.ndarray = field(default=None)
    place_count: np.ndarray = field(default=None)
    matches: np.ndarray = field(default=None)
    win_ratio: np.ndarray = field(default=None)
    win_count: np.ndarray = field(default=None)
    top_count: np.ndarray = field(default=None)
    stage_matches: np.ndarray = field(default=None)

    def __post_init__(self):
        n1 = self.n_teams + 1
        shapes = {
            "totals": (N_TOTALS,),
            "place_rank": (4,),
            "place_rank_sq": (4,),
            "place_count": (n1, 4),
            "matches": (n1,),
            "win_ratio": (n1,),
            "win_count": (n1,),
            "top_count": (n1,),
            "stage_matches": (n1, N_STAGES),
        }
        for name, shape in shapes.items():
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(shape, dtype=np.int64))

    @property
    def arrays(self) -> tuple[np.ndarray, ...]:
        return (
            self.totals, self.place_rank, self.place_rank_sq, self.place_count,
            self.matches, self.win_ratio, self.win_count, self.top_count, self.stage_matches,
        )

    @property
    def tracks_top_groups(self) -> bool:
        return self.format_id == "d86"

    def same_config(self, other: "AggregateStats") -> bool:
        mine = (self.format_id, self.n_teams, self.config_key, self.erroneous)
        return mine == (other.format_id, other.n_teams, other.config_key, other.erroneous)

    def copy(self) -> "AggregateStats":
        return merge(self, empty_like(self))

    def __eq__(self, other) -> bool:
        if not isinstance(other, AggregateStats):
            return NotImplemented
        return (
            self.same_config(other)
            and self.replays == other.replays
            and all(np.array_equal(x, y) for x, y in zip(self.arrays, other.arrays))
        )


def empty_like(acc: AggregateStats) -> AggregateStats:
    return AggregateStats(acc.format_id, acc.n_teams, acc.config_key, erroneous=acc.erroneous)


def accumulate(acc: AggregateStats, result) -> AggregateStats:
    """Add one ``TournamentResult`` to ``acc`` in place and return it."""
    if result.format_id != acc.format_id or result.n_teams != acc.n_teams:
        raise ValueError(f"result of {result.format_id} cannot join stats of {acc.format_id}")
    groups = np.zeros((4, 8), dtype=np.int64)
    for g, label in enumerate("ABCD"):
        members = result.groups[label]
        groups[g, : len(members)] = members
    n1 = acc.n_teams + 1
    accumulate_kernel(
        result.records, len(result.records), np.asarray(result.placements, dtype=np.int64), groups,
        acc.tracks_top_groups, acc.erroneous, *acc.arrays, np.zeros(n1, dtype=np.int64), np.zeros(n1, dtype=np.int64),
    )
    acc.replays += 1
    return acc


def merge(a: AggregateStats, b: AggregateStats) -> AggregateStats:
    if not a.same_config(b):
        raise ValueError("cannot merge statistics of different configurations")
    out = AggregateStats(a.format_id, a.n_teams, a.config_key, a.replays + b.replays, a.erroneous)
    for dst, x, y in zip(out.arrays, a.arrays, b.arrays):
        np.add(x, y, out=dst)
    return out


@dataclass
class MetricsReport:
    """Finalized estimates.  Per-team lists are indexed by rank - 1.

    Quality and balance are reported per pairing (a double round-robin pair,
    a two-leg tie or a Final Four match counts once) and per match; the raw
    totals are kept so other normalizations can be derived.  The ``*_seen``
    variants use the perceived ranks.  ``stage_matches_mean[t][s]`` is the
    mean number of matches team ``t+1`` plays in stage ``s``.
    """

    format_id: str
    n_teams: int
    runs: int
    avg_rank: list[float]
    avg_rank_se: list[float]
    quality_per_pairing: float
    quality_per_pairing_se: float
    quality_per_match: float
    balance_per_pairing: float
    balance_per_pairing_se: float
    balance_per_match: float
    quality_total: int
    balance_total: int
    quality_seen_per_pairing: float
    balance_seen_per_pairing: float
    pairings_per_replay: float
    matches_per_replay: float
    mean_meetings_1_2: float
    matches_mean: list[float]
    win_pct: list[float]
    win_ratio_mean: list[float]
    prize_mean: list[float]
    p_place: list[list[float]]
    p_top_groups: Optional[list[float]]
    stage_matches_mean: list[list[float]]
    prize_ratio: list[Optional[float]]

    @property
    def win_share_team1(self) -> float:
        return self.p_place[0][0]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


def _mean_se(total: int, total_sq: int, n: int) -> tuple[float, float]:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


def finalize(acc: AggregateStats) -> MetricsReport:
    n_runs = acc.replays
    if n_runs < 1:
        raise ValueError("no replays accumulated")
    n = acc.n_teams
    t = acc.totals
    pairings = int(t[PAIRINGS]) / n_runs
    matches = int(t[MATCHES]) / n_runs
    ranks = [_mean_se(int(acc.place_rank[k]), int(acc.place_rank_sq[k]), n_runs) for k in range(4)]
    quality, quality_se = _mean_se(int(t[QUALITY]), int(t[QUALITY_SQ]), n_runs)
    balance, balance_se = _mean_se(int(t[BALANCE]), int(t[BALANCE_SQ]), n_runs)

    counts = acc.place_count[1:]
    prize = [int(np.dot(counts[i], PRIZE_POINTS)) / n_runs for i in range(n)]
    ratios = [prize[i] / prize[i + 1] if prize[i + 1] > 0 else None for i in range(n - PRIZE_TAIL)]
    return MetricsReport(
        format_id=acc.format_id,
        n_teams=n,
        runs=n_runs,
        avg_rank=[m for m, _ in ranks],
        avg_rank_se=[s for _, s in ranks],
        quality_per_pairing=quality / pairings,
        quality_per_pairing_se=quality_se / pairings,
        quality_per_match=quality / matches,
        balance_per_pairing=balance / pairings,
        balance_per_pairing_se=balance_se / pairings,
        balance_per_match=balance / matches,
        quality_total=int(t[QUALITY]),
        balance_total=int(t[BALANCE]),
        quality_seen_per_pairing=int(t[QUALITY_SEEN]) / n_runs / pairings,
        balance_seen_per_pairing=int(t[BALANCE_SEEN]) / n_runs / pairings,
        pairings_per_replay=pairings,
        matches_per_replay=matches,
        mean_meetings_1_2=int(t[MEETINGS_1_2]) / n_runs,
        matches_mean=[int(x) / n_runs for x in acc.matches[1:]],
        win_pct=[int(w) / int(m) if m else 0.0 for w, m in zip(acc.win_count[1:], acc.matches[1:])],
        win_ratio_mean=[int(x) / (WIN_SCALE * n_runs) for x in acc.win_ratio[1:]],
        prize_mean=prize,
        p_place=[[int(c) / n_runs for c in row] for row in counts],
        p_top_groups=[int(x) / n_runs for x in acc.top_count[1:]] if acc.tracks_top_groups else None,
        prize_ratio=ratios,
        stage_matches_mean=[[int(c) / n_runs for c in row] for row in acc.stage_matches[1:]],
    )
