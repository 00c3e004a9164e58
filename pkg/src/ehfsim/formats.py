"""Tournament designs as data, and the kernel that replays one season.

Brackets are lists of two-legged tie slots whose sides are either a group
position (``"A2"``) or the qualifier of an earlier slot (``"W/K1"``).  D(4x6)
has no static knockout slots: its Round of 16 and quarter-finals come from
draws made during the replay.

Variate order inside a replay (frozen, part of the reproducibility contract):
group stage A..D, each group playing pairs in list order (two legs per pair)
and then breaking ties in its table; knockout slots in bracket order, each
two-leg tie using two variates plus one more on a 1-1 split; for D(4x6) the
two Round-of-16 matching draws precede the R16 ties and the quarter-final
draw (three variates) precedes the quarter-finals; the Final Four draws its
semifinal split, then plays both semifinals, the final and the third-place
match.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .draws import GROUP_LABELS, f4_draw_kernel, qf_draw_kernel, r16_draw_kernel, shuffle_kernel
from .models import WinModel, play_match
from .rng import RngStream, next_double

VARIATE_ORDER = (
    "random-variant scores for teams 1..n; pot-by-pot group draw; groups A..D, pairs in list order, "
    "two legs each, then tie shuffles; knockout slots in bracket order, two variates per tie plus one on "
    "a 1-1 split; D(4x6): two Round-of-16 matching draws, R16 ties, quarter-final draw (three variates), "
    "quarter-finals; Final Four: semifinal split, semifinals, final, third-place match"
)

MAX_GROUP = 8
RECORD_FIELDS = ("stage", "team_a", "team_b", "winner", "leg")


class Stage(enum.IntEnum):
    GROUPS_AB = 0
    GROUPS_CD = 1
    PLAY_OFF = 2
    PHASE_1 = 3
    ROUND_OF_16 = 4
    QUARTER_FINAL = 5
    FINAL_FOUR = 6


@dataclass(frozen=True)
class TieSlot:
    name: str
    stage: Stage
    home: str
    away: str


@dataclass(frozen=True)
class BracketTemplate:
    slots: tuple[TieSlot, ...] = ()
    final_four: tuple[str, ...] = ()
    draw_dependent: bool = False

    def compile(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Resolve sources to kernel arrays; checks acyclicity and single use.

        Source encoding: ``(0, g * MAX_GROUP + pos)`` for a group position,
        ``(1, slot)`` for the qualifier of an earlier slot.
        """
        index: dict[str, int] = {}
        used: Counter = Counter()
        stages = np.zeros(len(self.slots), dtype=np.int64)
        src = np.zeros((len(self.slots), 2, 2), dtype=np.int64)
        for s, slot in enumerate(self.slots):
            if slot.name in index:
                raise ValueError(f"duplicate slot {slot.name}")
            stages[s] = int(slot.stage)
            for side, ref in enumerate((slot.home, slot.away)):
                src[s, side] = _encode_source(ref, index)
                used[ref] += 1
            index[slot.name] = s
        f4 = np.array([_encode_source(ref, index)[1] for ref in self.final_four], dtype=np.int64)
        for ref in self.final_four:
            used[ref] += 1
        twice = [ref for ref, c in used.items() if c > 1]
        if twice:
            raise ValueError(f"sources feed more than one slot: {twice}")
        unused = [slot.name for slot in self.slots if used[f"W/{slot.name}"] == 0]
        if unused:
            raise ValueError(f"qualifiers never used downstream: {unused}")
        return stages, src, f4


def _encode_source(ref: str, index: Mapping[str, int]) -> tuple[int, int]:
    if ref.startswith("W/"):
        name = ref[2:]
        if name not in index:
            raise ValueError(f"{ref} refers to an unknown or later slot")
        return (1, index[name])
    g = GROUP_LABELS.index(ref[0])
    pos = int(ref[1:]) - 1
    return (0, g * MAX_GROUP + pos)


@dataclass(frozen=True, eq=False)
class FormatSpec:
    id: str
    label: str
    group_sizes: tuple[int, int, int, int]
    pot_size: int
    pot_groups: np.ndarray
    bracket: BracketTemplate
    stage_matches: Mapping[Stage, int]
    kernel_args: tuple = field(init=False, repr=False)

    def __post_init__(self):
        stages, src, f4 = self.bracket.compile()
        group_stage = np.array(
            [Stage.GROUPS_AB, Stage.GROUPS_AB, Stage.GROUPS_CD, Stage.GROUPS_CD], dtype=np.int64
        )
        sizes = np.array(self.group_sizes, dtype=np.int64)
        mode = 1 if self.bracket.draw_dependent else 0
        object.__setattr__(self, "kernel_args", (sizes, group_stage, stages, src, f4, mode))

    @property
    def n_teams(self) -> int:
        return sum(self.group_sizes)

    @property
    def n_pots(self) -> int:
        return self.n_teams // self.pot_size

    @property
    def total_matches(self) -> int:
        return sum(self.stage_matches.values())

    @property
    def pairings_per_replay(self) -> int:
        """Double round-robin pairs and two-leg ties once, Final Four singles once."""
        return sum(c if s is Stage.FINAL_FOUR else c // 2 for s, c in self.stage_matches.items())

    def group_of_pot(self, pot: int) -> tuple[str, ...]:
        return tuple(GROUP_LABELS[g] for g in self.pot_groups[pot])

    def advancing_positions(self, group: str) -> tuple[int, ...]:
        """Group positions (1-based) that reach the knockout phase."""
        if self.bracket.draw_dependent:
            return (1, 2, 3, 4)
        refs = {ref for slot in self.bracket.slots for ref in (slot.home, slot.away)}
        return tuple(p for p in range(1, MAX_GROUP + 1) if f"{group}{p}" in refs)


def _pots(n_pots: int, pot_size: int, targets) -> np.ndarray:
    arr = np.array([targets(p) for p in range(n_pots)], dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _slot(name, stage, home, away):
    return TieSlot(name, stage, home, away)


D86 = FormatSpec(
    id="d86",
    label="D(8+6)",
    group_sizes=(8, 8, 6, 6),
    pot_size=2,
    pot_groups=_pots(14, 2, lambda p: (0, 1) if p < 8 else (2, 3)),
    bracket=BracketTemplate(
        slots=(
            _slot("K1", Stage.PLAY_OFF, "C2", "D1"),
            _slot("K2", Stage.PLAY_OFF, "C1", "D2"),
            _slot("M1", Stage.PHASE_1, "W/K1", "A2"),
            _slot("M2", Stage.PHASE_1, "W/K2", "B2"),
            _slot("M3", Stage.PHASE_1, "A3", "B6"),
            _slot("M4", Stage.PHASE_1, "A6", "B3"),
            _slot("M5", Stage.PHASE_1, "A4", "B5"),
            _slot("M6", Stage.PHASE_1, "A5", "B4"),
            _slot("QF1", Stage.QUARTER_FINAL, "W/M1", "W/M4"),
            _slot("QF2", Stage.QUARTER_FINAL, "W/M2", "W/M3"),
            _slot("QF3", Stage.QUARTER_FINAL, "W/M6", "A1"),
            _slot("QF4", Stage.QUARTER_FINAL, "W/M5", "B1"),
        ),
        final_four=("W/QF1", "W/QF2", "W/QF3", "W/QF4"),
    ),
    stage_matches={
        Stage.GROUPS_AB: 112,
        Stage.GROUPS_CD: 60,
        Stage.PLAY_OFF: 4,
        Stage.PHASE_1: 12,
        Stage.QUARTER_FINAL: 8,
        Stage.FINAL_FOUR: 4,
    },
)

# K2 is A4 v B5: the printed bracket repeats B3 (also in K4) and omits B5.
D47 = FormatSpec(
    id="d47",
    label="D(4x7)",
    group_sizes=(7, 7, 7, 7),
    pot_size=4,
    pot_groups=_pots(7, 4, lambda p: (0, 1, 2, 3)),
    bracket=BracketTemplate(
        slots=(
            _slot("K1", Stage.PHASE_1, "A3", "B6"),
            _slot("K2", Stage.PHASE_1, "A4", "B5"),
            _slot("K3", Stage.PHASE_1, "A5", "B4"),
            _slot("K4", Stage.PHASE_1, "A6", "B3"),
            _slot("K5", Stage.PHASE_1, "C3", "D6"),
            _slot("K6", Stage.PHASE_1, "C4", "D5"),
            _slot("K7", Stage.PHASE_1, "C5", "D4"),
            _slot("K8", Stage.PHASE_1, "C6", "D3"),
            _slot("L1", Stage.ROUND_OF_16, "W/K6", "A1"),
            _slot("L2", Stage.ROUND_OF_16, "W/K5", "A2"),
            _slot("L3", Stage.ROUND_OF_16, "W/K7", "B1"),
            _slot("L4", Stage.ROUND_OF_16, "W/K8", "B2"),
            _slot("L5", Stage.ROUND_OF_16, "W/K2", "C1"),
            _slot("L6", Stage.ROUND_OF_16, "W/K1", "C2"),
            _slot("L7", Stage.ROUND_OF_16, "W/K3", "D1"),
            _slot("L8", Stage.ROUND_OF_16, "W/K4", "D2"),
            _slot("QF1", Stage.QUARTER_FINAL, "W/L1", "W/L8"),
            _slot("QF2", Stage.QUARTER_FINAL, "W/L3", "W/L6"),
            _slot("QF3", Stage.QUARTER_FINAL, "W/L2", "W/L7"),
            _slot("QF4", Stage.QUARTER_FINAL, "W/L4", "W/L5"),
        ),
        final_four=("W/QF1", "W/QF2", "W/QF3", "W/QF4"),
    ),
    stage_matches={
        Stage.GROUPS_AB: 84,
        Stage.GROUPS_CD: 84,
        Stage.PHASE_1: 16,
        Stage.ROUND_OF_16: 16,
        Stage.QUARTER_FINAL: 8,
        Stage.FINAL_FOUR: 4,
    },
)

D46 = FormatSpec(
    id="d46",
    label="D(4x6)",
    group_sizes=(6, 6, 6, 6),
    pot_size=4,
    pot_groups=_pots(6, 4, lambda p: (0, 1, 2, 3)),
    bracket=BracketTemplate(draw_dependent=True),
    stage_matches={
        Stage.GROUPS_AB: 60,
        Stage.GROUPS_CD: 60,
        Stage.ROUND_OF_16: 16,
        Stage.QUARTER_FINAL: 8,
        Stage.FINAL_FOUR: 4,
    },
)

FORMATS = {f.id: f for f in (D86, D47, D46)}


def get_format(format_id: str) -> FormatSpec:
    try:
        return FORMATS[format_id.lower()]
    except KeyError:
        raise ValueError(f"unknown format {format_id!r}; choose from {sorted(FORMATS)}") from None


# ---------------------------------------------------------------- kernels


@njit(cache=True, inline="always")
def _record(records, nrec, stage, a, b, w, leg):
    records[nrec, 0] = stage
    records[nrec, 1] = a
    records[nrec, 2] = b
    records[nrec, 3] = w
    records[nrec, 4] = leg
    return nrec + 1


@njit(cache=True)
def round_robin_kernel(members, size, table, state, wins, stage, records, nrec):
    """Every pair meets twice; ``wins`` is indexed by list position."""
    for x in range(size):
        wins[x] = 0
    for x in range(size):
        a = members[x]
        for y in range(x + 1, size):
            b = members[y]
            for leg in range(2):
                w = play_match(table, a, b, state)
                if w == a:
                    wins[x] += 1
                else:
                    wins[y] += 1
                nrec = _record(records, nrec, stage, a, b, w, leg)
    return nrec


@njit(cache=True)
def rank_group_kernel(members, wins, size, state, out):
    """Order by wins (descending); each tied block is shuffled uniformly."""
    pos = np.empty(size, dtype=np.int64)
    for x in range(size):
        pos[x] = x
    for k in range(1, size):
        t = pos[k]
        m = k - 1
        while m >= 0 and wins[pos[m]] < wins[t]:
            pos[m + 1] = pos[m]
            m -= 1
        pos[m + 1] = t
    start = 0
    while start < size:
        end = start + 1
        while end < size and wins[pos[end]] == wins[pos[start]]:
            end += 1
        if end - start > 1:
            shuffle_kernel(pos[start:end], end - start, state)
        start = end
    for x in range(size):
        out[x] = members[pos[x]]


@njit(cache=True)
def two_leg_kernel(table, a, b, state, stage, records, nrec):
    w1 = play_match(table, a, b, state)
    nrec = _record(records, nrec, stage, a, b, w1, 0)
    w2 = play_match(table, a, b, state)
    nrec = _record(records, nrec, stage, a, b, w2, 1)
    if w1 == w2:
        return w1, nrec
    # 1-1: decided as if by a third match, which is not recorded
    return play_match(table, a, b, state), nrec


@njit(cache=True)
def final_four_kernel(finalists, table, state, records, nrec, placements):
    pairs = np.empty((2, 2), dtype=np.int64)
    f4_draw_kernel(finalists, state, pairs)
    stage = 6
    a, b = pairs[0, 0], pairs[0, 1]
    c, d = pairs[1, 0], pairs[1, 1]
    w1 = play_match(table, a, b, state)
    nrec = _record(records, nrec, stage, a, b, w1, 0)
    l1 = b if w1 == a else a
    w2 = play_match(table, c, d, state)
    nrec = _record(records, nrec, stage, c, d, w2, 0)
    l2 = d if w2 == c else c
    champ = play_match(table, w1, w2, state)
    nrec = _record(records, nrec, stage, w1, w2, champ, 0)
    third = play_match(table, l1, l2, state)
    nrec = _record(records, nrec, stage, l1, l2, third, 0)
    placements[0] = champ
    placements[1] = w2 if champ == w1 else w1
    placements[2] = third
    placements[3] = l2 if third == l1 else l1
    return nrec


@njit(cache=True)
def run_tournament_kernel(kargs, groups, table, state, records, standings, placements):
    """One season from drawn groups to Final Four placements; returns #records."""
    sizes, group_stage, slot_stage, slot_src, f4_slots, mode = kargs
    nrec = 0
    wins = np.empty(MAX_GROUP, dtype=np.int64)
    for g in range(4):
        nrec = round_robin_kernel(groups[g], sizes[g], table, state, wins, group_stage[g], records, nrec)
        rank_group_kernel(groups[g], wins, sizes[g], state, standings[g])

    finalists = np.empty(4, dtype=np.int64)
    if mode == 0:
        n_slots = slot_stage.shape[0]
        qualifier = np.empty(n_slots, dtype=np.int64)
        for s in range(n_slots):
            side = np.empty(2, dtype=np.int64)
            for k in range(2):
                if slot_src[s, k, 0] == 0:
                    code = slot_src[s, k, 1]
                    side[k] = standings[code // MAX_GROUP, code % MAX_GROUP]
                else:
                    side[k] = qualifier[slot_src[s, k, 1]]
            qualifier[s], nrec = two_leg_kernel(table, side[0], side[1], state, slot_stage[s], records, nrec)
        for k in range(4):
            finalists[k] = qualifier[f4_slots[k]]
    else:
        r16 = np.empty((8, 2), dtype=np.int64)
        r16_draw_kernel(standings, state, r16)
        r16_winner = np.empty(8, dtype=np.int64)
        for s in range(8):
            r16_winner[s], nrec = two_leg_kernel(table, r16[s, 0], r16[s, 1], state, 4, records, nrec)
        qf = np.empty((4, 2), dtype=np.int64)
        qf_draw_kernel(r16_winner[:4], r16_winner[4:], state, qf)
        for s in range(4):
            finalists[s], nrec = two_leg_kernel(table, qf[s, 0], qf[s, 1], state, 5, records, nrec)
    return final_four_kernel(finalists, table, state, records, nrec, placements)


# ---------------------------------------------------------------- public API


def model_table(model: WinModel, n: int = 28) -> np.ndarray:
    return model.table(getattr(model, "n", n))


@dataclass
class GroupTable:
    members: tuple[int, ...]
    wins: tuple[int, ...]
    records: np.ndarray

    @property
    def n_matches(self) -> int:
        return len(self.records)


@dataclass
class TournamentResult:
    format_id: str
    groups: dict[str, tuple[int, ...]]
    standings: dict[str, tuple[int, ...]]
    records: np.ndarray
    placements: tuple[int, int, int, int]

    @property
    def n_teams(self) -> int:
        return sum(len(g) for g in self.groups.values())

    def stage_counts(self) -> dict[Stage, int]:
        return {Stage(s): int(c) for s, c in zip(*np.unique(self.records[:, 0], return_counts=True))}

    def matches_played(self) -> np.ndarray:
        """Per-team match counts indexed by rank (index 0 unused)."""
        out = np.zeros(self.n_teams + 1, dtype=np.int64)
        np.add.at(out, self.records[:, 1], 1)
        np.add.at(out, self.records[:, 2], 1)
        return out

    def wins(self) -> np.ndarray:
        out = np.zeros(self.n_teams + 1, dtype=np.int64)
        np.add.at(out, self.records[:, 3], 1)
        return out


def play_double_round_robin(group: Sequence[int], model: WinModel, rng: RngStream) -> GroupTable:
    if len(group) < 2 or len(set(group)) != len(group):
        raise ValueError("a group needs at least two distinct teams")
    members = np.asarray(group, dtype=np.int64)
    size = len(members)
    wins = np.zeros(size, dtype=np.int64)
    records = np.zeros((size * (size - 1), 5), dtype=np.int64)
    round_robin_kernel(members, size, model_table(model), rng.state, wins, 0, records, 0)
    return GroupTable(tuple(group), tuple(int(w) for w in wins), records)


def rank_group(table: GroupTable, rng: RngStream) -> tuple[int, ...]:
    size = len(table.members)
    out = np.zeros(size, dtype=np.int64)
    rank_group_kernel(
        np.asarray(table.members, dtype=np.int64), np.asarray(table.wins, dtype=np.int64), size, rng.state, out
    )
    return tuple(int(t) for t in out)


def play_two_leg_tie(a: int, b: int, model: WinModel, rng: RngStream) -> tuple[int, np.ndarray]:
    if a == b:
        raise ValueError("a tie needs two different teams")
    records = np.zeros((2, 5), dtype=np.int64)
    winner, _ = two_leg_kernel(model_table(model), a, b, rng.state, int(Stage.QUARTER_FINAL), records, 0)
    return int(winner), records


def play_final_four(finalists: Sequence[int], model: WinModel, rng: RngStream) -> tuple[tuple[int, ...], np.ndarray]:
    if len(finalists) != 4 or len(set(finalists)) != 4:
        raise ValueError("the Final Four needs four distinct teams")
    records = np.zeros((4, 5), dtype=np.int64)
    placements = np.zeros(4, dtype=np.int64)
    final_four_kernel(np.asarray(finalists, dtype=np.int64), model_table(model), rng.state, records, 0, placements)
    return tuple(int(t) for t in placements), records


def groups_to_array(fmt: FormatSpec, groups: Mapping[str, Sequence[int]]) -> np.ndarray:
    arr = np.zeros((4, MAX_GROUP), dtype=np.int64)
    seen: list[int] = []
    for g, label in enumerate(GROUP_LABELS):
        members = list(groups.get(label, ()))
        if len(members) != fmt.group_sizes[g]:
            raise ValueError(f"group {label} of {fmt.id} needs {fmt.group_sizes[g]} teams, got {len(members)}")
        arr[g, : len(members)] = members
        seen.extend(members)
    if sorted(seen) != list(range(1, fmt.n_teams + 1)):
        raise ValueError(f"groups must partition the ranks 1..{fmt.n_teams}")
    return arr


def run_tournament(
    fmt: FormatSpec, groups: Mapping[str, Sequence[int]], model: WinModel, rng: RngStream
) -> TournamentResult:
    arr = groups_to_array(fmt, groups)
    table = model_table(model)
    if table.shape[0] <= fmt.n_teams:
        raise ValueError(f"model covers fewer than {fmt.n_teams} teams")
    records = np.zeros((fmt.total_matches, 5), dtype=np.int64)
    standings = np.zeros((4, MAX_GROUP), dtype=np.int64)
    placements = np.zeros(4, dtype=np.int64)
    nrec = run_tournament_kernel(fmt.kernel_args, arr, table, rng.state, records, standings, placements)
    assert nrec == fmt.total_matches
    return TournamentResult(
        format_id=fmt.id,
        groups={GROUP_LABELS[g]: tuple(int(t) for t in arr[g, : fmt.group_sizes[g]]) for g in range(4)},
        standings={GROUP_LABELS[g]: tuple(int(t) for t in standings[g, : fmt.group_sizes[g]]) for g in range(4)},
        records=records,
        placements=tuple(int(t) for t in placements),
    )
