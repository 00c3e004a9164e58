import itertools
from collections import Counter

import numpy as np
import pytest

from ehfsim.draws import (
    R16_MATCHINGS,
    Identification,
    Seeding,
    SeedingPolicy,
    assign_pots,
    draw_final_four,
    draw_groups,
    draw_qf_d46,
    draw_r16_d46,
    feasible_r16_matchings,
    identification_adjusted_rank,
    perceived_ranking,
)
from ehfsim.formats import FORMATS
from ehfsim.rng import RngStream

TEAMS = tuple(range(1, 29))


def test_adjusted_rank_examples():
    e = lambda i: identification_adjusted_rank(i, "erroneous")
    assert e(9) == 17 and e(10) == 9 and e(17) == 16
    assert e(1) == 1 and e(8) == 8 and e(18) == 18 and e(28) == 28
    assert all(identification_adjusted_rank(i, "correct") == i for i in TEAMS)


def test_adjusted_rank_is_a_bijection():
    assert sorted(identification_adjusted_rank(i, "erroneous") for i in TEAMS) == list(TEAMS)


def test_adjusted_rank_rejects_bad_input():
    with pytest.raises(ValueError):
        identification_adjusted_rank(0, "correct")
    with pytest.raises(ValueError):
        identification_adjusted_rank(3, "sloppy")


def test_policy_coerces_strings():
    p = SeedingPolicy("random", "erroneous")
    assert p.variant is Seeding.RANDOM and p.identification is Identification.ERRONEOUS
    assert p.codes == (1, 1) and p.tag == "R"


def test_seeded_rankings():
    assert perceived_ranking(TEAMS, SeedingPolicy()) == TEAMS
    wrong = perceived_ranking(TEAMS, SeedingPolicy("seeded", "erroneous"))
    assert wrong == tuple(range(1, 9)) + tuple(range(10, 18)) + (9,) + tuple(range(18, 29))


@pytest.mark.parametrize("ident", ["correct", "erroneous"])
def test_random_ranking_matches_numpy_oracle(ident):
    for k in range(20):
        ours = perceived_ranking(TEAMS, SeedingPolicy("random", ident), RngStream(3, k))
        u = np.random.Generator(np.random.Philox(key=np.array([3, k], dtype=np.uint64))).random(28)
        score = {i: 44.0 * u[i - 1] + (28 - identification_adjusted_rank(i, ident)) for i in TEAMS}
        assert ours == tuple(sorted(TEAMS, key=lambda i: (-score[i], i)))


def test_random_ranking_needs_rng():
    with pytest.raises(ValueError):
        perceived_ranking(TEAMS, SeedingPolicy("random"))


@pytest.mark.parametrize("fid", ["d86", "d47", "d46"])
def test_groups_take_one_team_per_pot(fid):
    fmt = FORMATS[fid]
    teams = tuple(range(1, fmt.n_teams + 1))
    pots = assign_pots(teams, fmt)
    assert len(pots) == fmt.n_pots
    rng = RngStream(9)
    for _ in range(50):
        groups = draw_groups(pots, fmt, rng)
        assert sorted(t for g in groups.values() for t in g) == list(teams)
        assert tuple(len(groups[g]) for g in "ABCD") == fmt.group_sizes
        for g, members in groups.items():
            pot_of = [(t - 1) // fmt.pot_size for t in members]
            assert len(set(pot_of)) == len(pot_of)


def test_d86_seeded_groups_split_top_sixteen():
    fmt = FORMATS["d86"]
    groups = draw_groups(assign_pots(TEAMS, fmt), fmt, RngStream(1))
    assert set(groups["A"]) | set(groups["B"]) == set(range(1, 17))


def test_group_draw_is_uniform_within_pot():
    fmt = FORMATS["d47"]
    pots = assign_pots(TEAMS, fmt)
    rng = RngStream(21)
    n = 8000
    where = Counter()
    for _ in range(n):
        groups = draw_groups(pots, fmt, rng)
        where.update(g for g, m in groups.items() if 1 in m)
    assert all(abs(where[g] / n - 0.25) < 0.02 for g in "ABCD")


def test_r16_matchings_are_exactly_the_derangements():
    table = {tuple(int(x) for x in row) for row in R16_MATCHINGS}
    oracle = set(feasible_r16_matchings())
    assert len(R16_MATCHINGS) == len(table) == 9
    assert table == oracle
    rejected = [p for p in itertools.permutations(range(4)) if p not in oracle]
    assert len(rejected) == 15


def test_r16_draw_avoids_group_rematches_and_is_uniform():
    tables = [[10 * g + k for k in range(1, 7)] for g in range(4)]
    group_of = {t: g for g, tab in enumerate(tables) for t in tab}
    rng = RngStream(5)
    seen = Counter()
    n = 9000
    for _ in range(n):
        pairs = draw_r16_d46(tables, rng)
        assert [a for a, _ in pairs[:4]] == [tab[0] for tab in tables]
        assert [a for a, _ in pairs[4:]] == [tab[1] for tab in tables]
        assert all(group_of[a] != group_of[b] for a, b in pairs)
        assert sorted(b for _, b in pairs[:4]) == sorted(tab[3] for tab in tables)
        assert sorted(b for _, b in pairs[4:]) == sorted(tab[2] for tab in tables)
        seen[tuple(group_of[b] for _, b in pairs[:4])] += 1
    assert set(seen) == set(feasible_r16_matchings())
    assert all(abs(c / n - 1 / 9) < 0.015 for c in seen.values())


def test_qf_draw_pairs_pot_one_with_pot_two():
    rng = RngStream(6)
    partner = Counter()
    for _ in range(4000):
        pairs = draw_qf_d46([1, 2, 3, 4], [5, 6, 7, 8], rng)
        assert [a for a, _ in pairs] == [1, 2, 3, 4]
        assert sorted(b for _, b in pairs) == [5, 6, 7, 8]
        partner[pairs[0][1]] += 1
    assert all(abs(c / 4000 - 0.25) < 0.03 for c in partner.values())
    with pytest.raises(ValueError):
        draw_qf_d46([1, 2, 3], [4, 5, 6, 7], rng)


def test_final_four_draw():
    rng = RngStream(7)
    partner = Counter()
    for _ in range(6000):
        (a, b), (c, d) = draw_final_four([4, 1, 3, 2], rng)
        assert a == 4 and sorted((a, b, c, d)) == [1, 2, 3, 4]
        partner[b] += 1
    assert all(abs(c / 6000 - 1 / 3) < 0.03 for c in partner.values())
    with pytest.raises(ValueError):
        draw_final_four([1, 1, 2, 3], rng)
