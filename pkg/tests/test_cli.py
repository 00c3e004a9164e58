import csv
import json

import pytest

from ehfsim.cli import parse_experiments, read_summary, run, UsageError
from ehfsim.engine import SimConfig, simulate
from ehfsim.models import TullockModel

SIM = ["simulate", "--format", "d86", "--seeding", "seeded", "--identification", "correct", "--r", "3",
       "--runs", "3000", "--seed", "1"]


def test_simulate_outputs(tmp_path):
    assert run(SIM + ["--out", str(tmp_path)]) == 0
    lines = (tmp_path / "per_team.csv").read_text().splitlines()
    assert lines[0] == "rank,matches_mean,win_pct,prize_mean,p_place1,p_place2,p_place3,p_place4,p_top_groups"
    assert len(lines) == 29
    row = next(csv.DictReader(lines))
    assert row["rank"] == "1" and len(row["win_pct"].split(".")[1]) == 6
    assert 0 <= sum(float(row[f"p_place{k}"]) for k in range(1, 5)) <= 1
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert doc["rng_algorithm"].startswith("philox")
    assert {"config", "engine_version", "report", "variate_order"} <= set(doc)


def test_repeat_and_thread_count_are_byte_identical(tmp_path):
    outs = []
    for k, threads in enumerate(["1", "4", "8"]):
        out = tmp_path / str(k)
        assert run(SIM + ["--threads", threads, "--out", str(out)]) == 0
        outs.append(((out / "summary.json").read_bytes(), (out / "per_team.csv").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_summary_round_trips(tmp_path):
    assert run(SIM + ["--out", str(tmp_path)]) == 0
    _, report = read_summary(tmp_path / "summary.json")
    assert report == simulate(SimConfig("d86", TullockModel(3), runs=3000))
    assert json.dumps(report.to_dict(), sort_keys=True) == json.dumps(
        json.loads((tmp_path / "summary.json").read_text())["report"], sort_keys=True)


def test_top_groups_column_empty_outside_d86(tmp_path):
    argv = ["simulate", "--format", "d47", "--r", "3", "--runs", "200", "--out", str(tmp_path)]
    assert run(argv) == 0
    rows = list(csv.DictReader((tmp_path / "per_team.csv").open()))
    assert all(r["p_top_groups"] == "" for r in rows)


def test_matrix_builtins(tmp_path):
    argv = ["simulate", "--format", "d46", "--matrix", "builtin:dominance", "--runs", "100", "--out", str(tmp_path)]
    assert run(argv) == 0
    rows = list(csv.DictReader((tmp_path / "per_team.csv").open()))
    assert rows[0]["p_place1"] == "1.000000"


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--format", "d46", "--r", "3", "--runs", "0"],
        ["simulate", "--format", "d99", "--r", "3"],
        ["simulate", "--format", "d46"],
        ["simulate", "--format", "d46", "--r", "3", "--matrix", "builtin:uniform"],
        ["simulate", "--format", "d46", "--r", "-1"],
        ["simulate", "--format", "d46", "--r", "3", "--threads", "0"],
        ["simulate", "--format", "d46", "--r", "3", "--seed", "-5"],
        ["convergence", "--format", "d86", "--r", "4", "--runs", "100", "--checkpoints", "50,20"],
        ["frobnicate"],
    ],
)
def test_bad_flags_exit_2(tmp_path, argv):
    assert run(argv + ["--out", str(tmp_path)]) == 2


def test_bad_matrix_file_exit_2(tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("2\n0 0.7\n0.7 0\n")
    assert run(["simulate", "--format", "d46", "--matrix", str(m), "--out", str(tmp_path)]) == 2


def test_io_failures_exit_3(tmp_path):
    assert run(["simulate", "--format", "d46", "--matrix", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(["simulate", "--format", "d46", "--r", "3", "--runs", "10", "--out", str(blocker / "sub")]) == 3
    assert run(["compare", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 3


EXPERIMENTS = """\
# name format seeding identification r runs
d86s d86 seeded correct 3 500
d86r d86 random correct 3 500   # trailing comment

d46s d46 seeded correct 3 500
"""


def test_compare(tmp_path):
    exp = tmp_path / "exp.txt"
    exp.write_text(EXPERIMENTS)
    assert run(["compare", str(exp), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "comparison.csv").open()))
    assert rows[0] == ["metric", "d86s", "d86r", "d46s"]
    assert [r[0] for r in rows[1:]] == [
        "avg_rank_1", "avg_rank_2", "avg_rank_3", "avg_rank_4", "quality_per_pairing", "balance_per_pairing"]
    ref = simulate(SimConfig("d46", TullockModel(3), runs=500))
    assert rows[1][3] == f"{ref.avg_rank[0]:.6f}"


def test_compare_single_column(tmp_path):
    exp = tmp_path / "exp.txt"
    exp.write_text("only d47 random erroneous 5 100\n")
    assert run(["compare", str(exp), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "comparison.csv").open()))
    assert all(len(r) == 2 for r in rows)


@pytest.mark.parametrize(
    "text",
    [
        "a d86 seeded correct 3 100\na d46 seeded correct 3 100\n",
        "a d86 seeded correct 3 100\nb d46 seeded correct 3 200\n",
        "a d86 seeded correct 3\n",
        "a d86 shuffled correct 3 100\n",
        "# nothing\n",
    ],
)
def test_bad_experiment_files(tmp_path, text):
    with pytest.raises(UsageError):
        parse_experiments(text)
    exp = tmp_path / "exp.txt"
    exp.write_text(text)
    assert run(["compare", str(exp), "--out", str(tmp_path)]) == 2


def test_convergence(tmp_path):
    argv = ["convergence", "--format", "d86", "--seeding", "random", "--r", "4", "--runs", "5000",
            "--checkpoints", "1000,2500,5000", "--out", str(tmp_path / "c")]
    assert run(argv) == 0
    lines = (tmp_path / "c" / "convergence.csv").read_text().splitlines()
    assert lines[0] == "runs,win_share_team1,mean_meetings_1_2"
    assert [l.split(",")[0] for l in lines[1:]] == ["1000", "2500", "5000"]
    sim = ["simulate", "--format", "d86", "--seeding", "random", "--r", "4", "--runs", "5000",
           "--out", str(tmp_path / "s")]
    assert run(sim) == 0
    _, rep = read_summary(tmp_path / "s" / "summary.json")
    assert lines[-1].split(",")[1] == f"{rep.win_share_team1:.6f}"
    assert lines[-1].split(",")[2] == f"{rep.mean_meetings_1_2:.6f}"


def test_default_ladder_ends_at_runs(tmp_path):
    argv = ["convergence", "--format", "d46", "--r", "4", "--runs", "6000", "--out", str(tmp_path)]
    assert run(argv) == 0
    runs = [l.split(",")[0] for l in (tmp_path / "convergence.csv").read_text().splitlines()[1:]]
    assert runs == ["1000", "2500", "5000", "6000"]
