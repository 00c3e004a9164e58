"""Command line front end: simulate, compare and convergence.

Exit codes: 0 success, 2 invalid flags or configuration, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .draws import Identification, Seeding
from .engine import CONVERGENCE_LADDER, DEFAULT_RUNS, SimConfig, convergence_run, simulate
from .formats import FORMATS, VARIATE_ORDER
from .metrics import MetricsReport
from .models import TullockModel, resolve_matrix
from .rng import ALGORITHM_ID

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3

PER_TEAM_HEADER = (
    "rank", "matches_mean", "win_pct", "prize_mean",
    "p_place1", "p_place2", "p_place3", "p_place4", "p_top_groups",
)
COMPARE_ROWS = ("avg_rank_1", "avg_rank_2", "avg_rank_3", "avg_rank_4", "quality_per_pairing", "balance_per_pairing")

log = logging.getLogger("ehfsim")


class UsageError(Exception):
    """Bad flags or an invalid configuration (exit 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt6(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def _csv_text(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def per_team_csv(report: MetricsReport) -> str:
    rows = [PER_TEAM_HEADER]
    for i in range(report.n_teams):
        top = report.p_top_groups[i] if report.p_top_groups is not None else None
        rows.append(
            (str(i + 1), fmt6(report.matches_mean[i]), fmt6(report.win_pct[i]), fmt6(report.prize_mean[i]),
             *(fmt6(p) for p in report.p_place[i]), fmt6(top))
        )
    return _csv_text(rows)


def summary_json(config: SimConfig, report: MetricsReport) -> str:
    doc = {
        "config": config.to_dict(),
        "engine_version": __version__,
        "report": report.to_dict(),
        "rng_algorithm": ALGORITHM_ID,
        "variate_order": VARIATE_ORDER,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def read_summary(path) -> tuple[dict, MetricsReport]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return doc, MetricsReport.from_dict(doc["report"])


def build_config(
    format_id: str, seeding: str, identification: str, r: Optional[float], matrix: Optional[str],
    runs: int, seed: int,
) -> SimConfig:
    """Validate raw flag values into a SimConfig; raises UsageError or OSError."""
    if format_id not in FORMATS:
        raise UsageError(f"unknown format {format_id!r}")
    if (r is None) == (matrix is None):
        raise UsageError("give exactly one of --r and --matrix")
    try:
        if matrix is not None:
            model = resolve_matrix(matrix, FORMATS[format_id].n_teams)
        else:
            model = TullockModel(r)
        return SimConfig(format_id, model, Seeding(seeding), Identification(identification), runs, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", required=True, choices=sorted(FORMATS))
    p.add_argument("--seeding", default="seeded", choices=[s.value for s in Seeding])
    p.add_argument("--identification", default="correct", choices=[s.value for s in Identification])
    model = p.add_mutually_exclusive_group(required=True)
    model.add_argument("--r", type=float, help="Tullock discriminatory power")
    model.add_argument("--matrix", help="builtin:uniform, builtin:dominance or a matrix file")
    p.add_argument("--runs", type=int, default=DEFAULT_RUNS)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, required=True, help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ehfsim", description="Monte Carlo simulation of group-plus-knockout tournaments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run one configuration, write summary.json and per_team.csv")
    _add_config_flags(sim)
    _add_common_flags(sim)

    cmp_ = sub.add_parser("compare", help="run every configuration of an experiment file side by side")
    cmp_.add_argument("experiments", type=Path)
    _add_common_flags(cmp_)

    conv = sub.add_parser("convergence", help="running estimates at a ladder of replay counts")
    _add_config_flags(conv)
    _add_common_flags(conv)
    conv.add_argument("--checkpoints", help="comma separated ascending replay counts (default: 1e3 .. 1e7 ladder)")
    return parser


@dataclass(frozen=True)
class Experiment:
    name: str
    config: SimConfig


def parse_experiments(text: str, seed: int = 1) -> list[Experiment]:
    """One ``name format seeding identification r runs`` per line; '#' starts a comment."""
    out: list[Experiment] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 6:
            raise UsageError(f"line {lineno}: expected 6 fields, found {len(fields)}")
        name, fid, seeding, ident, r, runs = fields
        try:
            r_val, runs_val = float(r), int(runs)
        except ValueError as exc:
            raise UsageError(f"line {lineno}: {exc}") from exc
        if fid not in FORMATS or seeding not in {s.value for s in Seeding} or ident not in {
                s.value for s in Identification}:
            raise UsageError(f"line {lineno}: unknown format, seeding or identification")
        if any(e.name == name for e in out):
            raise UsageError(f"line {lineno}: duplicate experiment name {name!r}")
        out.append(Experiment(name, build_config(fid, seeding, ident, r_val, None, runs_val, seed)))
    if not out:
        raise UsageError("experiment file lists no configurations")
    if len({e.config.runs for e in out}) > 1:
        raise UsageError("all experiments must use the same number of runs")
    return out


def compare_csv(names: Sequence[str], reports: Sequence[MetricsReport]) -> str:
    rows = [("metric", *names)]
    for k in range(4):
        rows.append((COMPARE_ROWS[k], *(fmt6(r.avg_rank[k]) for r in reports)))
    rows.append((COMPARE_ROWS[4], *(fmt6(r.quality_per_pairing) for r in reports)))
    rows.append((COMPARE_ROWS[5], *(fmt6(r.balance_per_pairing) for r in reports)))
    return _csv_text(rows)


def convergence_csv(points) -> str:
    rows = [("runs", "win_share_team1", "mean_meetings_1_2")]
    rows += [(str(p.runs), fmt6(p.win_share_team1), fmt6(p.mean_meetings_1_2)) for p in points]
    return _csv_text(rows)


def _checkpoints(spec: Optional[str], runs: int) -> list[int]:
    if spec is None:
        # the ladder up to runs, always ending at runs itself
        return [c for c in CONVERGENCE_LADDER if c < runs] + [runs]
    try:
        return [int(float(tok)) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --checkpoints: {exc}") from exc


def _config_from_args(args) -> SimConfig:
    return build_config(args.format, args.seeding, args.identification, args.r, args.matrix, args.runs, args.seed)


def run(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = make_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.command == "simulate":
            config = _config_from_args(args)
            report = simulate(config, args.threads)
            _write(args.out / "summary.json", summary_json(config, report))
            _write(args.out / "per_team.csv", per_team_csv(report))
        elif args.command == "compare":
            experiments = parse_experiments(args.experiments.read_text(encoding="utf-8"), args.seed)
            reports = [simulate(e.config, args.threads) for e in experiments]
            _write(args.out / "comparison.csv", compare_csv([e.name for e in experiments], reports))
        else:
            config = _config_from_args(args)
            checkpoints = _checkpoints(args.checkpoints, config.runs)
            try:
                points = convergence_run(config, checkpoints, args.threads)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            _write(args.out / "convergence.csv", convergence_csv(points))
    except UsageError as exc:
        print(f"ehfsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ehfsim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
