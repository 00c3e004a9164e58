"""Monte Carlo simulator for group-plus-knockout club tournaments."""

from .draws import Identification, Seeding, SeedingPolicy
from .engine import ConvergencePoint, SimConfig, convergence_run, simulate, simulate_stats
from .formats import FORMATS, FormatSpec, Stage, TournamentResult, get_format, run_tournament
from .metrics import AggregateStats, MetricsReport, accumulate, finalize, merge
from .models import MatrixModel, TullockModel, resolve_matrix
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "AggregateStats", "ConvergencePoint", "FORMATS", "FormatSpec", "Identification", "MatrixModel",
    "MetricsReport", "RngStream", "Seeding", "SeedingPolicy", "SimConfig", "Stage", "TournamentResult",
    "TullockModel", "accumulate", "convergence_run", "finalize", "get_format", "merge", "resolve_matrix",
    "run_tournament", "simulate", "simulate_stats",
]
