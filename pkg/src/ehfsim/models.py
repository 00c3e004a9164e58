"""Team strength and match-outcome models.

A team is identified by its pre-tournament rank (1 = strongest).  Every model
can be flattened into a probability table ``table[i, j] = P(i beats j)``
indexed directly by rank; the replay kernels only ever see that table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from numba import njit

from .rng import RngStream, next_double

EFFORT_OFFSET = 57
MAX_TEAMS = 28
COMPLEMENT_TOL = 1e-9


@dataclass(frozen=True)
class TullockModel:
    """Contest success function with effort ``57 - rank`` raised to ``r``."""

    r: float
    effort_offset: int = field(default=EFFORT_OFFSET, init=False)

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r < 0:
            raise ValueError(f"discriminatory power r must be >= 0, got {self.r}")

    @property
    def label(self) -> str:
        return f"tullock:r={self.r!r}"

    def win_probability(self, i: int, j: int) -> float:
        return tullock_win_probability(i, j, self)

    def table(self, n: int) -> np.ndarray:
        if n >= self.effort_offset:
            raise ValueError(f"{n} teams would give non-positive effort")
        tab = np.full((n + 1, n + 1), 0.5)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    tab[i, j] = _tullock(i, j, self.r, self.effort_offset)
        return tab


@dataclass(frozen=True, eq=False)
class MatrixModel:
    """Explicit win-probability grid; ``p[i-1][j-1] = P(i beats j)``."""

    p: np.ndarray
    name: str = "matrix"

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise ValueError(f"win matrix must be square with n >= 2, got shape {p.shape}")
        off = ~np.eye(p.shape[0], dtype=bool)
        if np.any(~np.isfinite(p[off])) or np.any(p[off] < 0) or np.any(p[off] > 1):
            raise ValueError("win probabilities must lie in [0, 1]")
        gap = np.abs(p + p.T - 1.0)[off]
        if gap.size and gap.max() > COMPLEMENT_TOL:
            raise ValueError(f"p[i][j] + p[j][i] deviates from 1 by {gap.max():.3g}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    @property
    def label(self) -> str:
        return self.name

    def win_probability(self, i: int, j: int) -> float:
        return matrix_win_probability(i, j, self)

    def table(self, n: int) -> np.ndarray:
        if n != self.n:
            raise ValueError(f"matrix covers {self.n} teams, format needs {n}")
        tab = np.full((n + 1, n + 1), 0.5)
        tab[1:, 1:] = self.p
        np.fill_diagonal(tab, 0.5)
        return tab


WinModel = Union[TullockModel, MatrixModel]


def _tullock(i: int, j: int, r: float, offset: int = EFFORT_OFFSET) -> float:
    ei = float(offset - i)
    ej = float(offset - j)
    # ratio form avoids overflow of effort**r for large r
    try:
        return 1.0 / (1.0 + (ej / ei) ** r)
    except OverflowError:  # weaker side, ratio**r beyond double range
        return 0.0


def _check_pair(i: int, j: int, n: int) -> None:
    if i == j:
        raise ValueError(f"a team cannot play itself (rank {i})")
    for k in (i, j):
        if not 1 <= k <= n:
            raise ValueError(f"rank {k} outside 1..{n}")


def tullock_win_probability(i: int, j: int, model: TullockModel) -> float:
    _check_pair(i, j, model.effort_offset - 1)
    return _tullock(i, j, model.r, model.effort_offset)


def matrix_win_probability(i: int, j: int, model: MatrixModel) -> float:
    _check_pair(i, j, model.n)
    return float(model.p[i - 1, j - 1])


def uniform_matrix(n: int) -> MatrixModel:
    """All teams equally strong."""
    return MatrixModel(np.full((n, n), 0.5), name="builtin:uniform")


def dominance_matrix(n: int) -> MatrixModel:
    """The stronger (lower) rank always wins."""
    p = np.triu(np.ones((n, n)), k=1)
    np.fill_diagonal(p, 0.5)
    return MatrixModel(p, name="builtin:dominance")


BUILTINS = {"builtin:uniform": uniform_matrix, "builtin:dominance": dominance_matrix}


def load_matrix(path: Union[str, Path]) -> MatrixModel:
    """Read ``n`` then ``n`` rows of ``n`` reals; diagonal entries are ignored."""
    tokens = Path(path).read_text().split()
    if not tokens:
        raise ValueError(f"{path}: empty matrix file")
    n = int(tokens[0])
    values = tokens[1:]
    if n < 2 or len(values) != n * n:
        raise ValueError(f"{path}: expected {n * n} entries after n={n}, found {len(values)}")
    p = np.array([float(v) for v in values]).reshape(n, n)
    np.fill_diagonal(p, 0.5)
    return MatrixModel(p, name=str(path))


def resolve_matrix(spec: str, n: int) -> MatrixModel:
    if spec in BUILTINS:
        return BUILTINS[spec](n)
    return load_matrix(spec)


@njit(cache=True)
def play_match(table, i, j, state):
    """Winner of a single match; consumes exactly one variate."""
    if next_double(state) < table[i, j]:
        return i
    return j


def sample_match_winner(i: int, j: int, model: WinModel, rng: RngStream) -> int:
    p = model.win_probability(i, j)
    return i if rng.random() < p else j
