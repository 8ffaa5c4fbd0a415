"""Bounded forecasting game: capital accounting and the strategy-agnostic game loop.

Each round Investor bets a fraction alpha_n of current capital, Market reveals a
move x_n in [-1, 1], and capital multiplies by (1 + alpha_n * x_n). Keeping
|alpha_n| < 1 rules out bankruptcy. Capital is tracked in log space as the
primary representation; the linear value is derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, StrategyViolationError, UsageError

# Optimized bets are kept this far inside the open interval (-1, 1): with a
# single-signed history the log-wealth objective has no attainable maximum on
# the open interval, so optimizers work on the closed, slightly shrunken one.
RATIO_MARGIN = 1e-3
RATIO_CAP = 1.0 - RATIO_MARGIN

# Betting-round marks reported in summary tables.
CHECKPOINT_ROUNDS = (100, 200, 300)


def clamp_ratio(alpha: float) -> float:
    """Clamp a betting ratio into [-RATIO_CAP, RATIO_CAP]."""
    return min(max(float(alpha), -RATIO_CAP), RATIO_CAP)


def _check_ratio(alpha: float) -> None:
    if not -1.0 < alpha < 1.0:  # also rejects NaN
        raise DomainError(f"betting ratio must lie in (-1, 1), got {alpha!r}")


def _check_movement(x: float) -> None:
    if not -1.0 <= x <= 1.0:
        raise DomainError(f"market movement must lie in [-1, 1], got {x!r}")


@dataclass
class MovementSeries:
    """Normalized per-round price movements x_n in [-1, 1], the Market's moves."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise UsageError("movement series must be one-dimensional")
        if self.values.size:
            if not np.isfinite(self.values).all():
                raise DomainError("movement series contains non-finite values")
            worst = self.values[np.argmax(np.abs(self.values))]
            if abs(worst) > 1.0:
                raise DomainError(
                    f"market movement must lie in [-1, 1], got {worst!r}"
                )

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class GameState:
    """Investor's position after `round` rounds; round 0 holds capital exactly 1."""

    round: int = 0
    log_capital: float = 0.0

    @property
    def capital(self) -> float:
        return math.exp(self.log_capital)

    def advance(self, alpha: float, x: float) -> "GameState":
        """State after betting `alpha` against the move `x`."""
        _check_ratio(alpha)
        _check_movement(x)
        return GameState(self.round + 1, self.log_capital + math.log1p(alpha * x))


def capital_step(capital_prev: float, alpha: float, x: float) -> float:
    """One multiplicative capital update: capital_prev * (1 + alpha * x)."""
    if not (capital_prev > 0.0 and math.isfinite(capital_prev)):
        raise DomainError(f"capital must be positive and finite, got {capital_prev!r}")
    _check_ratio(alpha)
    _check_movement(x)
    return capital_prev * (1.0 + alpha * x)


def log_capital(ratios: Sequence[float], movements) -> float:
    """Log capital after betting `ratios` against `movements`, round by round."""
    xs = movements.values if isinstance(movements, MovementSeries) else np.asarray(movements, float)
    alphas = np.asarray(ratios, dtype=float)
    if alphas.shape != xs.shape:
        raise UsageError(
            f"{alphas.size} ratios against {xs.size} movements (lengths must match)"
        )
    for a in alphas:
        _check_ratio(a)
    for x in xs:
        _check_movement(x)
    return float(np.log1p(alphas * xs).sum())


@dataclass
class RoundDiagnostics:
    """Optimizer effort behind one betting round."""

    round: int
    iterations: int
    converged: bool


@dataclass
class StrategyRunResult:
    """Per-round betting ratios and the resulting log capital path.

    `ratios[i]` and `log_capital_path[i]` describe round i+1; warmup rounds
    bet 0 so indices stay aligned with the data. `checkpoints` maps betting
    rounds (warmup excluded) to log capital.
    """

    ratios: np.ndarray
    log_capital_path: np.ndarray
    warmup: int
    checkpoints: dict[int, float] = field(default_factory=dict)
    diagnostics: list[RoundDiagnostics] | None = None

    @property
    def betting_rounds(self) -> int:
        return len(self.log_capital_path) - self.warmup

    @property
    def final_log_capital(self) -> float:
        return float(self.log_capital_path[-1])


def checkpoint_rounds(betting_rounds: int) -> list[int]:
    """Standard checkpoint marks that fit, plus the final betting round."""
    marks = [r for r in CHECKPOINT_ROUNDS if r <= betting_rounds]
    if betting_rounds >= 1 and betting_rounds not in marks:
        marks.append(betting_rounds)
    return marks


def _checkpoints(path: np.ndarray, warmup: int) -> dict[int, float]:
    return {r: float(path[warmup + r - 1]) for r in checkpoint_rounds(len(path) - warmup)}


def run_game(
    strategy: Callable[[int, np.ndarray], float],
    movements: MovementSeries,
    warmup: int = 0,
) -> StrategyRunResult:
    """Play the bounded forecasting game round by round.

    `strategy(n, past)` is called for each round n > warmup with the 1-based
    round index and a read-only view of the movements before round n (all x_k
    with k < n); it returns the betting ratio alpha_n. Rounds 1..warmup bet 0.
    """
    if warmup < 0:
        raise UsageError(f"warmup must be nonnegative, got {warmup}")
    xs = movements.values
    n_rounds = len(xs)
    if n_rounds <= warmup:
        raise UsageError(
            f"series of length {n_rounds} leaves no rounds after a warmup of {warmup}"
        )
    ratios = np.zeros(n_rounds)
    path = np.empty(n_rounds)
    state = GameState()
    for i in range(n_rounds):
        n = i + 1
        alpha = 0.0
        if n > warmup:
            alpha = float(strategy(n, xs[: n - 1]))
            if not -1.0 < alpha < 1.0:
                raise StrategyViolationError(
                    f"strategy returned ratio {alpha!r} outside (-1, 1) at round {n}"
                )
        state = state.advance(alpha, xs[i])
        ratios[i] = alpha
        path[i] = state.log_capital
    return StrategyRunResult(
        ratios=ratios,
        log_capital_path=path,
        warmup=warmup,
        checkpoints=_checkpoints(path, warmup),
    )
