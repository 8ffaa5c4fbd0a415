"""Sequentially optimized network betting.

Before each betting round the network weights are re-fit, by annealed
gradient ascent, to maximize the log wealth they would have earned over all
completed post-warmup rounds; the round's bet is the refit network's output
on the latest window. The optimizer returns the best iterate it visited, so
a round's weights never score below their starting point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import NumericError, UsageError
from .game import MovementSeries, RoundDiagnostics, StrategyRunResult, clamp_ratio, run_game
from .network import (
    AnnealingSchedule,
    NetworkConfig,
    NetworkWeights,
    _batch_forward,
    _stack_history,
    _wealth_value_and_gradient,
    forward,
    window_matrix,
)


@dataclass
class SosnnConfig:
    """Network shape plus everything that controls the per-round refits."""

    net: NetworkConfig
    schedule: AnnealingSchedule = field(default_factory=AnnealingSchedule)
    weight_tolerance: float = 1e-4
    max_iterations: int = 10_000
    warmup: int = 20
    init_scale: float = 0.1
    seed: int = 0
    warm_start: bool = True

    def __post_init__(self) -> None:
        if self.weight_tolerance <= 0:
            raise UsageError("weight_tolerance must be positive")
        if self.max_iterations < 1:
            raise UsageError("max_iterations must be >= 1")
        if self.warmup < 0:
            raise UsageError("warmup must be nonnegative")
        if self.init_scale <= 0:
            raise UsageError("init_scale must be positive")


@dataclass
class OptimizeReport:
    iterations: int
    converged: bool
    final_gradient_norm: float
    objective: float


def optimize_weights(
    history: Iterable, config: SosnnConfig, init: NetworkWeights
) -> tuple[NetworkWeights, OptimizeReport]:
    """Ascend the log-wealth objective from `init` until the applied weight
    increments all fall below `weight_tolerance` or the iteration cap hits.

    Returns the best-objective iterate visited, which is never worse than
    `init`, together with a convergence report.
    """
    windows, moves = _stack_history(history, config.net.input_count)
    if windows.shape[0] == 0:
        raise UsageError("cannot optimize over an empty history")
    if init.config != config.net:
        raise UsageError(
            f"init weights are {init.config}, config wants {config.net}"
        )
    return _optimize(windows, moves, config, init)


def _optimize(windows, moves, config, init):
    w_hidden = init.hidden_weights.copy()
    w_out = init.output_weights.copy()
    best_value = -np.inf
    best = (w_hidden.copy(), w_out.copy())
    iterations = 0
    converged = False
    grad_norm = np.nan
    tol = config.weight_tolerance
    for step in range(config.max_iterations):
        value, grad_hidden, grad_out, _, _ = _wealth_value_and_gradient(
            windows, moves, w_hidden, w_out
        )
        if not (
            np.isfinite(value)
            and np.isfinite(grad_hidden).all()
            and np.isfinite(grad_out).all()
        ):
            raise NumericError(
                f"non-finite objective or gradient at ascent step {step}"
            )
        if value > best_value:
            best_value = value
            best = (w_hidden.copy(), w_out.copy())
        grad_norm = max(np.abs(grad_hidden).max(), np.abs(grad_out).max())
        rate = config.schedule.rate(step)
        inc_hidden = rate * grad_hidden
        inc_out = rate * grad_out
        w_hidden += inc_hidden
        w_out += inc_out
        iterations = step + 1
        if max(np.abs(inc_hidden).max(), np.abs(inc_out).max()) < tol:
            converged = True
            break
    # The loop never scores its last update; one more evaluation settles it.
    _, out = _batch_forward(windows, w_hidden, w_out)
    value = float(np.log1p(out * moves).sum())
    if np.isfinite(value) and value > best_value:
        best_value = value
        best = (w_hidden, w_out)
    weights = NetworkWeights(best[0], best[1])
    return weights, OptimizeReport(iterations, converged, float(grad_norm), best_value)


def run_sosnn(movements: MovementSeries, config: SosnnConfig) -> StrategyRunResult:
    """Run the sequentially optimized strategy over a movement series.

    Rounds 1..warmup only feed history. At round n > warmup the optimizer
    re-fits over the pairs (window before k, x_k) for all completed betting
    rounds k, then the network's output on round n's window is the bet.
    With `warm_start` each refit begins at the previous round's weights;
    otherwise every round draws a fresh uniform init from the seeded stream.
    """
    length = config.net.input_count
    warmup = config.warmup
    xs = movements.values
    if warmup < length:
        raise UsageError(
            f"warmup of {warmup} cannot fill an input window of {length}"
        )
    if len(xs) < warmup + 2:
        raise UsageError(
            f"series of length {len(xs)} is shorter than warmup + 2 = {warmup + 2}"
        )
    rng = np.random.default_rng(config.seed)
    weights = NetworkWeights.uniform(config.net, config.init_scale, rng)
    # Row i holds the input window of round warmup + 1 + i.
    windows = window_matrix(xs, length, warmup + 1, len(xs))
    diagnostics: list[RoundDiagnostics] = []

    def bet(n: int, past: np.ndarray) -> float:
        nonlocal weights
        completed = n - 1 - warmup
        if completed > 0:
            init = (
                weights
                if config.warm_start
                else NetworkWeights.uniform(config.net, config.init_scale, rng)
            )
            try:
                weights, report = _optimize(
                    windows[:completed], xs[warmup : n - 1], config, init
                )
            except NumericError as exc:
                raise NumericError(f"round {n}: {exc}") from None
            diagnostics.append(RoundDiagnostics(n, report.iterations, report.converged))
        else:
            diagnostics.append(RoundDiagnostics(n, 0, True))
        return clamp_ratio(forward(windows[n - warmup - 1], weights).output)

    result = run_game(bet, movements, warmup)
    result.diagnostics = diagnostics
    return result
