"""Multi-asset extension of the network strategy.

One shared hidden layer feeds P output neurons, one betting ratio per asset,
and capital updates by 1 plus the exposure-weighted sum of the P movements.
A per-output tanh keeps each ratio inside (-1, 1) but not their total
exposure, so ratio vectors are rescaled whenever the sum of their magnitudes
would reach 1; that cap and the multi-output log-wealth gradient are
validated against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericError, StrategyViolationError, UsageError
from .game import RATIO_MARGIN, checkpoint_rounds
from .network import NetworkConfig, _OUTPUT_CAP
from .sosnn import OptimizeReport, SosnnConfig


@dataclass
class PortfolioWeights:
    """Shared hidden layer (M x L) and one output row (M) per asset (P x M)."""

    hidden_weights: np.ndarray
    output_weights: np.ndarray

    def __post_init__(self) -> None:
        self.hidden_weights = np.asarray(self.hidden_weights, dtype=float)
        self.output_weights = np.asarray(self.output_weights, dtype=float)
        if self.hidden_weights.ndim != 2 or self.output_weights.ndim != 2:
            raise UsageError("portfolio weights must be M x L and P x M matrices")
        if self.hidden_weights.shape[0] != self.output_weights.shape[1]:
            raise UsageError(
                f"hidden rows ({self.hidden_weights.shape[0]}) must match output "
                f"columns ({self.output_weights.shape[1]})"
            )
        if not (np.isfinite(self.hidden_weights).all() and np.isfinite(self.output_weights).all()):
            raise UsageError("weights must be finite")

    @property
    def asset_count(self) -> int:
        return int(self.output_weights.shape[0])

    @classmethod
    def uniform(
        cls, config: NetworkConfig, asset_count: int, scale: float, rng: np.random.Generator
    ) -> "PortfolioWeights":
        """Entries uniform in [-scale, scale]; for one asset the draw order and
        values match the single-asset init on the same stream."""
        return cls(
            rng.uniform(-scale, scale, (config.hidden_count, config.input_count)),
            rng.uniform(-scale, scale, (asset_count, config.hidden_count)),
        )

    def copy(self) -> "PortfolioWeights":
        return PortfolioWeights(self.hidden_weights.copy(), self.output_weights.copy())


def forward_portfolio(window: Sequence[float], weights: PortfolioWeights) -> np.ndarray:
    """Ratio vector for one input window: the hidden layer is evaluated once
    and shared by every output neuron."""
    u = np.asarray(window, dtype=float)
    m, l = weights.hidden_weights.shape
    if u.shape != (l,):
        raise UsageError(f"window of shape {u.shape} fed to a {m}x{l} network")
    hidden_out = np.tanh(weights.hidden_weights @ u)
    # Per-asset dot products keep the one-asset case numerically identical to
    # the single-output forward pass.
    out_in = np.array([row @ hidden_out for row in weights.output_weights])
    return np.clip(np.tanh(out_in), -_OUTPUT_CAP, _OUTPUT_CAP)


def rescale_exposure(ratios: Sequence[float], margin: float = RATIO_MARGIN) -> np.ndarray:
    """Scale a ratio vector so the total exposure sum(|ratio|) stays below 1."""
    ratios = np.asarray(ratios, dtype=float)
    exposure = float(np.abs(ratios).sum())
    cap = 1.0 - margin
    if exposure >= cap:
        return ratios * (cap / exposure)
    return ratios.copy()


def capital_step_portfolio(
    capital_prev: float, ratios: Sequence[float], x: Sequence[float]
) -> float:
    """One multi-asset capital update: capital_prev * (1 + sum(ratio_h * x_h))."""
    ratios = np.asarray(ratios, dtype=float)
    x = np.asarray(x, dtype=float)
    if ratios.shape != x.shape or ratios.ndim != 1:
        raise UsageError(
            f"ratio vector {ratios.shape} against movement vector {x.shape}"
        )
    if not (capital_prev > 0 and np.isfinite(capital_prev)):
        raise UsageError(f"capital must be positive and finite, got {capital_prev!r}")
    if x.size and np.abs(x).max() > 1.0:
        raise UsageError("movements must lie in [-1, 1]")
    exposure = float(np.abs(ratios).sum())
    if not exposure < 1.0:
        raise StrategyViolationError(
            f"total exposure {exposure} must stay below 1 to exclude bankruptcy"
        )
    return capital_prev * (1.0 + float(ratios @ x))


def _batch_forward_portfolio(windows, w_hidden, w_out):
    hidden_out = np.tanh(windows @ w_hidden.T)
    out_in = np.stack([hidden_out @ row for row in w_out], axis=1)
    out = np.clip(np.tanh(out_in), -_OUTPUT_CAP, _OUTPUT_CAP)
    return hidden_out, out


def _stack_panel_history(history: Iterable, input_count: int, asset_count: int):
    pairs = list(history)
    if not pairs:
        return np.empty((0, input_count)), np.empty((0, asset_count))
    windows = np.asarray([np.asarray(w, dtype=float) for w, _ in pairs])
    moves = np.asarray([np.asarray(x, dtype=float) for _, x in pairs])
    if windows.ndim != 2 or windows.shape[1] != input_count:
        raise UsageError(f"history windows of shape {windows.shape} fed to width {input_count}")
    if moves.ndim != 2 or moves.shape[1] != asset_count:
        raise UsageError(
            f"history movements of shape {moves.shape} fed to {asset_count} assets"
        )
    if np.abs(moves).max() > 1.0:
        raise UsageError("history movements must lie in [-1, 1]")
    return windows, moves


def log_wealth_portfolio(weights: PortfolioWeights, history: Iterable) -> float:
    """Cumulative log capital over (window, movement-vector) pairs.

    Returns -inf when some recorded round's gross return is nonpositive: with
    several assets the raw output vector can push the summed exposure past
    the bankruptcy boundary, unlike the single-output case.
    """
    windows, moves = _stack_panel_history(
        history, weights.hidden_weights.shape[1], weights.asset_count
    )
    return _portfolio_value(windows, moves, weights.hidden_weights, weights.output_weights)


def _portfolio_value(windows, moves, w_hidden, w_out) -> float:
    _, out = _batch_forward_portfolio(windows, w_hidden, w_out)
    summed = (out * moves).sum(axis=1)
    if summed.size and summed.min() <= -1.0:
        return -np.inf
    return float(np.log1p(summed).sum())


def _portfolio_value_and_gradient(windows, moves, w_hidden, w_out):
    """Objective and gradient at a valid iterate (all gross returns positive)."""
    hidden_out, out = _batch_forward_portfolio(windows, w_hidden, w_out)
    summed = (out * moves).sum(axis=1)
    value = float(np.log1p(summed).sum())
    gross = 1.0 + summed
    # Shared per-round multiplier x_kh / (1 + sum_g f_g x_kg), asset by asset.
    out_deltas = moves / gross[:, None] * (1.0 - out * out)
    grad_out = np.stack([out_deltas[:, h] @ hidden_out for h in range(w_out.shape[0])])
    hidden_mult = (out_deltas @ w_out) * (1.0 - hidden_out * hidden_out)
    grad_hidden = hidden_mult.T @ windows
    return value, grad_hidden, grad_out


def log_wealth_gradient_portfolio(
    weights: PortfolioWeights, history: Iterable
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of `log_wealth_portfolio` as (hidden, output) arrays."""
    windows, moves = _stack_panel_history(
        history, weights.hidden_weights.shape[1], weights.asset_count
    )
    _, grad_hidden, grad_out = _portfolio_value_and_gradient(
        windows, moves, weights.hidden_weights, weights.output_weights
    )
    return grad_hidden, grad_out


def _optimize_portfolio(windows, moves, config: SosnnConfig, init: PortfolioWeights):
    w_hidden = init.hidden_weights.copy()
    w_out = init.output_weights.copy()
    # A warm start fitted before the newest round arrived can bankrupt that
    # round (several saturated outputs against unit movements), where the
    # objective is undefined. Shrinking the output layer toward the zero
    # policy always restores feasibility; the zero policy earns exactly 0.
    for _ in range(128):
        if np.isfinite(_portfolio_value(windows, moves, w_hidden, w_out)):
            break
        w_out *= 0.5
    else:
        raise NumericError("could not project the initial weights to solvency")
    best_value = -np.inf
    best = (w_hidden.copy(), w_out.copy())
    iterations = 0
    converged = False
    grad_norm = np.nan
    for step in range(config.max_iterations):
        value, grad_hidden, grad_out = _portfolio_value_and_gradient(
            windows, moves, w_hidden, w_out
        )
        if not (np.isfinite(grad_hidden).all() and np.isfinite(grad_out).all()):
            raise NumericError(f"non-finite gradient at ascent step {step}")
        if value > best_value:
            best_value = value
            best = (w_hidden.copy(), w_out.copy())
        grad_norm = max(np.abs(grad_hidden).max(), np.abs(grad_out).max())
        rate = config.schedule.rate(step)
        inc_hidden = rate * grad_hidden
        inc_out = rate * grad_out
        # Shrink any step that would cross into the region where some round's
        # gross return is nonpositive and the objective undefined; a single
        # asset can never get there (|f| < 1, |x| <= 1).
        for _ in range(64):
            if np.isfinite(
                _portfolio_value(windows, moves, w_hidden + inc_hidden, w_out + inc_out)
            ):
                break
            inc_hidden = 0.5 * inc_hidden
            inc_out = 0.5 * inc_out
        else:
            raise NumericError(f"could not find a solvent ascent step at {step}")
        w_hidden += inc_hidden
        w_out += inc_out
        iterations = step + 1
        if max(np.abs(inc_hidden).max(), np.abs(inc_out).max()) < config.weight_tolerance:
            converged = True
            break
    value = _portfolio_value(windows, moves, w_hidden, w_out)
    if np.isfinite(value) and value > best_value:
        best_value = value
        best = (w_hidden, w_out)
    weights = PortfolioWeights(best[0], best[1])
    return weights, OptimizeReport(iterations, converged, float(grad_norm), best_value)


@dataclass
class PortfolioRunResult:
    """Per-round ratio vectors and the log capital path of a multi-asset run."""

    ratios: np.ndarray  # (rounds, assets); zero rows through the warmup
    log_capital_path: np.ndarray
    warmup: int
    checkpoints: dict[int, float] | None = None

    def __post_init__(self) -> None:
        if self.checkpoints is None:
            marks = checkpoint_rounds(len(self.log_capital_path) - self.warmup)
            self.checkpoints = {
                r: float(self.log_capital_path[self.warmup + r - 1]) for r in marks
            }

    @property
    def final_log_capital(self) -> float:
        return float(self.log_capital_path[-1])


def run_sosnn_portfolio(
    movements: np.ndarray, config: SosnnConfig, label: str = ""
) -> PortfolioRunResult:
    """Sequentially optimized betting over a (rounds x assets) movement panel.

    Mirrors the single-asset run round for round: shared input windows are
    built from the first asset's movements, refits start from the previous
    optimum (or fresh draws), and the ratio vector is exposure-rescaled
    before betting.
    """
    moves = np.asarray(movements, dtype=float)
    if moves.ndim != 2 or moves.shape[1] < 1:
        raise UsageError("movement panel must be a (rounds x assets) matrix")
    if moves.size and np.abs(moves).max() > 1.0:
        raise UsageError("movements must lie in [-1, 1]")
    n_rounds, n_assets = moves.shape
    length = config.net.input_count
    warmup = config.warmup
    if warmup < length:
        raise UsageError(f"warmup of {warmup} cannot fill an input window of {length}")
    if n_rounds < warmup + 2:
        raise UsageError(
            f"panel of {n_rounds} rounds is shorter than warmup + 2 = {warmup + 2}"
        )
    rng = np.random.default_rng(config.seed)
    weights = PortfolioWeights.uniform(config.net, n_assets, config.init_scale, rng)
    driver = moves[:, 0]
    rounds = np.arange(warmup + 1, n_rounds + 1)
    windows = driver[rounds[:, None] - 2 - np.arange(length)[None, :]]

    ratios = np.zeros((n_rounds, n_assets))
    path = np.empty(n_rounds)
    log_k = 0.0
    for i in range(n_rounds):
        n = i + 1
        if n > warmup:
            completed = n - 1 - warmup
            if completed > 0:
                init = (
                    weights
                    if config.warm_start
                    else PortfolioWeights.uniform(config.net, n_assets, config.init_scale, rng)
                )
                weights, _ = _optimize_portfolio(
                    windows[:completed], moves[warmup : n - 1], config, init
                )
            bet = rescale_exposure(forward_portfolio(windows[n - warmup - 1], weights))
            ratios[i] = bet
            log_k += float(np.log1p(bet @ moves[i]))
        path[i] = log_k
    return PortfolioRunResult(ratios=ratios, log_capital_path=path, warmup=warmup)
