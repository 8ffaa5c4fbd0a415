"""Three-layer tanh network and the two gradients that drive the strategies.

The network maps an input window of past movements through one hidden tanh
layer to a single tanh output, the betting ratio. There are no bias terms.
This module provides the forward pass, the cumulative log-wealth objective
and its analytic gradient (used by the sequential optimizer), the squared
prediction error gradient (used by supervised training), and the
search-then-converge learning-rate schedule.

Input windows are most-recent-first: the window feeding round k holds
(x_{k-1}, ..., x_{k-L}).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import UsageError

# Double-precision tanh rounds to exactly +/-1.0 once |I3| exceeds ~19, which
# would let a log-wealth term against a unit movement reach -inf. Nudging the
# output this far inside keeps it strictly inside (-1, 1) for all finite inputs.
OUTPUT_NUDGE = 1e-12
_OUTPUT_CAP = 1.0 - OUTPUT_NUDGE


@dataclass(frozen=True)
class NetworkConfig:
    """Layer sizes: `input_count` window length, `hidden_count` hidden neurons."""

    input_count: int
    hidden_count: int

    def __post_init__(self) -> None:
        if self.input_count < 1 or self.hidden_count < 1:
            raise UsageError(
                f"layer sizes must be >= 1, got {self.input_count}x{self.hidden_count}"
            )


@dataclass
class NetworkWeights:
    """The strategy parameter vector: hidden (M x L) and output (M) weight arrays."""

    hidden_weights: np.ndarray
    output_weights: np.ndarray

    def __post_init__(self) -> None:
        self.hidden_weights = np.asarray(self.hidden_weights, dtype=float)
        self.output_weights = np.asarray(self.output_weights, dtype=float)
        if self.hidden_weights.ndim != 2 or self.output_weights.ndim != 1:
            raise UsageError("weights must be one M x L matrix and one length-M vector")
        if self.hidden_weights.shape[0] != self.output_weights.shape[0]:
            raise UsageError(
                f"hidden rows ({self.hidden_weights.shape[0]}) must match "
                f"output length ({self.output_weights.shape[0]})"
            )
        if not (np.isfinite(self.hidden_weights).all() and np.isfinite(self.output_weights).all()):
            raise UsageError("weights must be finite")

    @property
    def config(self) -> NetworkConfig:
        m, l = self.hidden_weights.shape
        return NetworkConfig(input_count=l, hidden_count=m)

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "NetworkWeights":
        return cls(
            np.zeros((config.hidden_count, config.input_count)),
            np.zeros(config.hidden_count),
        )

    @classmethod
    def uniform(cls, config: NetworkConfig, scale: float, rng: np.random.Generator) -> "NetworkWeights":
        """Entries drawn uniformly from [-scale, scale], hidden layer first."""
        return cls(
            rng.uniform(-scale, scale, (config.hidden_count, config.input_count)),
            rng.uniform(-scale, scale, config.hidden_count),
        )

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(self.hidden_weights.copy(), self.output_weights.copy())


@dataclass
class ForwardTrace:
    """Intermediate quantities of one forward pass, kept for the gradients."""

    hidden_inputs: np.ndarray
    hidden_outputs: np.ndarray
    output_input: float
    output: float


@dataclass
class WeightGradient:
    """Gradient with the per-round chain factors retained for diagnostics.

    `output_deltas[k]` is the scalar factor of round k's output-layer term and
    `hidden_deltas[k]` the per-hidden-neuron factors of its hidden-layer term.
    """

    hidden_weights: np.ndarray
    output_weights: np.ndarray
    output_deltas: np.ndarray
    hidden_deltas: np.ndarray


@dataclass(frozen=True)
class AnnealingSchedule:
    """Search-then-converge decay: rate(s) = initial_rate / (1 + s / decay_steps)."""

    initial_rate: float = 1.0
    decay_steps: float = 5.0

    def __post_init__(self) -> None:
        if not (self.initial_rate > 0 and self.decay_steps > 0):
            raise UsageError("annealing parameters must be strictly positive")

    def rate(self, step: int) -> float:
        if step < 0:
            raise UsageError(f"annealing step must be nonnegative, got {step}")
        return self.initial_rate / (1.0 + step / self.decay_steps)


def input_window(values: Sequence[float], k: int, length: int) -> np.ndarray:
    """Window feeding round k: the `length` movements before it, newest first.

    Rounds are 1-based, so this needs k >= length + 1.
    """
    xs = np.asarray(values, dtype=float)
    if k < length + 1:
        raise UsageError(f"round {k} has fewer than {length} preceding movements")
    if k - 1 > xs.size:
        raise UsageError(f"round {k} lies beyond the {xs.size} known movements")
    return xs[k - 1 - length : k - 1][::-1].copy()


def window_matrix(values: np.ndarray, length: int, k_first: int, k_last: int) -> np.ndarray:
    """Stacked input windows for rounds k_first..k_last (one row per round)."""
    xs = np.asarray(values, dtype=float)
    if k_first < length + 1 or k_last - 1 > xs.size:
        raise UsageError(
            f"rounds {k_first}..{k_last} need movements outside the known range"
        )
    if k_last < k_first:
        return np.empty((0, length))
    rounds = np.arange(k_first, k_last + 1)
    return xs[rounds[:, None] - 2 - np.arange(length)[None, :]]


def forward(window: Sequence[float], weights: NetworkWeights) -> ForwardTrace:
    """Evaluate the network on one input window."""
    u = np.asarray(window, dtype=float)
    m, l = weights.hidden_weights.shape
    if u.shape != (l,):
        raise UsageError(f"window of shape {u.shape} fed to a {m}x{l} network")
    hidden_in = weights.hidden_weights @ u
    hidden_out = np.tanh(hidden_in)
    out_in = float(weights.output_weights @ hidden_out)
    out = float(np.clip(np.tanh(out_in), -_OUTPUT_CAP, _OUTPUT_CAP))
    return ForwardTrace(hidden_in, hidden_out, out_in, out)


def _stack_history(history: Iterable, input_count: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(history)
    if not pairs:
        return np.empty((0, input_count)), np.empty(0)
    windows = np.asarray([np.asarray(w, dtype=float) for w, _ in pairs])
    moves = np.asarray([float(x) for _, x in pairs])
    if windows.ndim != 2 or windows.shape[1] != input_count:
        raise UsageError(
            f"history windows of shape {windows.shape} fed to input width {input_count}"
        )
    if np.abs(moves).max() > 1.0:
        raise UsageError("history movements must lie in [-1, 1]")
    return windows, moves


def _batch_forward(windows, w_hidden, w_out):
    hidden_in = windows @ w_hidden.T
    hidden_out = np.tanh(hidden_in)
    out_in = hidden_out @ w_out
    out = np.clip(np.tanh(out_in), -_OUTPUT_CAP, _OUTPUT_CAP)
    return hidden_out, out


def log_wealth(weights: NetworkWeights, history: Iterable) -> float:
    """Cumulative log capital from betting the network output on each recorded round.

    `history` is a sequence of (input window, movement) pairs.
    """
    windows, moves = _stack_history(history, weights.hidden_weights.shape[1])
    _, out = _batch_forward(windows, weights.hidden_weights, weights.output_weights)
    return float(np.log1p(out * moves).sum())


def _wealth_value_and_gradient(windows, moves, w_hidden, w_out):
    """Fused objective / gradient evaluation over a stacked history."""
    hidden_out, out = _batch_forward(windows, w_hidden, w_out)
    gross = 1.0 + out * moves
    value = float(np.log1p(out * moves).sum())
    out_deltas = moves / gross * (1.0 - out * out)
    grad_out = out_deltas @ hidden_out
    hidden_deltas = out_deltas[:, None] * w_out[None, :] * (1.0 - hidden_out * hidden_out)
    grad_hidden = hidden_deltas.T @ windows
    return value, grad_hidden, grad_out, hidden_deltas, out_deltas


def log_wealth_gradient(weights: NetworkWeights, history: Iterable) -> WeightGradient:
    """Analytic gradient of `log_wealth` with respect to both weight layers.

    Round k contributes out_delta_k * hidden_out_k to the output layer and
    out_delta_k * w_out_i * (1 - hidden_out_ik^2) * window_kj to the hidden
    layer, where out_delta_k = x_k / (1 + f x_k) * (1 - f^2).
    """
    windows, moves = _stack_history(history, weights.hidden_weights.shape[1])
    _, grad_hidden, grad_out, hidden_deltas, out_deltas = _wealth_value_and_gradient(
        windows, moves, weights.hidden_weights, weights.output_weights
    )
    return WeightGradient(grad_hidden, grad_out, out_deltas, hidden_deltas)


def squared_error_gradient(
    weights: NetworkWeights, window: Sequence[float], target: float
) -> WeightGradient:
    """Gradient of E = (target - output)^2 / 2 for one sample.

    The descent update subtracts this gradient.
    """
    if target not in (-1, 0, 1):
        raise UsageError(f"target must be one of -1, 0, 1, got {target!r}")
    trace = forward(window, weights)
    u = np.asarray(window, dtype=float)
    out_delta = -(target - trace.output) * (1.0 - trace.output * trace.output)
    grad_out = out_delta * trace.hidden_outputs
    hidden_delta = (
        out_delta * weights.output_weights * (1.0 - trace.hidden_outputs * trace.hidden_outputs)
    )
    grad_hidden = np.outer(hidden_delta, u)
    return WeightGradient(
        grad_hidden, grad_out, np.array([out_delta]), hidden_delta[None, :]
    )
