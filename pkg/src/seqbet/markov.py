"""Markovian proportional betting.

Order 0 bets one constant ratio; orders 1 and 2 condition the ratio on the
sign pattern of the last one or two movements (zero counts as "up"). Every
bucket's ratio is re-fit each round by maximizing the log wealth its past
movements would have produced, a strictly concave one-dimensional problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UsageError
from .game import RATIO_CAP, MovementSeries, StrategyRunResult, run_game

BUCKET_LABELS = {0: ("all",), 1: ("+", "-"), 2: ("++", "+-", "-+", "--")}


@dataclass(frozen=True)
class MarkovOrder:
    """How many preceding movement signs condition the bet (0, 1, or 2)."""

    order: int

    def __post_init__(self) -> None:
        if self.order not in (0, 1, 2):
            raise UsageError(f"order must be 0, 1, or 2, got {self.order}")

    @property
    def bucket_count(self) -> int:
        return 2**self.order


def _as_order(order) -> MarkovOrder:
    return order if isinstance(order, MarkovOrder) else MarkovOrder(int(order))


def bucket_index(context: Sequence[float], order) -> int:
    """Bucket of a round given the `order` movements before it, oldest first.

    Nonnegative movements count as "+"; buckets are ordered (++, +-, -+, --)
    for order 2 and (+, -) for order 1.
    """
    order = _as_order(order)
    ctx = np.asarray(context, dtype=float)
    if ctx.shape != (order.order,):
        raise UsageError(
            f"order-{order.order} context needs exactly {order.order} movements, "
            f"got shape {ctx.shape}"
        )
    index = 0
    for value in ctx:
        index = 2 * index + (1 if value < 0 else 0)
    return index


def _wealth_slope(moves: np.ndarray, alpha: float) -> float:
    return float((moves / (1.0 + alpha * moves)).sum())


def optimize_bucket(movements_in_bucket: Sequence[float]) -> float:
    """Log-wealth-optimal constant ratio for one bucket's past movements.

    Maximizes sum(log(1 + a*x)) over [-RATIO_CAP, RATIO_CAP]; strictly concave
    whenever some movement is nonzero, so the maximizer is unique. An empty or
    all-zero bucket bets 0.
    """
    moves = np.asarray(list(movements_in_bucket), dtype=float)
    if moves.size and np.abs(moves).max() > 1.0:
        raise UsageError("bucket movements must lie in [-1, 1]")
    if moves.size == 0 or not moves.any():
        return 0.0
    return _maximize_log_wealth(moves)


def _maximize_log_wealth(moves: np.ndarray, tol: float = 1e-10) -> float:
    lo, hi = -RATIO_CAP, RATIO_CAP
    # A slope pointing outward at a bound means the objective is monotone
    # over the whole interval; the bound itself is the maximizer.
    if _wealth_slope(moves, hi) >= 0.0:
        return hi
    if _wealth_slope(moves, lo) <= 0.0:
        return lo
    # Strict concavity makes the slope strictly decreasing, so bisecting on
    # its sign brackets the interior maximizer to `tol`. Comparing objective
    # values instead (golden section) stalls near sqrt(eps) because the
    # objective is flat to machine precision around its maximum.
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _wealth_slope(moves, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def run_mkv(movements: MovementSeries, order, warmup: int) -> StrategyRunResult:
    """Bet the per-bucket optimal ratios, re-fit on all past rounds each round.

    At round n every past round k <= n-1 whose sign context exists (k > order)
    lands in one bucket; round n bets the freshly optimized ratio of its own
    context's bucket. Fully deterministic.
    """
    order = _as_order(order)
    if warmup < order.order:
        raise UsageError(
            f"warmup of {warmup} cannot provide an order-{order.order} sign context"
        )
    xs = movements.values
    if len(xs) <= warmup:
        raise UsageError(
            f"series of length {len(xs)} leaves no rounds after a warmup of {warmup}"
        )
    buckets: list[list[float]] = [[] for _ in range(order.bucket_count)]
    ratios = [0.0] * order.bucket_count
    stale = [False] * order.bucket_count
    next_k = order.order + 1  # earliest round with a full sign context

    def context(k: int) -> np.ndarray:
        return xs[k - 1 - order.order : k - 1]

    def bet(n: int, past: np.ndarray) -> float:
        nonlocal next_k
        while next_k <= n - 1:
            b = bucket_index(context(next_k), order)
            buckets[b].append(float(xs[next_k - 1]))
            stale[b] = True
            next_k += 1
        b = bucket_index(context(n), order)
        if stale[b]:
            ratios[b] = optimize_bucket(buckets[b])
            stale[b] = False
        return ratios[b]

    return run_game(bet, movements, warmup)
