"""Synthetic series generation, price-file ingestion, and range normalization.

Generators draw from numpy's PCG64 via `default_rng`, so a given seed yields
the same stream across runs; that seed-to-stream mapping is the package's
reproducibility contract.
"""

from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, UsageError
from .game import MovementSeries

AR1_COEFF = 0.6
ARMA_AR_COEFFS = (0.6, 0.3)
ARMA_MA_COEFF = -0.5


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded standard-normal innovations for the generators."""

    seed: int = 0

    def draw(self, n: int) -> np.ndarray:
        return np.random.default_rng(self.seed).standard_normal(n)


def _resolve_noise(n: int, noise: NoiseSpec, eps) -> np.ndarray:
    if n < 1:
        raise UsageError(f"series length must be >= 1, got {n}")
    if eps is None:
        return noise.draw(n)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (n,):
        raise UsageError(f"need {n} innovations, got shape {eps.shape}")
    return eps


def gen_ar1(n: int, noise: NoiseSpec, x0: float = 0.0, eps=None) -> np.ndarray:
    """First-order autoregression x_t = 0.6 x_{t-1} + eps_t, eps_t ~ N(0, 1).

    Returns x_1..x_n starting from x_0 (zero by default). `eps` overrides the
    seeded innovations, for tests.
    """
    e = _resolve_noise(n, noise, eps)
    out = np.empty(n)
    prev = x0
    for i in range(n):
        prev = AR1_COEFF * prev + e[i]
        out[i] = prev
    return out


def gen_arma21(
    n: int, noise: NoiseSpec, x0: float = 0.0, x_prev: float = 0.0, eps=None
) -> np.ndarray:
    """ARMA recursion x_t = 0.6 x_{t-1} + 0.3 x_{t-2} + eps_t - 0.5 eps_{t-1}.

    Starts from x_0 = x_{-1} = 0 and eps_0 = 0 unless overridden.
    """
    e = _resolve_noise(n, noise, eps)
    a1, a2 = ARMA_AR_COEFFS
    out = np.empty(n)
    prev, prev2, e_prev = x0, x_prev, 0.0
    for i in range(n):
        x = a1 * prev + a2 * prev2 + e[i] + ARMA_MA_COEFF * e_prev
        out[i] = x
        prev2, prev, e_prev = prev, x, e[i]
    return out


def normalize(raw: Sequence[float], rule_source: Sequence[float] | None = None, label: str = "") -> MovementSeries:
    """Scale movements by the largest absolute movement of `rule_source`, then clamp.

    With `rule_source` omitted the series is its own reference, so its extreme
    element maps to exactly +/-1. A disjoint reference window can leave values
    outside [-1, 1]; those are clamped to the boundary.
    """
    raw = np.asarray(raw, dtype=float)
    src = raw if rule_source is None else np.asarray(rule_source, dtype=float)
    reference_max = float(np.abs(src).max()) if src.size else 0.0
    if reference_max == 0.0 or not np.isfinite(reference_max):
        raise DataError("normalization reference window has no nonzero movement")
    return MovementSeries(np.clip(raw / reference_max, -1.0, 1.0), label=label)


@dataclass
class PriceSeries:
    """Daily closing prices with strictly increasing dates."""

    dates: list[datetime.date]
    closes: np.ndarray

    def __post_init__(self) -> None:
        self.closes = np.asarray(self.closes, dtype=float)
        if len(self.dates) != self.closes.size:
            raise DataError(
                f"{len(self.dates)} dates against {self.closes.size} closes"
            )
        if self.closes.size and not ((self.closes > 0) & np.isfinite(self.closes)).all():
            bad = int(np.flatnonzero(~((self.closes > 0) & np.isfinite(self.closes)))[0])
            raise DataError(
                f"close must be positive and finite, got {self.closes[bad]!r} "
                f"on {self.dates[bad]}"
            )
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise DataError(f"dates must be strictly increasing, got {prev} then {cur}")

    def __len__(self) -> int:
        return int(self.closes.size)


def movements_from_prices(prices: PriceSeries) -> np.ndarray:
    """Raw daily movements: first differences of the closes (length len - 1)."""
    if len(prices) < 2:
        raise UsageError("need at least two closes to form movements")
    return np.diff(prices.closes)


def _parse_rows(path, n_values: int):
    """Yield (lineno, date, values) rows from a `date,v1,..` CSV, header tolerated."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 1 + n_values:
                raise DataError(
                    f"{path}:{lineno}: expected {1 + n_values} fields, got {len(row)}"
                )
            try:
                values = [float(v) for v in row[1:]]
            except ValueError:
                if lineno == 1:  # header line: non-numeric value field
                    continue
                raise DataError(f"{path}:{lineno}: non-numeric value in {row!r}") from None
            try:
                day = datetime.date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad ISO date {row[0]!r}") from None
            yield lineno, day, values


def load_prices(path) -> PriceSeries:
    """Read a `date,close` CSV: ISO dates, one record per line, optional header."""
    dates: list[datetime.date] = []
    closes: list[float] = []
    for lineno, day, values in _parse_rows(path, 1):
        close = values[0]
        if not (close > 0 and np.isfinite(close)):
            raise DataError(f"{path}:{lineno}: close must be positive, got {close!r}")
        if dates and day <= dates[-1]:
            raise DataError(
                f"{path}:{lineno}: dates must be strictly increasing, got {day} after {dates[-1]}"
            )
        dates.append(day)
        closes.append(close)
    if not dates:
        raise DataError(f"{path}: no price records found")
    return PriceSeries(dates, np.array(closes))


def load_movement_matrix(path) -> tuple[list[datetime.date], np.ndarray]:
    """Read a multi-asset `date,value_1,...,value_P` movement CSV.

    All values must already lie in [-1, 1]; the column count is fixed by the
    first record.
    """
    dates: list[datetime.date] = []
    rows: list[list[float]] = []
    n_values = None
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise DataError(f"{path}: no movement records found")
        n_values = len(first.split(",")) - 1
    if n_values < 1:
        raise DataError(f"{path}: records need at least one value column")
    for lineno, day, values in _parse_rows(path, n_values):
        if max(abs(v) for v in values) > 1.0:
            raise DataError(f"{path}:{lineno}: movements must lie in [-1, 1]")
        if dates and day <= dates[-1]:
            raise DataError(
                f"{path}:{lineno}: dates must be strictly increasing, got {day} after {dates[-1]}"
            )
        dates.append(day)
        rows.append(values)
    if not dates:
        raise DataError(f"{path}: no movement records found")
    return dates, np.asarray(rows, dtype=float)


def write_movements(path, dates: Sequence[datetime.date], values: np.ndarray) -> None:
    """Write a movement series as `date,value_1,...` lines (the loaders' format)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for day, row in zip(dates, values):
            fields = ",".join(format(v, ".12g") for v in row)
            fh.write(f"{day.isoformat()},{fields}\n")
