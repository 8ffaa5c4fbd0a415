"""Experiment configuration, grid execution, and artifact emission.

`simulate` runs the selected strategies on generated series, `backtest` on a
price file with date-windowed normalization, `compare` merges the summary
tables of finished runs. Every emitted number is a pure function of the
configuration and seed: replicate and strategy seeds derive from the base
seed through numpy SeedSequence, tasks are written in a fixed order, and
floats are formatted with a fixed spec, so reruns are byte-identical.
"""

from __future__ import annotations

import configparser
import datetime
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    NoiseSpec,
    gen_ar1,
    gen_arma21,
    load_prices,
    movements_from_prices,
    normalize,
    write_movements,
)
from .errors import ConfigError, SeqbetError, UsageError
from .game import MovementSeries, checkpoint_rounds
from .markov import run_mkv
from .network import AnnealingSchedule, NetworkConfig
from .nnbp import NnbpConfig, run_nnbp, train
from .sosnn import SosnnConfig, run_sosnn

STRATEGY_NAMES = ("sosnn", "nnbp", "mkv0", "mkv1", "mkv2")
FAILURE_MARK = "---"

# Fixed role tags for seed derivation; changing these would change every stream.
_ROLE_DATA = 0
_ROLE_SOSNN = 1
_ROLE_NNBP_DATA = 2
_ROLE_NNBP_INIT = 3


def derive_seed(base: int, *parts: int) -> int:
    """Deterministic 64-bit child seed for (base, replicate, role, ...)."""
    seq = np.random.SeedSequence([int(base), *[int(p) for p in parts]])
    return int(seq.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class SosnnGridSettings:
    input_counts: tuple[int, ...]
    hidden_counts: tuple[int, ...]
    initial_rate: float = 1.0
    decay_steps: float = 5.0
    weight_tolerance: float = 1e-4
    max_iterations: int = 10_000
    init_scale: float = 0.1
    warm_start: bool = True


@dataclass(frozen=True)
class NnbpSettings:
    input_count: int
    hidden_count: int
    learning_rate: float = 0.07
    error_threshold: float = 1e-2
    max_steps: int = 600_000
    init_scale: float = 0.1
    training_rounds: int = 300


@dataclass(frozen=True)
class GeneratorData:
    generator: str  # "ar1" | "arma21"


@dataclass(frozen=True)
class BacktestData:
    price_file: Path
    investing: tuple[datetime.date, datetime.date]
    normalization: tuple[datetime.date, datetime.date]
    training: tuple[datetime.date, datetime.date] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int
    warmup: int
    replicates: int
    strategies: tuple[str, ...]
    data: GeneratorData | BacktestData
    rounds: int | None = None
    sosnn: SosnnGridSettings | None = None
    nnbp: NnbpSettings | None = None
    raw: dict = field(default_factory=dict, hash=False, compare=False)


class _SectionReader:
    """Typed access to one INI section with unknown-key detection."""

    def __init__(self, name: str, items: dict[str, str]):
        self.name = name
        self.items = dict(items)
        self.seen: set[str] = set()

    def _fetch(self, key, default, required):
        self.seen.add(key)
        if key not in self.items:
            if required:
                raise ConfigError(f"[{self.name}] is missing required key '{key}'")
            return None
        return self.items[key].strip()

    def get_str(self, key, default=None, required=False):
        value = self._fetch(key, default, required)
        return default if value is None else value

    def get_int(self, key, default=None, required=False):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be an integer, got {value!r}") from None

    def get_float(self, key, default=None, required=False):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a number, got {value!r}") from None

    def get_bool(self, key, default=None, required=False):
        value = self._fetch(key, default, required)
        if value is None:
            return default
        low = value.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"[{self.name}] {key} must be a boolean, got {value!r}")

    def get_int_list(self, key, required=False):
        value = self._fetch(key, None, required)
        if value is None:
            return None
        try:
            items = tuple(int(v.strip()) for v in value.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a comma list of integers") from None
        if not items:
            raise ConfigError(f"[{self.name}] {key} must not be empty")
        return items

    def get_str_list(self, key, required=False):
        value = self._fetch(key, None, required)
        if value is None:
            return None
        items = tuple(v.strip().lower() for v in value.split(",") if v.strip())
        if not items:
            raise ConfigError(f"[{self.name}] {key} must not be empty")
        return items

    def get_date(self, key, required=False):
        value = self._fetch(key, None, required)
        if value is None:
            return None
        try:
            return datetime.date.fromisoformat(value)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be an ISO date, got {value!r}") from None

    def reject_unknown(self):
        unknown = set(self.items) - self.seen
        if unknown:
            raise ConfigError(f"[{self.name}] has unknown keys: {sorted(unknown)}")


def parse_config(path, seed_override: int | None = None) -> ExperimentConfig:
    """Read and validate a declarative experiment file (INI key-value format)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    known_sections = {"experiment", "data", "sosnn", "nnbp"}
    unknown = set(parser.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "experiment" not in parser or "data" not in parser:
        raise ConfigError("config needs [experiment] and [data] sections")

    exp = _SectionReader("experiment", parser["experiment"])
    mode = exp.get_str("mode", required=True).lower()
    if mode not in ("simulate", "backtest"):
        raise ConfigError(f"mode must be 'simulate' or 'backtest', got {mode!r}")
    seed = seed_override if seed_override is not None else exp.get_int("seed")
    exp.seen.add("seed")
    if seed is None:
        raise ConfigError("a seed is required ([experiment] seed or --seed)")
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    warmup = exp.get_int("warmup", default=20)
    if warmup < 0:
        raise ConfigError("warmup must be nonnegative")
    replicates = exp.get_int("replicates", default=1)
    if replicates < 1:
        raise ConfigError("replicates must be >= 1")
    strategies = exp.get_str_list("strategies", required=True)
    for name in strategies:
        if name not in STRATEGY_NAMES:
            raise ConfigError(
                f"unknown strategy {name!r}; choose from {', '.join(STRATEGY_NAMES)}"
            )
    if len(set(strategies)) != len(strategies):
        raise ConfigError("strategies must not repeat")
    for name in strategies:
        if name.startswith("mkv") and int(name[-1]) > warmup:
            raise ConfigError(
                f"{name} needs a warmup of at least {name[-1]}, got {warmup}"
            )

    rounds = None
    data = _SectionReader("data", parser["data"])
    if mode == "simulate":
        rounds = exp.get_int("rounds", default=300)
        if rounds < 2:
            raise ConfigError("rounds must be >= 2")
        generator = data.get_str("generator", required=True).lower()
        if generator not in ("ar1", "arma21"):
            raise ConfigError(f"generator must be 'ar1' or 'arma21', got {generator!r}")
        data_spec: GeneratorData | BacktestData = GeneratorData(generator)
    else:
        price_file = data.get_str("price_file", required=True)
        resolved = (path.parent / price_file).resolve()
        investing = (
            data.get_date("investing_start", required=True),
            data.get_date("investing_end", required=True),
        )
        normalization = (
            data.get_date("normalization_start", required=True),
            data.get_date("normalization_end", required=True),
        )
        training = None
        t_start = data.get_date("training_start")
        t_end = data.get_date("training_end")
        if (t_start is None) != (t_end is None):
            raise ConfigError("training_start and training_end must be given together")
        if t_start is not None:
            training = (t_start, t_end)
        for label, (start, end) in (
            ("investing", investing),
            ("normalization", normalization),
            *((("training", training),) if training else ()),
        ):
            if end < start:
                raise ConfigError(f"{label} range ends before it starts")
        data_spec = BacktestData(resolved, investing, normalization, training)
    exp.reject_unknown()
    data.reject_unknown()

    sosnn_settings = None
    if "sosnn" in strategies:
        if "sosnn" not in parser:
            raise ConfigError("strategy sosnn selected but [sosnn] section is missing")
        sec = _SectionReader("sosnn", parser["sosnn"])
        sosnn_settings = SosnnGridSettings(
            input_counts=sec.get_int_list("input_counts", required=True),
            hidden_counts=sec.get_int_list("hidden_counts", required=True),
            initial_rate=sec.get_float("initial_rate", default=1.0),
            decay_steps=sec.get_float("decay_steps", default=5.0),
            weight_tolerance=sec.get_float("weight_tolerance", default=1e-4),
            max_iterations=sec.get_int("max_iterations", default=10_000),
            init_scale=sec.get_float("init_scale", default=0.1),
            warm_start=sec.get_bool("warm_start", default=True),
        )
        sec.reject_unknown()
        if min(sosnn_settings.input_counts) < 1 or min(sosnn_settings.hidden_counts) < 1:
            raise ConfigError("[sosnn] layer sizes must be >= 1")
        if max(sosnn_settings.input_counts) > warmup:
            raise ConfigError(
                f"[sosnn] largest input window {max(sosnn_settings.input_counts)} "
                f"exceeds the warmup of {warmup}"
            )
    elif "sosnn" in parser:
        raise ConfigError("[sosnn] section present but strategy not selected")

    nnbp_settings = None
    if "nnbp" in strategies:
        if "nnbp" not in parser:
            raise ConfigError("strategy nnbp selected but [nnbp] section is missing")
        sec = _SectionReader("nnbp", parser["nnbp"])
        nnbp_settings = NnbpSettings(
            input_count=sec.get_int("input_count", required=True),
            hidden_count=sec.get_int("hidden_count", required=True),
            learning_rate=sec.get_float("learning_rate", default=0.07),
            error_threshold=sec.get_float("error_threshold", default=1e-2),
            max_steps=sec.get_int("max_steps", default=600_000),
            init_scale=sec.get_float("init_scale", default=0.1),
            training_rounds=sec.get_int("training_rounds", default=300),
        )
        sec.reject_unknown()
        if nnbp_settings.input_count < 1 or nnbp_settings.hidden_count < 1:
            raise ConfigError("[nnbp] layer sizes must be >= 1")
        if nnbp_settings.input_count > warmup:
            raise ConfigError(
                f"[nnbp] input window {nnbp_settings.input_count} exceeds the warmup of {warmup}"
            )
        if mode == "simulate" and nnbp_settings.training_rounds <= nnbp_settings.input_count:
            raise ConfigError("[nnbp] training_rounds must exceed input_count")
        if mode == "backtest":
            if data_spec.training is None:
                raise ConfigError("nnbp needs a training date range in backtest mode")
            t0, t1 = data_spec.training
            i0, i1 = data_spec.investing
            if not (t1 < i0 or i1 < t0):
                raise ConfigError("training and investing ranges must be disjoint")
    elif "nnbp" in parser:
        raise ConfigError("[nnbp] section present but strategy not selected")

    raw = {name: dict(parser[name]) for name in parser.sections()}
    return ExperimentConfig(
        mode=mode,
        seed=seed,
        warmup=warmup,
        replicates=replicates,
        strategies=strategies,
        data=data_spec,
        rounds=rounds,
        sosnn=sosnn_settings,
        nnbp=nnbp_settings,
        raw=raw,
    )


# ---------------------------------------------------------------------------
# Tasks


@dataclass
class TaskSpec:
    """Everything one worker needs to produce one (cell, replicate) result."""

    kind: str  # "sosnn" | "nnbp" | "mkv"
    label: str
    replicate: int
    warmup: int
    params: dict
    generator: str | None = None
    rounds: int | None = None
    data_seed: int | None = None
    movements: np.ndarray | None = None  # backtest: shared normalized series
    training_movements: np.ndarray | None = None


@dataclass
class TaskResult:
    label: str
    replicate: int
    ok: bool
    reason: str = ""
    ratios: np.ndarray | None = None
    log_capital_path: np.ndarray | None = None
    checkpoints: dict[int, float] | None = None
    mean_iterations: float | None = None
    converged_fraction: float | None = None
    training_error: float | None = None
    error_per_epoch: list[float] | None = None
    per_day_error: np.ndarray | None = None
    seconds: float = 0.0


def _task_movements(spec: TaskSpec) -> MovementSeries:
    if spec.movements is not None:
        return MovementSeries(spec.movements, label=f"backtest rep{spec.replicate}")
    gen = gen_ar1 if spec.generator == "ar1" else gen_arma21
    raw = gen(spec.warmup + spec.rounds, NoiseSpec(seed=spec.data_seed))
    return normalize(raw, label=f"{spec.generator} rep{spec.replicate}")


def _run_task(spec: TaskSpec) -> TaskResult:
    start = time.monotonic()
    try:
        movements = _task_movements(spec)
        if spec.kind == "mkv":
            run = run_mkv(movements, spec.params["order"], spec.warmup)
            result = TaskResult(
                spec.label, spec.replicate, True,
                ratios=run.ratios, log_capital_path=run.log_capital_path,
                checkpoints=run.checkpoints,
            )
        elif spec.kind == "sosnn":
            p = spec.params
            config = SosnnConfig(
                net=NetworkConfig(p["input_count"], p["hidden_count"]),
                schedule=AnnealingSchedule(p["initial_rate"], p["decay_steps"]),
                weight_tolerance=p["weight_tolerance"],
                max_iterations=p["max_iterations"],
                warmup=spec.warmup,
                init_scale=p["init_scale"],
                seed=p["seed"],
                warm_start=p["warm_start"],
            )
            run = run_sosnn(movements, config)
            iters = [d.iterations for d in run.diagnostics]
            conv = [d.converged for d in run.diagnostics]
            result = TaskResult(
                spec.label, spec.replicate, True,
                ratios=run.ratios, log_capital_path=run.log_capital_path,
                checkpoints=run.checkpoints,
                mean_iterations=float(np.mean(iters)) if iters else 0.0,
                converged_fraction=float(np.mean(conv)) if conv else 1.0,
            )
        elif spec.kind == "nnbp":
            p = spec.params
            config = NnbpConfig(
                net=NetworkConfig(p["input_count"], p["hidden_count"]),
                learning_rate=p["learning_rate"],
                error_threshold=p["error_threshold"],
                max_steps=p["max_steps"],
                seed=p["seed"],
                init_scale=p["init_scale"],
            )
            if spec.training_movements is not None:
                training = MovementSeries(spec.training_movements, label="training window")
            else:
                gen = gen_ar1 if spec.generator == "ar1" else gen_arma21
                raw = gen(p["training_rounds"], NoiseSpec(seed=p["train_data_seed"]))
                training = normalize(raw, label=f"{spec.generator} training rep{spec.replicate}")
            weights, diag = train(training, config)
            run = run_nnbp(weights, movements, spec.warmup)
            result = TaskResult(
                spec.label, spec.replicate, True,
                ratios=run.ratios, log_capital_path=run.log_capital_path,
                checkpoints=run.checkpoints,
                training_error=diag.final_error,
                error_per_epoch=diag.error_per_epoch,
                per_day_error=diag.per_day_error,
            )
        else:  # pragma: no cover - specs are built in-module
            raise UsageError(f"unknown task kind {spec.kind!r}")
    except SeqbetError as exc:
        result = TaskResult(spec.label, spec.replicate, False, reason=str(exc))
    result.seconds = time.monotonic() - start
    return result


def _build_cells(config: ExperimentConfig) -> list[tuple[str, str, dict]]:
    """Cell list as (kind, label, params) in deterministic order."""
    cells = []
    for name in config.strategies:
        if name == "sosnn":
            s = config.sosnn
            for lin in s.input_counts:
                for hid in s.hidden_counts:
                    cells.append((
                        "sosnn",
                        f"sosnn_{lin}x{hid}",
                        {
                            "input_count": lin,
                            "hidden_count": hid,
                            "initial_rate": s.initial_rate,
                            "decay_steps": s.decay_steps,
                            "weight_tolerance": s.weight_tolerance,
                            "max_iterations": s.max_iterations,
                            "init_scale": s.init_scale,
                            "warm_start": s.warm_start,
                        },
                    ))
        elif name == "nnbp":
            p = config.nnbp
            cells.append((
                "nnbp",
                f"nnbp_{p.input_count}x{p.hidden_count}",
                {
                    "input_count": p.input_count,
                    "hidden_count": p.hidden_count,
                    "learning_rate": p.learning_rate,
                    "error_threshold": p.error_threshold,
                    "max_steps": p.max_steps,
                    "init_scale": p.init_scale,
                    "training_rounds": p.training_rounds,
                },
            ))
        else:
            cells.append(("mkv", name, {"order": int(name[-1])}))
    return cells


def _execute(specs: list[TaskSpec], jobs: int) -> list[TaskResult]:
    if jobs <= 1 or len(specs) <= 1:
        return [_run_task(spec) for spec in specs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, specs, chunksize=1))


# ---------------------------------------------------------------------------
# Artifact writing


@dataclass
class CellSummary:
    label: str
    ok: bool
    reason: str
    means: dict[int, float]
    mean_iterations: float | None
    converged_fraction: float | None
    training_error: float | None
    seconds: float


@dataclass
class RunReport:
    """In-memory view of a finished run; timings never reach the artifacts."""

    out_dir: Path
    checkpoints: list[int]
    cells: list[CellSummary]

    @property
    def total_seconds(self) -> float:
        return sum(c.seconds for c in self.cells)

    def cell(self, label: str) -> CellSummary:
        for c in self.cells:
            if c.label == label:
                return c
        raise KeyError(label)


def _fmt(value: float) -> str:
    # Shortest decimal that round-trips the exact double, so values parsed
    # back from any artifact equal the computed ones bit for bit.
    return repr(float(value))


def _write_series(out_dir: Path, result: TaskResult) -> None:
    series_dir = out_dir / "series"
    series_dir.mkdir(parents=True, exist_ok=True)
    path = series_dir / f"{result.label}__rep{result.replicate}.csv"
    lines = ["round,alpha,log_capital"]
    for i, (alpha, logk) in enumerate(zip(result.ratios, result.log_capital_path), start=1):
        lines.append(f"{i},{_fmt(alpha)},{_fmt(logk)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_nnbp_diagnostics(out_dir: Path, result: TaskResult) -> None:
    diag_dir = out_dir / "diagnostics"
    diag_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{result.label}__rep{result.replicate}"
    lines = ["epoch,training_error"]
    lines += [f"{i},{_fmt(e)}" for i, e in enumerate(result.error_per_epoch, start=1)]
    (diag_dir / f"{stem}__epochs.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = ["day,error"]
    lines += [f"{i},{_fmt(e)}" for i, e in enumerate(result.per_day_error, start=1)]
    (diag_dir / f"{stem}__days.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _summarize_cells(
    cells: list[tuple[str, str, dict]],
    results: dict[tuple[str, int], TaskResult],
    replicates: int,
    checkpoints: list[int],
) -> list[CellSummary]:
    summaries = []
    for _, label, _ in cells:
        cell_results = [results[(label, r)] for r in range(replicates)]
        seconds = sum(r.seconds for r in cell_results)
        failed = [r for r in cell_results if not r.ok]
        if failed:
            reason = failed[0].reason
            summaries.append(CellSummary(label, False, reason, {}, None, None, None, seconds))
            continue
        means = {
            c: float(np.mean([r.checkpoints[c] for r in cell_results])) for c in checkpoints
        }
        iters = [r.mean_iterations for r in cell_results if r.mean_iterations is not None]
        convs = [r.converged_fraction for r in cell_results if r.converged_fraction is not None]
        errs = [r.training_error for r in cell_results if r.training_error is not None]
        summaries.append(
            CellSummary(
                label, True, "",
                means,
                float(np.mean(iters)) if iters else None,
                float(np.mean(convs)) if convs else None,
                float(np.mean(errs)) if errs else None,
                seconds,
            )
        )
    return summaries


def _write_tables(
    out_dir: Path,
    summaries: list[CellSummary],
    results: dict[tuple[str, int], TaskResult],
    replicates: int,
    checkpoints: list[int],
) -> None:
    # Per-replicate checkpoint values, exactly as in the series files.
    lines = ["cell,replicate,checkpoint,log_capital"]
    for summary in summaries:
        for r in range(replicates):
            result = results[(summary.label, r)]
            if result.ok:
                for c in checkpoints:
                    lines.append(f"{summary.label},{r},{c},{_fmt(result.checkpoints[c])}")
    (out_dir / "replicates.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    header = ["cell", "status", "reason"]
    header += [f"logK_{c}" for c in checkpoints]
    header += ["mean_iterations", "converged_fraction", "training_error"]
    lines = [",".join(header)]
    for s in summaries:
        row = [s.label, "ok" if s.ok else "failed", s.reason.replace(",", ";")]
        row += [_fmt(s.means[c]) if s.ok else "" for c in checkpoints]
        row.append(_fmt(s.mean_iterations) if s.mean_iterations is not None else "")
        row.append(_fmt(s.converged_fraction) if s.converged_fraction is not None else "")
        row.append(_fmt(s.training_error) if s.training_error is not None else "")
        lines.append(",".join(row))
    (out_dir / "summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (out_dir / "summary.txt").write_text(
        render_table(summaries, checkpoints), encoding="utf-8"
    )


def _rank_flags(values: list[tuple[int, float]]) -> dict[int, str]:
    """Flags for the best ('*') and second best ('**') row index by value;
    ties go to the earlier row."""
    flags: dict[int, str] = {}
    ordered = sorted(values, key=lambda pair: (-pair[1], pair[0]))
    if ordered:
        flags[ordered[0][0]] = "*"
    if len(ordered) > 1:
        flags[ordered[1][0]] = "**"
    return flags


def render_table(summaries: list[CellSummary], checkpoints: list[int]) -> str:
    """Aligned text rendering with best / second-best marks at the final mark."""
    final = checkpoints[-1] if checkpoints else None
    ranked = [(i, s.means[final]) for i, s in enumerate(summaries) if s.ok]
    flags = _rank_flags(ranked) if final is not None else {}
    headers = ["cell"] + [f"logK@{c}" for c in checkpoints] + ["flag", "note"]
    rows = []
    for i, s in enumerate(summaries):
        cells = [s.label]
        cells += [f"{s.means[c]:.3f}" if s.ok else FAILURE_MARK for c in checkpoints]
        cells.append(flags.get(i, ""))
        cells.append("" if s.ok else f"failed: {s.reason}")
        rows.append(cells)
    widths = [max(len(h), *(len(r[j]) for r in rows)) if rows else len(h)
              for j, h in enumerate(headers)]
    out = ["  ".join(h.ljust(widths[j]) for j, h in enumerate(headers)).rstrip()]
    for r in rows:
        out.append("  ".join(r[j].ljust(widths[j]) for j in range(len(headers))).rstrip())
    return "\n".join(out) + "\n"


def _write_manifest(out_dir: Path, config: ExperimentConfig, checkpoints, cells) -> None:
    manifest = {
        "tool": "seqbet",
        "version": __version__,
        "mode": config.mode,
        "seed": config.seed,
        "warmup": config.warmup,
        "replicates": config.replicates,
        "checkpoints": list(checkpoints),
        "cells": [label for _, label, _ in cells],
        "config": config.raw,
        "strategy_notes": {
            "sosnn": {
                "warm_start": None if config.sosnn is None else config.sosnn.warm_start,
                "warmup_betting": "warmup rounds bet 0",
            },
            "nnbp": {"learning_rate_schedule": "constant"},
            "markov": {"optimizer": "slope bisection on [-0.999, 0.999], tol 1e-10"},
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Commands


def run_simulate(config: ExperimentConfig, out_dir, jobs: int = 1) -> RunReport:
    """Generate data per replicate, run every selected strategy, emit artifacts."""
    if config.mode != "simulate":
        raise UsageError(f"run_simulate got a {config.mode!r} config")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = _build_cells(config)
    checkpoints = checkpoint_rounds(config.rounds)
    specs = []
    for kind, label, params in cells:
        for r in range(config.replicates):
            p = dict(params)
            if kind == "sosnn":
                p["seed"] = derive_seed(
                    config.seed, r, _ROLE_SOSNN, p["input_count"], p["hidden_count"]
                )
            elif kind == "nnbp":
                p["seed"] = derive_seed(config.seed, r, _ROLE_NNBP_INIT)
                p["train_data_seed"] = derive_seed(config.seed, r, _ROLE_NNBP_DATA)
            specs.append(
                TaskSpec(
                    kind=kind, label=label, replicate=r, warmup=config.warmup,
                    params=p, generator=config.data.generator, rounds=config.rounds,
                    data_seed=derive_seed(config.seed, r, _ROLE_DATA),
                )
            )
    results = {(res.label, res.replicate): res for res in _execute(specs, jobs)}
    return _finish_run(config, out_dir, cells, checkpoints, results)


def _backtest_series(config: ExperimentConfig):
    """Normalized warmup+investing series, training series, and movement dates."""
    spec = config.data
    prices = load_prices(spec.price_file)
    raw = movements_from_prices(prices)
    dates = prices.dates[1:]  # movement n belongs to the later day

    def window(bounds):
        lo = next((i for i, d in enumerate(dates) if d >= bounds[0]), len(dates))
        hi = next((i for i, d in enumerate(dates) if d > bounds[1]), len(dates))
        return lo, hi

    n_lo, n_hi = window(spec.normalization)
    if n_lo >= n_hi:
        raise ConfigError("normalization range selects no movements")
    i_lo, i_hi = window(spec.investing)
    if i_lo >= i_hi:
        raise ConfigError("investing range selects no movements")
    if i_lo < config.warmup:
        raise ConfigError(
            f"only {i_lo} movements precede the investing range; warmup needs {config.warmup}"
        )
    reference = float(np.abs(raw[n_lo:n_hi]).max())
    # A flat reference window (constant prices) falls back to divisor 1; the
    # movements are then already zero wherever the window was flat.
    divisor = reference if reference > 0 else 1.0
    invest = np.clip(raw[i_lo - config.warmup : i_hi] / divisor, -1.0, 1.0)
    invest_dates = dates[i_lo - config.warmup : i_hi]
    training = None
    if config.nnbp is not None:
        t_lo, t_hi = window(spec.training)
        if t_lo >= t_hi:
            raise ConfigError("training range selects no movements")
        training = np.clip(raw[t_lo:t_hi] / divisor, -1.0, 1.0)
    betting_rounds = i_hi - i_lo
    return invest, invest_dates, training, betting_rounds


def run_backtest(config: ExperimentConfig, out_dir, jobs: int = 1) -> RunReport:
    """Normalize price movements by the reference window, then run strategies."""
    if config.mode != "backtest":
        raise UsageError(f"run_backtest got a {config.mode!r} config")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    invest, invest_dates, training, betting_rounds = _backtest_series(config)
    cells = _build_cells(config)
    checkpoints = checkpoint_rounds(betting_rounds)
    specs = []
    for kind, label, params in cells:
        for r in range(config.replicates):
            p = dict(params)
            if kind == "sosnn":
                p["seed"] = derive_seed(
                    config.seed, r, _ROLE_SOSNN, p["input_count"], p["hidden_count"]
                )
            elif kind == "nnbp":
                p["seed"] = derive_seed(config.seed, r, _ROLE_NNBP_INIT)
            specs.append(
                TaskSpec(
                    kind=kind, label=label, replicate=r, warmup=config.warmup,
                    params=p, movements=invest,
                    training_movements=training if kind == "nnbp" else None,
                )
            )
    results = {(res.label, res.replicate): res for res in _execute(specs, jobs)}
    write_movements(out_dir / "movements.csv", invest_dates, invest)
    return _finish_run(config, out_dir, cells, checkpoints, results)


def _finish_run(config, out_dir, cells, checkpoints, results) -> RunReport:
    for (_, label, _) in cells:
        for r in range(config.replicates):
            result = results[(label, r)]
            if result.ok:
                _write_series(out_dir, result)
                if result.error_per_epoch is not None:
                    _write_nnbp_diagnostics(out_dir, result)
    summaries = _summarize_cells(cells, results, config.replicates, checkpoints)
    _write_tables(out_dir, summaries, results, config.replicates, checkpoints)
    _write_manifest(out_dir, config, checkpoints, cells)
    return RunReport(out_dir=out_dir, checkpoints=list(checkpoints), cells=summaries)


# ---------------------------------------------------------------------------
# compare


@dataclass
class CompareRow:
    run: str
    cell: str
    ok: bool
    values: dict[int, float]
    flag: str = ""
    note: str = ""


def run_compare(run_dirs, out_path=None) -> list[CompareRow]:
    """Merge the summary tables of several runs; flag best and second best
    at the final checkpoint (failed cells are shown but never ranked)."""
    dirs = [Path(d) for d in run_dirs]
    if len(dirs) < 1:
        raise UsageError("compare needs at least one run directory")
    checkpoints = None
    rows: list[CompareRow] = []
    for d in dirs:
        manifest_path = d / "manifest.json"
        summary_path = d / "summary.csv"
        if not manifest_path.is_file() or not summary_path.is_file():
            raise UsageError(f"{d} does not contain a finished run")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        marks = list(manifest["checkpoints"])
        if checkpoints is None:
            checkpoints = marks
        elif marks != checkpoints:
            raise UsageError(
                f"incompatible checkpoints: {d.name} has {marks}, expected {checkpoints}"
            )
        header, *records = summary_path.read_text(encoding="utf-8").strip().split("\n")
        names = header.split(",")
        for record in records:
            fields = dict(zip(names, record.split(",")))
            ok = fields["status"] == "ok"
            values = {c: float(fields[f"logK_{c}"]) for c in checkpoints} if ok else {}
            rows.append(CompareRow(run=d.name, cell=fields["cell"], ok=ok, values=values))
    final = checkpoints[-1]
    ranked = [(i, row.values[final]) for i, row in enumerate(rows) if row.ok]
    flags = _rank_flags(ranked)
    for i, row in enumerate(rows):
        row.flag = flags.get(i, "")
    by_value: dict[float, list[int]] = {}
    for i, value in ranked:
        by_value.setdefault(value, []).append(i)
    for indices in by_value.values():
        if len(indices) > 1:
            for i in indices:
                rows[i].note = "tie"
    if out_path is not None:
        header = ["run", "cell"] + [f"logK_{c}" for c in checkpoints] + ["flag", "note"]
        lines = [",".join(header)]
        for row in rows:
            record = [row.run, row.cell]
            record += [_fmt(row.values[c]) if row.ok else FAILURE_MARK for c in checkpoints]
            record += [row.flag, row.note]
            lines.append(",".join(record))
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return rows


def render_compare(rows: list[CompareRow], checkpoints: list[int]) -> str:
    headers = ["run", "cell"] + [f"logK@{c}" for c in checkpoints] + ["flag", "note"]
    table = []
    for row in rows:
        cells = [row.run, row.cell]
        cells += [f"{row.values[c]:.3f}" if row.ok else FAILURE_MARK for c in checkpoints]
        cells += [row.flag, row.note]
        table.append(cells)
    widths = [max(len(h), *(len(r[j]) for r in table)) if table else len(h)
              for j, h in enumerate(headers)]
    out = ["  ".join(h.ljust(widths[j]) for j, h in enumerate(headers)).rstrip()]
    for r in table:
        out.append("  ".join(r[j].ljust(widths[j]) for j in range(len(headers))).rstrip())
    return "\n".join(out) + "\n"
