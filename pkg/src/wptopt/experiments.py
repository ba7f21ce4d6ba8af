"""Seeded Monte-Carlo sweeps over transmit budgets and sub-carrier counts."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wptopt.baselines import (
    INPUT_SCALINGS,
    decoupling_transmit,
    eval_ideal_hpa,
    scaled_matched_filter,
)
from wptopt.optimizer import PowerBudgets, SolverConfig, optimize_transmit_only, scp_optimize
from wptopt.rectenna import RectennaParams
from wptopt.signal import TimeGrid, ToneGrid, dbv_to_volts, dbw_to_watts, papr
from wptopt.sspa import SspaParams

log = logging.getLogger(__name__)

STRATEGIES = ("opt", "decoupling", "ideal", "smf")
CSV_COLUMNS = ("strategy", "N", "M", "p_tr_dbw", "channel", "zdc", "papr", "iters", "ms")


@dataclass
class TonesConfig:
    N: list[int] = field(default_factory=lambda: [8])
    M: int = 1
    f0: float = 5.18e9
    delta_f: float = 312.5e3


@dataclass
class SspaConfig:
    G: float = 1.0
    A_s_dbv: float = -35.0
    beta: float = 1.0

    def params(self) -> SspaParams:
        return SspaParams(self.G, dbv_to_volts(self.A_s_dbv), self.beta)


@dataclass
class RectennaConfig:
    i_s: float = 5e-6
    eta0: float = 1.05
    V0: float = 25.86e-3
    R_ant: float = 50.0

    def params(self) -> RectennaParams:
        return RectennaParams(self.i_s, self.eta0, self.V0, self.R_ant)


@dataclass
class BudgetConfig:
    p_in_max_dbw: float = -20.0
    p_tr_max_dbw: list[float] = field(default_factory=lambda: [-45.0, -42.5, -40.0, -37.5, -35.0, -32.5, -30.0])


@dataclass
class ExperimentConfig:
    tones: TonesConfig = field(default_factory=TonesConfig)
    sspa: SspaConfig = field(default_factory=SspaConfig)
    rectenna: RectennaConfig = field(default_factory=RectennaConfig)
    budgets: BudgetConfig = field(default_factory=BudgetConfig)
    strategies: list[str] = field(default_factory=lambda: ["opt", "decoupling", "ideal"])
    num_channels: int = 50
    seed: int = 0
    solver: dict = field(default_factory=dict)
    output_path: str | None = None
    decoupling_input_scaling: str = "none"

    def __post_init__(self):
        if not self.tones.N or not self.budgets.p_tr_max_dbw or not self.strategies:
            raise ValueError("N list, budget list and strategies must be non-empty")
        if self.num_channels < 1:
            raise ValueError("num_channels must be >= 1")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad:
            raise ValueError(f"unknown strategies {bad}; choose from {STRATEGIES}")
        if self.decoupling_input_scaling not in INPUT_SCALINGS:
            raise ValueError(f"decoupling_input_scaling must be one of {INPUT_SCALINGS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.solver_config()  # validates overrides

    def solver_config(self) -> SolverConfig:
        known = {f.name for f in dataclasses.fields(SolverConfig)}
        unknown = set(self.solver) - known
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        return SolverConfig(**self.solver)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        sections = {"tones": TonesConfig, "sspa": SspaConfig, "rectenna": RectennaConfig, "budgets": BudgetConfig}
        _reject_unknown(d, cls, "config")
        kwargs = dict(d)
        for key, sub in sections.items():
            if key in kwargs:
                _reject_unknown(kwargs[key], sub, key)
                kwargs[key] = sub(**kwargs[key])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _reject_unknown(d: dict, cls, where: str) -> None:
    if not isinstance(d, dict):
        raise ValueError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")


@dataclass
class SweepRecord:
    strategy: str
    N: int
    M: int
    p_tr_dbw: float
    channel: int
    zdc: float
    papr: float
    iters: int
    ms: float
    error: str | None = None


def generate_channel(n: int, m: int, seed: int, index: int) -> np.ndarray:
    """i.i.d. CN(0, 1) gains from a Philox stream keyed by ``(seed, index)``."""
    key = (int(seed) & (2**64 - 1)) | (int(index) << 64)
    rng = np.random.Generator(np.random.Philox(key=key))
    z = rng.standard_normal((n, m, 2))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def _max_papr(w, grid: TimeGrid) -> float:
    vals = [papr(w[:, j], None, grid) for j in range(w.shape[1]) if np.any(w[:, j] != 0)]
    return max(vals) if vals else math.nan


def run_cell(cfg: ExperimentConfig, n: int, p_tr_dbw: float, channel: int) -> list[SweepRecord]:
    """All requested strategies on one (N, budget, channel) cell, in config order."""
    m = cfg.tones.M
    tones = ToneGrid(n, m, cfg.tones.f0, cfg.tones.delta_f)
    solver = cfg.solver_config()
    grid = TimeGrid(solver.oversampling * n, tones.period)
    sspa = cfg.sspa.params()
    rect = cfg.rectenna.params()
    budgets = PowerBudgets(dbw_to_watts(cfg.budgets.p_in_max_dbw), dbw_to_watts(p_tr_dbw))
    h = generate_channel(n, m, cfg.seed, channel)

    cache: dict = {}

    def rectenna_only():
        if "r9" not in cache:
            t0 = time.perf_counter()
            cache["r9"] = optimize_transmit_only(h, budgets.p_tr_max, rect, tones, solver)
            cache["r9_ms"] = 1e3 * (time.perf_counter() - t0)
        return cache["r9"], cache["r9_ms"]

    records = []
    for strategy in cfg.strategies:
        t0 = time.perf_counter()
        extra_ms = 0.0
        try:
            if strategy == "opt":
                res = scp_optimize(h, budgets, sspa, rect, tones, solver)
                w, iters, value = res.weights, res.scp_iterations, res.zdc_value
            elif strategy == "ideal":
                r9, extra_ms = rectenna_only()
                w, iters = r9.weights, r9.scp_iterations
                value = eval_ideal_hpa(h, w, rect)
            elif strategy == "decoupling":
                r9, extra_ms = rectenna_only()
                t0 = time.perf_counter()
                _, w = decoupling_transmit(r9.weights, budgets, sspa, grid, cfg.decoupling_input_scaling)
                iters = r9.scp_iterations
                value = eval_ideal_hpa(h, w, rect)
            else:
                w = scaled_matched_filter(h, budgets.p_tr_max)
                iters, value = 0, eval_ideal_hpa(h, w, rect)
            ms = 1e3 * (time.perf_counter() - t0) + extra_ms
            records.append(SweepRecord(strategy, n, m, float(p_tr_dbw), channel, float(value), _max_papr(w, grid), int(iters), ms))
        except Exception as exc:  # one failed cell must not abort a sweep
            log.warning("cell %s N=%d p_tr=%s ch=%d failed: %s", strategy, n, p_tr_dbw, channel, exc)
            ms = 1e3 * (time.perf_counter() - t0)
            records.append(
                SweepRecord(strategy, n, m, float(p_tr_dbw), channel, math.nan, math.nan, 0, ms, f"{type(exc).__name__}: {exc}")
            )
    return records


def _cells(cfg: ExperimentConfig):
    for n in cfg.tones.N:
        for p in cfg.budgets.p_tr_max_dbw:
            for c in range(cfg.num_channels):
                yield n, p, c


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[SweepRecord]:
    """Every (N, budget, channel, strategy) record, ordered by cell index."""
    cells = [(cfg, n, p, c) for n, p, c in _cells(cfg)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell_args, cells, chunksize=max(1, len(cells) // (8 * jobs))))
    else:
        chunks = [run_cell(*c) for c in cells]
    return [r for chunk in chunks for r in chunk]


def summarize(records: list[SweepRecord]) -> list[dict]:
    """Mean zdc per (strategy, N, M, budget), failures excluded and counted."""
    groups: dict[tuple, list[SweepRecord]] = {}
    for r in records:
        groups.setdefault((r.strategy, r.N, r.M, r.p_tr_dbw), []).append(r)
    out = []
    for (strategy, n, m, p), rs in groups.items():
        ok = [r.zdc for r in rs if r.error is None]
        out.append(
            {
                "strategy": strategy,
                "N": n,
                "M": m,
                "p_tr_dbw": p,
                "mean_zdc": float(np.mean(ok)) if ok else math.nan,
                "count": len(ok),
                "failures": len(rs) - len(ok),
            }
        )
    return out


def _csv_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = [_csv_value(getattr(r, c)) for c in CSV_COLUMNS]
        row[-1] = f"{r.ms:.3f}"
        writer.writerow(row)
    return buf.getvalue()


def _json_float(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def records_to_json(records: list[SweepRecord], cfg: ExperimentConfig | None = None) -> str:
    doc = {
        "config": cfg.to_dict() if cfg is not None else None,
        "records": [{k: _json_float(v) for k, v in dataclasses.asdict(r).items()} for r in records],
        "summary": [{k: _json_float(v) for k, v in s.items()} for s in summarize(records)],
    }
    return json.dumps(doc, indent=1)


def emit_results(records: list[SweepRecord], path, fmt: str = "csv", cfg: ExperimentConfig | None = None) -> Path:
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    text = records_to_csv(records) if fmt == "csv" else records_to_json(records, cfg)
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def load_json_records(path) -> list[SweepRecord]:
    doc = json.loads(Path(path).read_text())
    out = []
    for d in doc["records"]:
        d = dict(d)
        for k in ("zdc", "papr"):
            if d[k] is None:
                d[k] = math.nan
        out.append(SweepRecord(**d))
    return out
