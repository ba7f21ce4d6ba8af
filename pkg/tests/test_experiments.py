import csv
import io
import json
import math

import numpy as np
import pytest

from wptopt.cli import main
from wptopt.experiments import (
    CSV_COLUMNS,
    BudgetConfig,
    ExperimentConfig,
    SweepRecord,
    TonesConfig,
    emit_results,
    generate_channel,
    load_json_records,
    records_to_csv,
    run_cell,
    run_sweep,
    summarize,
)


def _small_config(**overrides):
    cfg = dict(
        tones=TonesConfig(N=[2, 4]),
        budgets=BudgetConfig(p_tr_max_dbw=[-45.0, -35.0]),
        strategies=["opt", "decoupling", "ideal", "smf"],
        num_channels=2,
        seed=11,
    )
    cfg.update(overrides)
    return ExperimentConfig(**cfg)


def _strip_timing(text):
    return [row[:-1] for row in csv.reader(io.StringIO(text))]


# -- channels ------------------------------------------------------------------


def test_channel_deterministic_and_keyed():
    a = generate_channel(8, 2, 5, 17)
    np.testing.assert_array_equal(a, generate_channel(8, 2, 5, 17))
    assert not np.array_equal(a, generate_channel(8, 2, 5, 18))
    assert not np.array_equal(a, generate_channel(8, 2, 6, 17))
    assert a.shape == (8, 2) and a.dtype == complex


def test_channel_statistics():
    h = np.concatenate([generate_channel(10, 1, 0, i).ravel() for i in range(10_000)])
    assert h.size == 100_000
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)
    assert abs(np.corrcoef(h.real, h.imag)[0, 1]) < 0.02
    assert np.var(h.real) == pytest.approx(0.5, abs=0.01)


# -- config ---------------------------------------------------------------------


def test_config_round_trip_through_dict():
    cfg = _small_config(solver={"scp_tol": 1e-5})
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert again.solver_config().scp_tol == 1e-5


@pytest.mark.parametrize(
    "doc",
    [
        {"bogus": 1},
        {"tones": {"N": [8], "K": 3}},
        {"sspa": {"A_s": -35}},
        {"solver": {"newton_iters": 5}},
        {"strategies": ["opt", "magic"]},
        {"num_channels": 0},
        {"budgets": {"p_tr_max_dbw": []}},
        {"decoupling_input_scaling": "peak"},
    ],
)
def test_config_rejects_bad_input(doc):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(doc)


def test_config_defaults_follow_simulation_setup():
    cfg = ExperimentConfig()
    assert cfg.tones.N == [8] and cfg.tones.M == 1
    assert cfg.sspa.params().saturation == pytest.approx(10 ** (-35 / 20))
    assert cfg.budgets.p_in_max_dbw == -20.0
    assert min(cfg.budgets.p_tr_max_dbw) == -45.0 and max(cfg.budgets.p_tr_max_dbw) == -30.0
    assert cfg.num_channels == 50


# -- sweeps ---------------------------------------------------------------------


def test_record_count_single_strategy():
    cfg = _small_config(strategies=["ideal"], num_channels=1)
    records = run_sweep(cfg)
    assert len(records) == len(cfg.tones.N) * len(cfg.budgets.p_tr_max_dbw)
    assert all(r.strategy == "ideal" and r.error is None and r.zdc > 0 for r in records)


def test_sweep_order_and_fields():
    cfg = _small_config()
    records = run_sweep(cfg)
    assert len(records) == 2 * 2 * 2 * 4
    keys = [(r.N, r.p_tr_dbw, r.channel) for r in records[::4]]
    assert keys == sorted(keys, key=lambda k: (cfg.tones.N.index(k[0]), k[1], k[2]))
    assert [r.strategy for r in records[:4]] == cfg.strategies
    for r in records:
        assert r.error is None and r.zdc >= 0 and r.papr >= 1 and r.ms >= 0


def test_ideal_upper_bounds_sspa_strategies():
    records = run_sweep(_small_config())
    for i in range(0, len(records), 4):
        opt, dec, ideal, _ = (r.zdc for r in records[i : i + 4])
        assert opt <= ideal * (1 + 1e-6) and dec <= ideal * (1 + 1e-9)


def test_cell_reproduces_sweep_record():
    cfg = _small_config()
    records = run_sweep(cfg)
    target = [r for r in records if r.N == 4 and r.p_tr_dbw == -35.0 and r.channel == 1]
    alone = run_cell(cfg, 4, -35.0, 1)
    assert [(r.strategy, r.zdc, r.papr, r.iters) for r in alone] == [(r.strategy, r.zdc, r.papr, r.iters) for r in target]


def test_sweep_deterministic_except_timing():
    cfg = _small_config(strategies=["opt", "smf"])
    assert _strip_timing(records_to_csv(run_sweep(cfg))) == _strip_timing(records_to_csv(run_sweep(cfg)))


def test_parallel_sweep_matches_serial():
    cfg = _small_config(strategies=["ideal", "smf"])
    assert _strip_timing(records_to_csv(run_sweep(cfg, jobs=2))) == _strip_timing(records_to_csv(run_sweep(cfg)))


def test_failed_cell_is_recorded_not_raised(monkeypatch):
    import wptopt.experiments as ex

    def boom(*args, **kwargs):
        raise RuntimeError("solver blew up")

    monkeypatch.setattr(ex, "scp_optimize", boom)
    records = run_cell(_small_config(strategies=["opt", "smf"]), 2, -40.0, 0)
    assert records[0].error == "RuntimeError: solver blew up" and math.isnan(records[0].zdc)
    assert records[1].error is None
    summary = {s["strategy"]: s for s in summarize(records)}
    assert summary["opt"]["failures"] == 1 and summary["opt"]["count"] == 0
    assert math.isnan(summary["opt"]["mean_zdc"])


def test_summary_means():
    recs = [SweepRecord("ideal", 8, 1, -40.0, c, z, 2.0, 1, 1.0) for c, z in enumerate([1.0, 3.0])]
    (row,) = summarize(recs)
    assert row["mean_zdc"] == 2.0 and row["count"] == 2 and row["failures"] == 0


# -- emission -------------------------------------------------------------------


def test_csv_header_only_for_empty(tmp_path):
    path = emit_results([], tmp_path / "empty.csv")
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_csv_row_count(tmp_path):
    records = run_cell(_small_config(strategies=["ideal", "smf"]), 2, -40.0, 0)
    rows = list(csv.reader(io.StringIO(emit_results(records, tmp_path / "r.csv").read_text())))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == len(records) + 1
    assert float(rows[1][5]) == records[0].zdc


def test_json_round_trip(tmp_path):
    cfg = _small_config(strategies=["ideal", "smf"])
    records = run_cell(cfg, 2, -40.0, 0)
    records.append(SweepRecord("opt", 2, 1, -40.0, 0, math.nan, math.nan, 0, 1.5, "ValueError: x"))
    path = emit_results(records, tmp_path / "r.json", "json", cfg)
    doc = json.loads(path.read_text())
    assert ExperimentConfig.from_dict(doc["config"]) == cfg
    back = load_json_records(path)
    for a, b in zip(back, records):
        for field in ("strategy", "N", "M", "p_tr_dbw", "channel", "iters", "ms", "error"):
            assert getattr(a, field) == getattr(b, field)
        for field in ("zdc", "papr"):
            x, y = getattr(a, field), getattr(b, field)
            assert x == y or (math.isnan(x) and math.isnan(y))


def test_emit_errors_carry_path(tmp_path):
    target = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit_results([], target)
    with pytest.raises(ValueError):
        emit_results([], tmp_path / "x.txt", "xml")


# -- command line -----------------------------------------------------------------


def test_cli_run_writes_csv(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps(_small_config(strategies=["ideal"], num_channels=1).to_dict()))
    out = tmp_path / "out.csv"
    assert main(["run", "--config", str(config), "--out", str(out), "--strategies", "ideal,smf", "--seed", "3"]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert len(rows) == 1 + 2 * 2 * 2
    assert "mean zdc" in capsys.readouterr().err


def test_cli_run_json_to_stdout(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"tones": {"N": [2]}, "budgets": {"p_tr_max_dbw": [-40]}, "strategies": ["smf"], "num_channels": 1}))
    assert main(["run", "--config", str(config), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["records"]) == 1 and doc["config"]["tones"]["N"] == [2]


def test_cli_run_rejects_bad_config(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"typo": True}))
    assert main(["run", "--config", str(config)]) == 2
    assert "typo" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2


def test_cli_single(capsys):
    assert main(["single", "--n", "4", "--ptr-dbw", "-40", "--pin-dbw", "-20", "--as-dbv", "-35", "--strategies", "opt,smf"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == list(CSV_COLUMNS)
    assert [r[0] for r in rows[1:]] == ["opt", "smf"]


def test_cli_check(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4 and "FAIL" not in out


def test_cli_rejects_unknown_strategy():
    with pytest.raises(SystemExit):
        main(["single", "--strategies", "opt,nope"])
