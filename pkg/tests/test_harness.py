"""Experiment configuration, operating points and metrics CSV."""

import math
import warnings

import numpy as np
import pytest

from secure_slp.harness import (
    CSV_COLUMNS, ConfigError, ExperimentConfig, MetricsRecord, emit_csv, load_config, parse_config_text,
    read_csv, run_point, run_point_detailed, run_sweep_gamma_e, run_sweep_rho, run_table1, tradeoff_pairs,
)


@pytest.fixture
def small():
    return ExperimentConfig(train_trials=600, test_trials=300, ser_trials=600, bins=36, seed=4)


def _record(**kw):
    base = dict(scheme="icss", M=4, N=6, K=3, rho=0.3, gamma0_db=10.0, gamma_e_db=-30.0, p0_db=15.0,
                avg_power_db=12.0, p_det_eve=0.26, ser_user1=1e-3, ser_avg=1.2e-3, infeasible_rate=0.0,
                trials=100, seed=0)
    base.update(kw)
    return MetricsRecord(**base)


def test_csv_header_and_round_trip(tmp_path):
    recs = [_record(), _record(scheme="zf", avg_power_db=12.3456789, p_det_eve=float("nan"))]
    path = tmp_path / "m.csv"
    emit_csv(recs, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[2].split(",")[8] == "12.3457"
    back = read_csv(path)
    assert back[0] == recs[0]
    assert back[1].scheme == "zf" and math.isnan(back[1].p_det_eve)


def test_empty_record_list_writes_header_only(tmp_path):
    emit_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert read_csv(tmp_path / "e.csv") == []


def test_unwritable_destination(tmp_path):
    with pytest.raises(OSError):
        emit_csv([_record()], tmp_path / "no" / "dir.csv")


def test_record_validation():
    with pytest.raises(ValueError):
        _record(scheme="mmse")
    with pytest.raises(ValueError):
        _record(p_det_eve=1.2)


def test_config_text_parsing():
    vals = parse_config_text("N = 4  # antennas\n\nrho = 0.1, 0.5\nschemes = zf,icss\n")
    cfg = ExperimentConfig(**vals)
    assert cfg.N == 4 and cfg.rho == (0.1, 0.5) and cfg.schemes == ("zf", "icss")


@pytest.mark.parametrize("text", ["N = four", "colour = red", "just words", "N = 2.5"])
def test_config_text_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


@pytest.mark.parametrize("kw", [dict(N=0), dict(rho=1.5), dict(bins=100, M=8), dict(schemes="zf", N=3, K=3),
                                dict(schemes="an_no_csi", N=3, K=3), dict(test_trials=0), dict(gamma_e_db=())])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_unknown_scheme_is_config_error():
    with pytest.raises(ConfigError):
        ExperimentConfig(schemes="mmse")


def test_load_config_precedence(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("seed = 7\nN = 5\n")
    cfg = load_config(path, defaults={"seed": 1, "K": 2}, N=8)
    assert (cfg.seed, cfg.K, cfg.N) == (7, 2, 8)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_single_point_needs_single_values(small):
    cfg = ExperimentConfig(rho=(0.1, 0.2))
    with pytest.raises(ConfigError):
        run_point(cfg)


def test_point_metrics_are_sane(small):
    rec = run_point(small, "icss")
    assert rec.infeasible_rate == 0.0
    assert 5.0 < rec.avg_power_db < 20.0
    assert 0.0 <= rec.p_det_eve <= 1.0
    assert rec.trials == 300 and rec.seed == 4


def test_results_do_not_depend_on_threads(small):
    from dataclasses import replace
    a = run_point(small, "cd_full")
    b = run_point(replace(small, threads=2), "cd_full")
    assert a == b


def test_same_seed_repeats_exactly(small):
    assert run_point(small, "fast_icss") == run_point(small, "fast_icss")


def test_power_averaged_linearly(small):
    res = run_point_detailed(small, "traditional_ci")
    assert res.record.avg_power_db == pytest.approx(10 * np.log10(np.nanmean(res.powers)), abs=1e-9)


def test_dump_trials(tmp_path, small):
    from dataclasses import replace
    path = tmp_path / "trials.csv"
    run_point(replace(small, dump_trials=str(path)), "zf")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("scheme,") and len(lines) == 1 + small.test_trials


def test_infeasibility_warning():
    cfg = ExperimentConfig(N=2, K=3, train_trials=100, test_trials=100, ser_trials=100, bins=36)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rec = run_point(cfg, "traditional_ci")
    assert rec.infeasible_rate > 0.01
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_sweep_shapes_and_order():
    cfg = ExperimentConfig(train_trials=100, test_trials=60, ser_trials=60, bins=36,
                           gamma_e_db=(-30, 0), schemes=("icss", "cd_partial"))
    recs = run_sweep_gamma_e(cfg)
    assert [(r.scheme, r.gamma_e_db) for r in recs] == [
        ("icss", -30), ("icss", 0), ("cd_partial", -30), ("cd_partial", 0)]
    pairs = tradeoff_pairs(recs)
    assert set(pairs) == {"icss", "cd_partial"} and len(pairs["icss"]) == 2

    cfg = ExperimentConfig(train_trials=100, test_trials=60, ser_trials=60, bins=36, schemes="an_no_csi",
                           rho=(0.0, 0.9), p0_db=(10, 20))
    recs = run_sweep_rho(cfg)
    assert [(r.p0_db, r.rho) for r in recs] == [(10, 0.0), (10, 0.9), (20, 0.0), (20, 0.9)]
    assert all(r.avg_power_db >= r.p0_db - 1e-6 and r.infeasible_rate == 0 for r in recs)
    assert recs[-1].avg_power_db == pytest.approx(20.0, abs=1e-4)


def test_table1_layout():
    cfg = ExperimentConfig(train_trials=100, test_trials=60, ser_trials=60, bins=36)
    recs = run_table1(cfg)
    assert [(r.N, r.scheme) for r in recs] == [(6, "icss"), (6, "zf"), (4, "icss"), (4, "zf")]
