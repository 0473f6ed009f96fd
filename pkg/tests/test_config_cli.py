import csv
import json
import os

import numpy as np
import pytest

from fourier_ricci import domain as dm
from fourier_ricci.benchmarks import get_benchmark
from fourier_ricci.cli import main
from fourier_ricci.config import RunConfig, load_config, parse_config
from fourier_ricci.errors import ConfigError, StageError, ValidationError
from fourier_ricci.flow import FlowConfig, init_metric, optimize
from fourier_ricci.pipeline import (REFERENCE_APPROXIMATION, read_grid, reproduce_tables, run_bounds,
                                    run_pipeline)
from fourier_ricci.surrogate import FourierSurrogate


def test_minimal_config_defaults():
    cfg = parse_config('{"benchmark": "booth"}')
    assert cfg.sampling.order == 3 and cfg.sampling.alpha == 0.1
    assert cfg.flow.dt == 0.001 and cfg.flow.iterations == 300 and cfg.flow.resolution == 200
    assert cfg.flow.snapshot_interval == 300
    assert cfg.mode == "stochastic" and cfg.sense == "min" and cfg.seed == 0


def test_round_trip():
    text = """
benchmark = "ackley"
mode = "deterministic"
seed = 17
emit_grids = true

[sampling]
alpha = 0.2
n_circles = 12

[flow]
beta = 10
iterations = 150

[noise]
kind = "additive-gaussian"
sigma = 0.05

[hybrid]
enabled = true
zoom = [[-1, 1], [-1, 1]]

[bounds]
sizes = [50, 100, 200]
"""
    cfg = parse_config(text)
    assert cfg.sampling.seed == 17 and cfg.noise.seed == 17
    assert cfg.hybrid.zoom == ((-1.0, 1.0), (-1.0, 1.0))
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert parse_config(again.to_json()).to_json() == cfg.to_json()


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="iteratons"):
        parse_config('{"benchmark": "booth", "flow": {"iteratons": 10}}')
    with pytest.raises(ConfigError, match="unknown key 'colour'"):
        parse_config('{"benchmark": "booth", "colour": "red"}')
    with pytest.raises(ConfigError, match="top-level seed"):
        parse_config('{"benchmark": "booth", "noise": {"seed": 3}}')


def test_missing_and_bad_values():
    with pytest.raises(ConfigError, match="benchmark"):
        parse_config('{"mode": "stochastic"}')
    with pytest.raises(ValidationError, match="benchmark"):
        parse_config('{"benchmark": "sphere"}')
    with pytest.raises(ConfigError, match="flow.dt"):
        parse_config('{"benchmark": "booth", "flow": {"dt": "fast"}}')
    with pytest.raises(ConfigError, match="sampling"):
        parse_config('{"benchmark": "booth", "sampling": {"alpha": -1}}')
    with pytest.raises(ConfigError, match="flow"):
        parse_config('{"benchmark": "booth", "flow": 3}')


def test_parse_error_diagnostics():
    with pytest.raises(ConfigError, match="line 3, column"):
        parse_config('{\n  "benchmark": "booth",\n  "flow": {,}\n}')
    with pytest.raises(ConfigError, match="TOML parse error"):
        parse_config('benchmark = "booth"\n[flow\n')


def test_load_by_extension(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('benchmark = "himmelblau"\n')
    assert load_config(p).benchmark == "himmelblau"
    q = tmp_path / "run.json"
    q.write_text('{"benchmark": "booth"}')
    assert load_config(q).benchmark == "booth"


def _cfg(tmp_path, name="out", **kw):
    base = {"benchmark": "booth", "mode": "deterministic", "output_dir": str(tmp_path / name)}
    base.update(kw)
    return parse_config(json.dumps(base))


def test_booth_deterministic_pipeline(tmp_path):
    rec = run_pipeline(_cfg(tmp_path))
    assert rec.status == "ok"
    assert rec.best["true_value"] <= 0.05
    assert rec.report["r_squared"] > 0.999
    for path in rec.artifacts.values():
        assert os.path.getsize(path) > 0
    assert set(rec.seed_streams) == {"sample_locations", "noise", "circle_rotation"}


def _files(directory):
    return {f: open(os.path.join(directory, f), "rb").read() for f in sorted(os.listdir(directory))
            if f.endswith(".csv") or f.endswith(".jsonl") or f in ("candidates.json", "surrogate.json")}


def test_rerun_is_byte_identical(tmp_path):
    a = run_pipeline(_cfg(tmp_path, "a", mode="stochastic", benchmark="himmelblau", seed=5,
                          emit_grids=True))
    b = run_pipeline(_cfg(tmp_path, "b", mode="stochastic", benchmark="himmelblau", seed=5,
                          emit_grids=True))
    fa, fb = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert "candidates.json" in fa and "grid_abs_error.csv" in fa and "trace.jsonl" in fa
    assert fa == fb
    assert a.candidates == b.candidates


def test_record_snapshot_replays(tmp_path):
    rec = run_pipeline(_cfg(tmp_path, emit_grids=True, benchmark="himmelblau"))
    cfg = parse_config(json.dumps(rec.config))
    assert cfg.seed == rec.seed
    replay = run_pipeline(cfg, write=False)
    assert replay.candidates == rec.candidates
    # the stored surrogate and the initial metric snapshot reproduce the flow input exactly
    with open(rec.artifacts["surrogate"]) as fh:
        s = FourierSurrogate.from_json(fh.read())
    u0 = read_grid(rec.artifacts["flow_u_r00_i0000"])
    assert np.array_equal(u0, init_metric(s, cfg.flow, cfg.sense).u)
    again = optimize(s, cfg.flow, cfg.sense, oracle=get_benchmark(cfg.benchmark).form_scalar)
    assert [c.to_dict() for c in again.candidates] == rec.candidates
    with open(rec.artifacts["flow_u_r00_i0000"] + ".json") as fh:
        side = json.load(fh)
    assert side["shape"] == [200, 200] and side["t"] == 0.0


def test_approximate_stage_only(tmp_path):
    rec = run_pipeline(_cfg(tmp_path, mode="stochastic"), optimize_stage=False)
    assert rec.status == "not-run" and rec.candidates == []
    assert "candidates" not in rec.artifacts and os.path.exists(rec.artifacts["trace"])


def test_hybrid_rastrigin(tmp_path):
    cfg = _cfg(tmp_path, benchmark="rastrigin", mode="stochastic",
               hybrid={"enabled": True, "zoom": [[-1, 1], [-1, 1]]})
    rec = run_pipeline(cfg)
    h = rec.hybrid
    assert h["status"] == "ok" and h["order"] == 5
    assert h["report"]["r_squared"] >= 0.99
    assert h["candidate"]["true_value"] <= 0.1
    assert os.path.getsize(rec.artifacts["hybrid_surrogate"]) > 0


def test_hybrid_centred_on_candidate(tmp_path):
    cfg = _cfg(tmp_path, benchmark="booth", hybrid={"enabled": True, "shrink": 0.1})
    h = run_pipeline(cfg, write=False).hybrid
    lo, hi = dm.bounds(h["zoom"])
    assert np.allclose(hi - lo, 2.0)
    assert h["candidate"]["true_value"] <= 0.05


def test_stage_attribution(tmp_path):
    cfg = _cfg(tmp_path, flow={"dt": 1.0})
    with pytest.raises(StageError) as info:
        run_pipeline(cfg, write=False)
    assert info.value.stage == "optimize"


def test_bounds_command_outputs(tmp_path):
    res = run_bounds(_cfg(tmp_path, benchmark="ackley", bounds={"sizes": [100, 400, 1600]}))
    assert res.dominates
    with open(tmp_path / "out" / "decay.csv", newline="") as fh:
        assert len(list(csv.reader(fh))) == 4
    assert json.loads((tmp_path / "out" / "decay.json").read_text())["dominates"] is True


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"benchmark": "booth", "mode": "deterministic"}))
    assert main(["optimize", str(good), "--out", str(tmp_path / "run")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["best"]["true_value"] <= 0.05

    bad = tmp_path / "bad.toml"
    bad.write_text('benchmark = "booth"\n[flow]\niteratons = 3\n')
    assert main(["optimize", str(bad)]) == 1
    assert "iteratons" in capsys.readouterr().err
    assert main(["approximate", str(tmp_path / "missing.toml")]) == 1

    unstable = tmp_path / "unstable.json"
    unstable.write_text(json.dumps({"benchmark": "booth", "mode": "deterministic", "flow": {"dt": 1.0}}))
    assert main(["optimize", str(unstable), "--out", str(tmp_path / "u")]) == 2
    assert "optimize" in capsys.readouterr().err


def test_cli_bounds_and_approximate(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"benchmark": "ackley", "bounds": {"sizes": [100, 200, 400]}}))
    assert main(["bounds", str(cfg), "--out", str(tmp_path / "b")]) == 0
    assert "constants" in json.loads(capsys.readouterr().out)
    assert main(["approximate", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == "not-run"


@pytest.fixture(scope="module")
def tables(tmp_path_factory):
    root = tmp_path_factory.mktemp("tables")
    reproduce_tables(str(root / "a"), seed=0)
    reproduce_tables(str(root / "b"), seed=0)
    return root


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_table_one(tables):
    rows = _rows(tables / "a" / "table1.csv")
    assert len(rows) == 5
    assert [float(r["ref_r_squared"]) for r in rows] == [REFERENCE_APPROXIMATION[r["function"]][2] for r in rows]
    assert {float(r["ref_r_squared"]) for r in rows} == {0.9974, 0.9899, 0.9990, 0.9324, 0.4887}
    assert all(r["status"] == "ok" for r in rows)


def test_table_two(tables):
    rows = _rows(tables / "a" / "table2.csv")
    assert len(rows) == 5
    refs = " ".join(r["ref_true_optimum"] for r in rows)
    for entry in ("((1,1),0)", "((1,3),0)", "((0,0),0)"):
        assert entry in refs
    assert all(r["deterministic_f"] for r in rows)


def test_tables_rerun_identical(tables):
    for name in ("table1.csv", "table2.csv", "hybrid.csv"):
        assert (tables / "a" / name).read_bytes() == (tables / "b" / name).read_bytes()


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(benchmark="booth", mode="fuzzy")
    with pytest.raises(ValidationError):
        RunConfig(benchmark="booth", sense="up")
    assert RunConfig(benchmark="booth", flow=FlowConfig(beta=5.0)).flow.beta == 5.0
