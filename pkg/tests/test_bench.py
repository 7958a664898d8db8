import json
import math

import pytest

from ddid import bench
from ddid.bench import BenchConfig, compute_gap, run_experiment, to_csv
from ddid.cli import main


def test_gap_examples():
    assert compute_gap(1.05, 1.00) == pytest.approx(0.05)
    assert compute_gap(0.5, 0.5) == 0.0
    assert compute_gap(0.0, 1e-9) == 0.0
    with pytest.warns(RuntimeWarning):
        assert compute_gap(0.3, 0.0) == math.inf
    with pytest.raises(ValueError):
        compute_gap(1.0, math.nan)


def test_empty_instance_list():
    assert run_experiment(BenchConfig()) == []
    assert to_csv([]).strip() == ",".join(bench.CSV_COLUMNS)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(methods=["nope"])
    with pytest.raises(ValueError):
        BenchConfig(delta=[0.5], budget=[1])


def test_config_from_ini(tmp_path):
    f = tmp_path / "b.ini"
    f.write_text("[bench]\ninstances = example1, sp:6:1\nmethods = exact, kadapt\n"
                 "K = 1, 2 ; comment\nbudget = 0, 1\ntime_limit = 30\nworkers = 2\n")
    cfg = BenchConfig.load(f)
    assert cfg.instances == ["example1", "sp:6:1"]
    assert cfg.K == [1, 2] and cfg.budget == [0, 1]
    assert cfg.time_limit == 30.0 and cfg.workers == 2


def test_config_from_json(tmp_path):
    f = tmp_path / "b.json"
    f.write_text(json.dumps({"instances": ["example1"], "K": [2], "delta": [0.5]}))
    assert BenchConfig.load(f).delta == [0.5]


def test_example1_sweep():
    cfg = BenchConfig(instances=["example1"], methods=["exact", "kadapt"], K=[1, 2],
                      budget=[0, 1, 3], engine="highs", workers=2)
    recs = run_experiment(cfg)
    exact = {r.budget: r.objective for r in recs if r.method == "exact"}
    assert exact == pytest.approx({0: 0.0, 1: 0.5, 3: 0.5}, abs=1e-6)
    for r in recs:
        assert r.status == "optimal" and r.gap >= -1e-9
        if r.method == "kadapt":
            # max convention: the approximation never beats the exact value
            assert r.objective <= exact[r.budget] + 1e-6


def test_csv_reproducible_modulo_time():
    cfg = BenchConfig(instances=["example1", "sp:6:2"], methods=["kadapt"], K=[1],
                      budget=[1], engine="highs")
    a = run_experiment(cfg)
    b = run_experiment(BenchConfig(**{**cfg.__dict__, "workers": 2}))
    assert bench.to_csv(a, with_time=False) == bench.to_csv(b, with_time=False)


def test_errors_are_captured():
    cfg = BenchConfig(instances=["example1"], methods=["exact"], T=[-1.0], engine="highs")
    (rec,) = run_experiment(cfg)
    assert rec.status == "error" and "ValueError" in rec.error


def test_time_limit_record():
    cfg = BenchConfig(instances=["random:8:0"], methods=["exact"], delta=[0.5],
                      time_limit=0.2, engine="highs")
    for rec in run_experiment(cfg):
        assert rec.status in ("feasible-at-limit", "optimal")
        if rec.status == "feasible-at-limit":
            assert math.isfinite(rec.objective) and not math.isnan(rec.gap)


def test_markdown_and_series():
    cfg = BenchConfig(instances=["example1"], methods=["exact"], budget=[0, 1], engine="highs")
    recs = run_experiment(cfg)
    md = bench.to_markdown(recs)
    assert "Opt (#)" in md and "Time (s)" in md and "Gap" in md
    series = bench.delta_series(recs)
    ((key, pts),) = series.items()
    assert [x for x, _ in pts] == [0, 1]
    assert json.loads(bench.to_json(recs))[0]["schema"] == bench.CSV_SCHEMA


def test_unknown_instance_spec():
    with pytest.raises(ValueError):
        bench.load_source("nonsense:1")


def test_cli_solve_exact(capsys):
    assert main(["solve-exact", "--instance", "example1", "--budget", "1", "--engine", "highs"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["objective"] == pytest.approx(0.5)


def test_cli_eval_phi_and_policies(capsys):
    main(["eval-phi", "--instance", "example1", "--w", "100", "--engine", "highs"])
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(0.5)
    main(["eval-policies", "--instance", "example1", "--w", "111", "--policies", "100;010;001",
          "--engine", "highs"])
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1 / 3)


def test_cli_kadapt_and_generated_instance(tmp_path, capsys):
    f = tmp_path / "sp.json"
    main(["gen-sp", "--N", "6", "--seed", "1", "--output", str(f)])
    assert json.loads(f.read_text())["s"] != json.loads(f.read_text())["t"]
    main(["solve-kadapt", "--instance", str(f), "--K", "1", "--strengthen", "none",
          "--engine", "highs", "--big-m-audit"])
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "optimal"
    assert out["big_m_audit_objective"] == pytest.approx(out["objective"], abs=1e-6)


def test_cli_trace_file(tmp_path):
    tr = tmp_path / "t.jsonl"
    main(["solve-exact", "--instance", "example1", "--budget", "2", "--engine", "highs",
          "--cuts", "optimistic", "--trace", str(tr), "--output", str(tmp_path / "o.json")])
    lines = tr.read_text().splitlines()
    assert lines and all(json.loads(l)["cut"] == "integer" for l in lines)


def test_cli_bench(tmp_path, capsys):
    cfg = tmp_path / "b.ini"
    cfg.write_text("[bench]\ninstances = example1\nmethods = exact\nbudget = 0, 1\n")
    main(["bench", "--config", str(cfg), "--engine", "highs", "--out", "csv"])
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("schema,instance") and len(lines) == 3
