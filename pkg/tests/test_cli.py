from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

import knot
from knot.cli import CliConfig, build_parser, main

APPENDIX = Path(knot.__file__).parent / "data" / "fixtures" / "arithmetic" / "appendix_1.lwt"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_arithmetic(capsys, tmp_path):
    trace = tmp_path / "t.jsonl"
    code, out, _ = run(capsys, "run", "arithmetic", "--size", "8", "--seed", "3", "--trace", str(trace))
    assert code == 0
    doc = json.loads(out)
    assert doc["correct"] is True and doc["answer"] == doc["ground_truth"]
    lines = trace.read_text().splitlines()
    assert json.loads(lines[-1])["final_answer"] == doc["answer"]


def test_run_script_directly(capsys):
    code, out, _ = run(capsys, "run", "--script", str(APPENDIX), "--query", "5*5/5*4+8-8+3*9")
    assert code == 0
    assert json.loads(out)["answer"] == "47"


def test_unknown_task(capsys):
    code, _, err = run(capsys, "run", "chess")
    assert code == 2
    assert "usage:" in err and "chess" in err


def test_strict_replay_miss(capsys, tmp_path):
    fixtures = tmp_path / "f.jsonl"
    fixtures.write_text("")
    code, _, err = run(capsys, "run", "--script", str(APPENDIX), "--query", "1+2",
                       "--backend", f"replay:{fixtures}")
    assert code == 1
    assert "Split the numbers without operators" in err


def test_record_then_replay(capsys, tmp_path):
    fixtures = tmp_path / "rec.jsonl"
    code, _, _ = run(capsys, "run", "--script", str(APPENDIX), "--query", "5*5/5*4+8-8+3*9",
                     "--backend", f"record:{fixtures}")
    assert code == 0
    code, out, _ = run(capsys, "run", "--script", str(APPENDIX), "--query", "5*5/5*4+8-8+3*9",
                       "--backend", f"replay:{fixtures}")
    assert code == 0 and json.loads(out)["answer"] == "47"


def test_record_command(capsys, tmp_path):
    fixtures = tmp_path / "grid.jsonl"
    code, out, _ = run(capsys, "record", str(fixtures), "--tasks", "large_digit", "--sizes", "8", "-n", "2")
    assert code == 0 and json.loads(out)["pairs"] > 0
    code, out, _ = run(capsys, "bench", "--tasks", "large_digit", "--sizes", "8", "-n", "2",
                       "--backend", f"replay:{fixtures}", "--summary")
    assert code == 0 and json.loads(out)["results"][0]["accuracy"] == 1.0


def test_bench_sorting_grid(capsys, tmp_path):
    out_file, csv_file = tmp_path / "r.json", tmp_path / "r.csv"
    code, _, err = run(capsys, "bench", "--tasks", "sorting", "-n", "100", "-o", str(out_file),
                       "--csv", str(csv_file), "-j", "4", "--summary")
    assert code == 0
    doc = json.loads(out_file.read_text())
    assert [(r["size"], r["accuracy"]) for r in doc["results"]] == [(16, 1.0), (32, 1.0), (64, 1.0)]
    assert "accuracy" in err
    assert csv_file.read_text().startswith("task,scheme,16,32,64")


def test_bench_zero_samples(capsys):
    code, _, err = run(capsys, "bench", "--tasks", "sorting", "-n", "0")
    assert code != 0 and "n must be" in err


def test_bench_ablation_label(capsys):
    code, out, _ = run(capsys, "bench", "--tasks", "arithmetic", "--sizes", "8", "-n", "2",
                       "--ablation", "110111", "--summary")
    assert code == 0 and json.loads(out)["results"][0]["ablation"] == "110111"


def test_ablate_runs_all_masks(capsys):
    code, out, _ = run(capsys, "ablate", "--tasks", "arithmetic", "--sizes", "8", "-n", "1", "--summary")
    assert code == 0
    masks = [r["ablation"] for r in json.loads(out)["results"]]
    assert masks == [None, "011111", "101111", "110111", "111011", "111101", "111110"]


def test_validate(capsys, tmp_path):
    code, out, err = run(capsys, "validate", str(APPENDIX))
    assert code == 0 and "0 errors" in err
    assert json.loads(out)["ok"] is True
    bad = tmp_path / "bad.lwt"
    bad.write_text('(0)=LLM("a")\n(1)=LLM("{(2)}")\n(2)=LLM("b")\n')
    code, out, _ = run(capsys, "validate", str(bad))
    assert code == 1 and json.loads(out)["errors"][0]["kind"] == "ForwardReference"
    code, _, _ = run(capsys, "validate", str(APPENDIX), "--inputs", "Set1")
    assert code == 1


def test_validate_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.lwt"
    bad.write_text('(0)=LLM("{(x y)}")\n')
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 1 and "parse error" in err


def test_graph(capsys, tmp_path):
    code, out, _ = run(capsys, "graph", str(APPENDIX))
    assert code == 0
    nodes = [ln for ln in out.splitlines() if "shape=" in ln]
    assert len(nodes) == 9 and sum("shape=box" in n for n in nodes) == 8
    dot = tmp_path / "g.dot"
    run(capsys, "graph", str(APPENDIX), "-o", str(dot))
    assert dot.read_text() == out


def test_cost(capsys):
    code, out, _ = run(capsys, "cost")
    doc = json.loads(out)
    assert code == 0 and len(doc) == 6
    assert len({v["constant_chars"] for v in doc.values()}) == 1


def test_http_without_key_fails_cleanly(capsys, monkeypatch):
    monkeypatch.delenv("KNOT_API_KEY", raising=False)
    code, _, err = run(capsys, "run", "--script", str(APPENDIX), "--query", "1+2", "--backend", "http")
    assert code == 1 and "KNOT_API_KEY" in err


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"model": "from-file", "parallelism": 3}))
    args = build_parser().parse_args(["bench", "--config", str(cfg_file), "--model", "from-flag"])
    env = {"KNOT_MODEL": "from-env", "KNOT_PARALLELISM": "5", "KNOT_TEMPERATURE": "0.5"}
    cfg = CliConfig.resolve(args, env)
    assert cfg.model == "from-flag"
    assert cfg.parallelism == 3
    assert cfg.temperature == 0.5
    assert cfg.backend == "oracle"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "knot", "validate", str(APPENDIX)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["ok"]


def test_help_mentions_key_variable(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    assert "KNOT_API_KEY" in capsys.readouterr().out
