import subprocess
import sys

from mergedse.cli import build_parser, main
from mergedse.dse import corpus_dir

POLY_IR = str(corpus_dir() / "poly.ir")
POLY_HEAP = str(corpus_dir() / "poly.heap")


def run_cli(args, **kw):
    return subprocess.run([sys.executable, "-m", "mergedse.cli"] + args,
                          capture_output=True, text=True, **kw)


def test_help_lists_documented_flags():
    expected = {
        "analyze": ["--callgraph", "--loops", "--rank", "--seed", "-o"],
        "merge": ["--pair", "--all", "--min-similarity", "--seeds",
                  "--verify", "--trials", "--csv"],
        "train": ["--model", "--samples", "--alpha", "--dataset",
                  "--dump-dataset"],
        "eval": ["--model", "--test"],
        "dse": ["--config", "--budget", "--latency", "--bandwidth", "--clock",
                "--mode", "--model", "--seed", "--jobs", "-o"],
        "sweep": ["--budgets", "--latencies", "--bandwidths", "--modes"],
        "verify": ["--pair", "--trials"],
        "transform": ["--extract-loops"],
        "partition": ["--budget", "--latency", "--bandwidth"],
    }
    parser = build_parser()
    sub = next(a for a in parser._actions
               if isinstance(a, type(parser._subparsers._group_actions[0])))
    for command, flags in expected.items():
        text = sub.choices[command].format_help()
        for flag in flags:
            assert flag in text, (command, flag)


def test_analyze_callgraph_and_loops(tmp_path):
    r = run_cli(["analyze", "--callgraph", POLY_IR])
    assert r.returncode == 0
    assert "main: direct=poly_a,poly_b,poly_c" in r.stdout
    r = run_cli(["analyze", "--loops", POLY_IR])
    assert r.returncode == 0
    assert "header=h" in r.stdout


def test_transform_extract_loops_parses_back(tmp_path):
    out = tmp_path / "out.ir"
    r = run_cli(["transform", "--extract-loops", POLY_IR, "-o", str(out)])
    assert r.returncode == 0
    from mergedse.ir import parse_module
    m = parse_module(out.read_text())
    assert "main_loop0" in m.functions


def test_merge_all_writes_csv_and_module(tmp_path):
    out = tmp_path / "merged.ir"
    csv = tmp_path / "pairs.csv"
    r = run_cli(["merge", "--all", "--min-similarity", "0.3", "--seeds", "4",
                 "--verify", "--trials", "20", "--csv", str(csv),
                 POLY_IR, "-o", str(out)])
    assert r.returncode == 0
    lines = csv.read_text().strip().split("\n")
    assert lines[0] == "pair,similarity,aligned_fraction,verified"
    assert len(lines) > 1
    assert all(line.endswith("true") for line in lines[1:])
    from mergedse.ir import parse_module
    m = parse_module(out.read_text())
    assert any(f.provenance == "merged" for f in m.functions.values())


def test_verify_subcommand():
    r = run_cli(["verify", POLY_IR, "--pair", "poly_a,poly_b",
                 "--trials", "30", "--seed", "1"])
    assert r.returncode == 0
    assert "verified true" in r.stdout


def test_exit_codes(tmp_path):
    # usage error: unknown subcommand argument combination
    assert main(["analyze", POLY_IR]) == 1
    # input error: malformed config value, message names the field
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("area_budget = -5\n")
    r = run_cli(["dse", "--config", str(cfg), POLY_IR, POLY_HEAP])
    assert r.returncode == 2
    assert "budget" in r.stderr
    # input error: parse failure
    bad_ir = tmp_path / "bad.ir"
    bad_ir.write_text("func @f( -> i32 { bb0: ret i32 1 }")
    r = run_cli(["analyze", "--callgraph", str(bad_ir)])
    assert r.returncode == 2
    # unknown config key
    cfg.write_text("warp_speed = 9\n")
    r = run_cli(["dse", "--config", str(cfg), POLY_IR, POLY_HEAP])
    assert r.returncode == 2


def test_train_eval_cycle(tmp_path):
    model = tmp_path / "model.txt"
    data = tmp_path / "data.csv"
    r = run_cli(["train", "--model", "lasso", "--samples", "80",
                 "--seed", "3", "--dump-dataset", str(data),
                 "-o", str(model)])
    assert r.returncode == 0, r.stderr
    assert model.exists() and data.exists()
    r = run_cli(["eval", "--model", str(model), "--test", str(data)])
    assert r.returncode == 0
    assert r.stdout.startswith("r2 ")
    assert "mre " in r.stdout


def test_dse_end_to_end(tmp_path, model_file):
    out = tmp_path / "report"
    r = run_cli(["dse", "--model", model_file, "--seed", "7",
                 "--budget", "6000", POLY_IR, POLY_HEAP, "-o", str(out)])
    assert r.returncode == 0, r.stderr
    csv = out.with_suffix(".csv").read_text()
    assert csv.startswith("config,budget_luts")
    import json
    from mergedse.dse import validate_report_json
    doc = json.loads(out.with_suffix(".json").read_text())
    assert validate_report_json(doc) == []


def test_sweep_without_budget_uses_preset_grid(tmp_path, model_file):
    out = tmp_path / "sweep"
    r = run_cli(["sweep", "--model", model_file, "--seed", "7",
                 "--latencies", "25", "--bandwidths", "inf",
                 "--modes", "FE", POLY_IR, POLY_HEAP, "-o", str(out)])
    assert r.returncode == 0, r.stderr
    lines = out.with_suffix(".csv").read_text().strip().split("\n")
    # unspecified budget means the scalability preset grid
    from mergedse.dse import PRESET_BUDGETS
    assert len(lines) == 1 + len(PRESET_BUDGETS)


def test_dse_without_budget_sweeps_presets(tmp_path, model_file):
    out = tmp_path / "auto"
    r = run_cli(["dse", "--model", model_file, "--seed", "7", "--mode", "FE",
                 "--latency", "25", "--bandwidth", "inf",
                 POLY_IR, POLY_HEAP, "-o", str(out)])
    assert r.returncode == 0, r.stderr
    assert "scalability" in r.stderr or "sweeping" in r.stderr
    from mergedse.dse import PRESET_BUDGETS
    lines = out.with_suffix(".csv").read_text().strip().split("\n")
    assert len(lines) == 1 + len(PRESET_BUDGETS)


def test_partition_subcommand(tmp_path, model_file):
    r = run_cli(["partition", "--model", model_file, "--budget", "8000",
                 POLY_IR, POLY_HEAP])
    assert r.returncode == 0, r.stderr
    assert "objective_s" in r.stdout
    assert "optimal true" in r.stdout
