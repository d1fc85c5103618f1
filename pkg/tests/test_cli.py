import json

from click.testing import CliRunner

from dualmatch.cli import main


def test_synth_block_run_report_roundtrip(tmp_path):
    runner = CliRunner()
    task_dir = tmp_path / "task"
    result = runner.invoke(
        main,
        ["synth", "--seed", "7", "--n-source", "12", "--n-target", "14",
         "--match-rate", "0.01", "--noise", "0.3", "--out", str(task_dir)],
    )
    assert result.exit_code == 0, result.output
    assert (task_dir / "source.json").exists()
    assert (task_dir / "alignment.json").exists()

    candidates_file = tmp_path / "candidates.json"
    result = runner.invoke(main, ["block", "--task", str(task_dir), "--out", str(candidates_file)])
    assert result.exit_code == 0, result.output
    payload = json.loads(candidates_file.read_text())
    assert payload["candidates"]
    assert "blocking_recall" in payload
    assert all("admitted_by" in c for c in payload["candidates"])

    trace_file = tmp_path / "run.jsonl"
    result = runner.invoke(
        main,
        ["run", "--task", str(task_dir), "--budget", "20", "--batch", "5",
         "--seed", "2", "--trace", str(trace_file)],
    )
    assert result.exit_code == 0, result.output
    assert trace_file.exists()

    report_dir = tmp_path / "report"
    result = runner.invoke(main, ["report", "--trace", str(trace_file), "--out", str(report_dir)])
    assert result.exit_code == 0, result.output
    assert (report_dir / "run_report.json").exists()
    assert (report_dir / "run_f1_curve.csv").exists()
    assert (report_dir / "run_f1_curve.png").exists()
    assert (report_dir / "run_recall_cost.png").exists()


def test_run_variants_accepted(tmp_path):
    runner = CliRunner()
    task_dir = tmp_path / "task"
    runner.invoke(main, ["synth", "--seed", "3", "--n-source", "10", "--n-target", "10",
                         "--match-rate", "0.02", "--noise", "0.2", "--out", str(task_dir)])
    trace_file = tmp_path / "ent.jsonl"
    result = runner.invoke(
        main,
        ["run", "--task", str(task_dir), "--budget", "10", "--batch", "5", "--seed", "1",
         "--strategy", "entropy", "--ensemble", "uniform", "--slow-loop", "off",
         "--trace", str(trace_file)],
    )
    assert result.exit_code == 0, result.output


def test_run_with_synonym_lexicon_convention(tmp_path):
    runner = CliRunner()
    task_dir = tmp_path / "task"
    runner.invoke(main, ["synth", "--seed", "4", "--n-source", "10", "--n-target", "10",
                         "--match-rate", "0.02", "--noise", "0.2", "--out", str(task_dir)])
    (task_dir / "synonyms.json").write_text(json.dumps({"paper": ["article"]}))
    trace_file = tmp_path / "lex.jsonl"
    result = runner.invoke(
        main,
        ["run", "--task", str(task_dir), "--budget", "10", "--batch", "5", "--seed", "1",
         "--trace", str(trace_file)],
    )
    assert result.exit_code == 0, result.output


def test_bench_command(tmp_path):
    runner = CliRunner()
    config = {
        "tasks": [{"n_source": 12, "n_target": 14, "match_rate": 0.01, "noise": 0.3}],
        "seeds": [1],
        "variants": ["dualloop", "no-slow-loop"],
        "batch_size": 5,
        "budget": 15,
    }
    config_file = tmp_path / "bench.json"
    config_file.write_text(json.dumps(config))
    out_dir = tmp_path / "out"
    result = runner.invoke(main, ["bench", "--config", str(config_file), "--out", str(out_dir)])
    assert result.exit_code == 0, result.output
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "f1_vs_budget.png").exists()
    assert len(list(out_dir.glob("trace_*.jsonl"))) == 2
