import json

import pytest

from edgeshield.cli import main
from edgeshield.dataset import export_dataset, ingest, synthesize
from edgeshield.metrics import MetricsReport
from edgeshield.simulation import parse_report


@pytest.fixture
def dataset_file(tmp_path):
    dataset = synthesize({3: 0.5, 10: 0.3, 20: 0.2}, 200, seed=12)
    path = tmp_path / "flows.csv"
    export_dataset(dataset, path)
    return path


def run(args):
    return main([str(a) for a in args])


def test_usage_error_exit_code(capsys):
    assert run(["no-such-command"]) == 1
    assert run([]) == 1
    assert "usage error" in capsys.readouterr().err


def test_ingest_summary(dataset_file, capsys):
    assert run(["ingest", "--input", dataset_file]) == 0
    out = capsys.readouterr().out
    assert "rows: 200  accepted: 200  malformed: 0" in out
    assert "label  3" in out


def test_ingest_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run(["ingest", "--input", bad]) == 2
    assert run(["ingest", "--input", tmp_path / "missing.csv"]) == 2
    assert "error" in capsys.readouterr().err


def test_ingest_reexport_round_trip(dataset_file, tmp_path):
    out = tmp_path / "copy.csv"
    assert run(["ingest", "--input", dataset_file, "--output", out]) == 0
    original, _ = ingest(dataset_file)
    copied, _ = ingest(out)
    assert copied.records == original.records


def test_split_writes_three_files(dataset_file, tmp_path, capsys):
    out_dir = tmp_path / "splits"
    assert run(["split", "--input", dataset_file, "--seed", 9, "--output-dir", out_dir]) == 0
    out = capsys.readouterr().out
    assert "train: 120" in out
    assert "val: 40" in out
    assert "test: 40" in out
    assert "mode: stratified" in out
    train, _ = ingest(out_dir / "flows-train.csv")
    assert len(train) == 120


def test_synth_presets(tmp_path, capsys):
    out = tmp_path / "synth.csv"
    assert run(["synth", "--preset", "toniot", "--n", 500, "--seed", 4, "--output", out]) == 0
    dataset, _ = ingest(out)
    assert len(dataset) == 500
    assert run(
        ["synth", "--proportions", '{"3": 0.7, "10": 0.3}', "--n", 50, "--seed", 1,
         "--output", tmp_path / "two.csv"]
    ) == 0
    two, _ = ingest(tmp_path / "two.csv")
    assert set(two.labels()) == {3, 10}


def test_evaluate_baseline_kv_report(dataset_file, tmp_path, capsys):
    report_path = tmp_path / "report.txt"
    code = run(
        ["evaluate", "--test", dataset_file, "--backend", "baseline",
         "--train-synth", 600, "--train-seed", 2, "--report-out", report_path]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "accuracy=" in out
    report = MetricsReport.from_kv_text(report_path.read_text())
    assert report.accuracy >= 0.95
    assert report.micro_f1 == report.accuracy


def test_evaluate_energy_file(dataset_file, tmp_path, capsys):
    energy = tmp_path / "energy.txt"
    energy.write_text("\n".join(["0.0717"] * 400))  # 200 records, 28.68 J total
    code = run(
        ["evaluate", "--test", dataset_file, "--train-synth", 600, "--energy-file", energy]
    )
    assert code == 0
    out = capsys.readouterr().out
    report = MetricsReport.from_kv_text(
        "\n".join(line for line in out.splitlines() if "=" in line and "confusion" not in line)
    )
    assert abs(report.energy_j_per_req - 0.1434) < 1e-12


def test_evaluate_backend_error_exit_code(dataset_file, capsys):
    code = run(
        ["evaluate", "--test", dataset_file, "--backend", "remote:127.0.0.1:1",
         "--timeout", 0.2, "--retries", 0]
    )
    assert code == 3
    assert "backend error" in capsys.readouterr().err


def test_evaluate_unknown_backend_is_usage_error(dataset_file):
    assert run(["evaluate", "--test", dataset_file, "--backend", "oracle"]) == 1


@pytest.fixture
def scenario_file(tmp_path):
    doc = {
        "seed": 5,
        "horizon_seconds": 4.0,
        "nodes": [{"node_id": "edge-0", "benign_rate": 15.0}],
        "attacks": [
            {"class_name": "DDoS", "rate": 300.0, "start": 1.0, "stop": 3.0, "source_pool": 20}
        ],
        "backend": {"kind": "baseline", "train_n": 1000, "train_seed": 3},
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_simulate_and_report_pipeline(scenario_file, tmp_path, capsys):
    events_path = tmp_path / "events.jsonl"
    report_path = tmp_path / "report.json"
    code = run(
        ["simulate", "--scenario", scenario_file, "--events-out", events_path,
         "--report-out", report_path]
    )
    assert code == 0
    capsys.readouterr()
    snapshot = parse_report(report_path.read_text())
    assert snapshot.flows > 0

    # the report subcommand reproduces the same snapshot from the event file
    code = run(["report", "--events", events_path, "--format", "json"])
    assert code == 0
    out = capsys.readouterr().out
    assert parse_report(out) == snapshot

    code = run(["report", "--events", events_path, "--format", "text", "--model", "baseline-tree/1"])
    assert code == 0
    text = capsys.readouterr().out
    assert "edge-cloud monitoring snapshot" in text
    assert "baseline-tree/1" in text


def test_simulate_seed_override_changes_events(scenario_file, tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    assert run(["simulate", "--scenario", scenario_file, "--events-out", a]) == 0
    assert run(["simulate", "--scenario", scenario_file, "--events-out", b, "--seed", 99]) == 0
    assert a.read_text() != b.read_text()


def test_simulate_cross_process_determinism(scenario_file, tmp_path):
    import subprocess
    import sys

    outputs = []
    for name in ("x.jsonl", "y.jsonl"):
        path = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "edgeshield.cli", "simulate", "--scenario",
             str(scenario_file), "--events-out", str(path), "--report-out",
             str(tmp_path / (name + ".json"))],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(path.read_text())
    assert outputs[0] == outputs[1]
    assert (tmp_path / "x.jsonl.json").read_text() == (tmp_path / "y.jsonl.json").read_text()


def test_simulate_backend_override(scenario_file, tmp_path):
    assert run(["simulate", "--scenario", scenario_file, "--backend", "warlock"]) == 1
    # remote override pointing nowhere surfaces as a backend error
    assert run(
        ["simulate", "--scenario", scenario_file, "--backend", "remote:127.0.0.1:1"]
    ) == 3


def test_simulate_bad_scenario_is_data_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1}')
    assert run(["simulate", "--scenario", bad]) == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{{{")
    assert run(["simulate", "--scenario", garbled]) == 2


def test_strict_paper_taxonomy_flag(tmp_path):
    # label 6 only exists in the canonical taxonomy
    dataset = synthesize({6: 1.0}, 10, seed=1)
    path = tmp_path / "six.csv"
    export_dataset(dataset, path)
    assert run(["ingest", "--input", path]) == 0
    assert run(["ingest", "--input", path, "--strict-paper-taxonomy"]) == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "edgeshield" in capsys.readouterr().out
