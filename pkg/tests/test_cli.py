import json

import pytest

from sadiag.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_synth_spec(tmp_path, **overrides):
    doc = {"speeds_rpm": [960, 1320], "per_class": 3, "segment_len": 1024,
           "rng_seed": 1}
    doc.update(overrides)
    path = tmp_path / "synth.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def generate_datasets(tmp_path, capsys):
    spec = write_synth_spec(tmp_path)
    code, out, err = run_cli(capsys, "synth", "--spec", str(spec),
                             "--out", str(tmp_path / "data"))
    assert code == 0, err
    return json.loads(out)["manifests"]


def test_synth_then_run_then_hdh(tmp_path, capsys):
    manifests = generate_datasets(tmp_path, capsys)
    assert len(manifests) == 2
    assert all(m.endswith("manifest.json") for m in manifests)

    config_path = tmp_path / "experiment.json"
    config_path.write_text(json.dumps({
        "domains": [
            {"name": "lo", "manifest": "data/rpm960/manifest.json"},
            {"name": "hi", "manifest": "data/rpm1320/manifest.json"},
        ],
        "methods": ["baseline1", "nn_sa"],
        "repeats": 1,
        "dim": "fixed:8",
        "hdh_repeats": 2,
        "output_dir": str(tmp_path / "results"),
    }), encoding="utf-8")
    code, out, err = run_cli(capsys, "run", "--config", str(config_path))
    assert code == 0, err
    summary = json.loads(out)
    assert summary["pairs"] == 2
    assert summary["methods"] == ["baseline1", "nn_sa"]
    report = json.loads((tmp_path / "results" / "report.json").read_text())
    assert report["schema"] == "sadiag-report-v1"

    hdh_out = tmp_path / "hdh.json"
    code, out, err = run_cli(
        capsys, "hdh", "--source", manifests[0], "--target", manifests[1],
        "--dim", "fixed:8", "--repeats", "2", "--out", str(hdh_out),
    )
    assert code == 0, err
    result = json.loads(out)
    assert result["subspace_dim"] == 8
    assert len(result["hdh_raw_features"]["values"]) == 2
    assert all(0.0 <= v <= 2.0 for v in result["hdh_aligned"]["values"])
    assert json.loads(hdh_out.read_text()) == result


def test_run_overrides_and_csv_format(tmp_path, capsys):
    generate_datasets(tmp_path, capsys)
    config_path = tmp_path / "experiment.json"
    config_path.write_text(json.dumps({
        "domains": [
            {"name": "lo", "manifest": "data/rpm960/manifest.json"},
            {"name": "hi", "manifest": "data/rpm1320/manifest.json"},
        ],
        "methods": ["baseline1", "baseline2"],
        "repeats": 5,
        "dim": "fixed:8",
        "hdh_repeats": 2,
    }), encoding="utf-8")
    code, out, err = run_cli(
        capsys, "run", "--config", str(config_path),
        "--repeats", "1", "--methods", "baseline1", "--format", "csv",
        "--out", str(tmp_path / "alt"), "--seed", "5", "--workers", "2",
    )
    assert code == 0, err
    summary = json.loads(out)
    assert summary["repeats"] == 1
    assert summary["methods"] == ["baseline1"]
    lines = (tmp_path / "alt" / "report.csv").read_text().splitlines()
    assert lines[0].startswith("source,target,method")
    assert len(lines) == 1 + 2  # header + 2 pairs x 1 method


def test_synth_outputs_are_deterministic(tmp_path, capsys):
    spec = write_synth_spec(tmp_path)
    for name in ("first", "second"):
        code, _, err = run_cli(capsys, "synth", "--spec", str(spec),
                               "--out", str(tmp_path / name))
        assert code == 0, err
    for relative in ("rpm960/NO.bin", "rpm1320/OF.bin", "rpm960/manifest.json"):
        assert (tmp_path / "first" / relative).read_bytes() == \
            (tmp_path / "second" / relative).read_bytes()


def test_error_envelope_on_missing_config(tmp_path, capsys):
    code, out, err = run_cli(capsys, "run", "--config",
                             str(tmp_path / "absent.json"))
    assert code == 2
    assert out == ""
    envelope = json.loads(err)
    assert envelope["error"] == "FileNotFoundError" or envelope["error"] == "OSError"
    assert "absent.json" in envelope["message"]


@pytest.mark.parametrize("doc,fragment", [
    ({"speeds_rpm": [960]}, "missing"),
    ({"speeds_rpm": [], "per_class": 2}, "nonempty"),
    ({"speeds_rpm": [960], "per_class": 2, "volume": 11}, "unknown synth spec keys"),
])
def test_synth_spec_validation_errors(tmp_path, capsys, doc, fragment):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    code, out, err = run_cli(capsys, "synth", "--spec", str(path),
                             "--out", str(tmp_path / "data"))
    assert code == 2
    envelope = json.loads(err)
    assert envelope["error"] == "ConfigurationError"
    assert fragment in envelope["message"]


def test_hdh_reports_parse_error_envelope(tmp_path, capsys):
    bad = tmp_path / "manifest.json"
    bad.write_text("{broken", encoding="utf-8")
    code, _, err = run_cli(capsys, "hdh", "--source", str(bad),
                           "--target", str(bad))
    assert code == 2
    assert json.loads(err)["error"] == "ParseError"
