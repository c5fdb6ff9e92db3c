"""End-to-end command line checks: workflows, determinism, and exit codes."""

import json

import numpy as np
import pytest

from povm_entangle import HermitianOperator, PovmSet
from povm_entangle.cli import main


def run(argv, capsys):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


@pytest.fixture()
def bell_csv(tmp_path, capsys):
    path = tmp_path / "counts.csv"
    rc = main(["simulate", "--seed", "0", "-o", str(path)])
    capsys.readouterr()
    assert rc == 0
    return path


def mixed_povm_file(tmp_path):
    # first element is a scaled product projector: its standard form cannot
    # converge, while the full-rank complement goes through fine
    p00 = np.zeros((4, 4))
    p00[0, 0] = 1.0
    povm = PovmSet(
        ("bad", "good"),
        (
            HermitianOperator(0.5 * p00, (2, 2)),
            HermitianOperator(np.eye(4) - 0.5 * p00, (2, 2)),
        ),
    )
    path = tmp_path / "mixed_povm.json"
    path.write_text(json.dumps(povm.to_dict()))
    return path


class TestWorkflow:
    def test_simulate_reconstruct_quasidist_chain(self, tmp_path, capsys, bell_csv):
        rec = tmp_path / "rec.json"
        rc, _, _ = run(["reconstruct", "--counts", str(bell_csv), "-o", str(rec)], capsys)
        assert rc == 0
        payload = json.loads(rec.read_text())
        assert set(payload) >= {
            "manifest",
            "raw_povm",
            "corrected_povm",
            "lambda",
            "p",
            "completeness_residual",
            "bell_match",
        }
        assert payload["completeness_residual"] < 1e-12
        match = {k: v["label"] for k, v in payload["bell_match"].items()}
        assert match == {"AA": "0", "AD": "x", "DA": "z", "DD": "y"}
        assert all(v["overlap"] > 0.9 for v in payload["bell_match"].values())

        qdir = tmp_path / "qdist"
        rc, _, _ = run(["quasidist", "--povm", str(rec), "-o", str(qdir)], capsys)
        assert rc == 0
        summary = json.loads((qdir / "summary.json").read_text())
        assert summary["failed"] == []
        assert set(summary["elements"]) == {"AA", "AD", "DA", "DD"}
        for label, entry in summary["elements"].items():
            assert entry["q"] == pytest.approx(-0.5, abs=0.05)
            assert entry["verdict"] == "entangled"
            assert (qdir / entry["file"]).exists()
            assert (qdir / f"element_{label}.svg").exists()

    def test_witness_element_mode_on_reconstruction(self, tmp_path, capsys, bell_csv):
        rec = tmp_path / "rec.json"
        assert run(["reconstruct", "--counts", str(bell_csv), "-o", str(rec)], capsys)[0] == 0
        rc, out, _ = run(["witness", "--povm", str(rec), "--element", "DD"], capsys)
        assert rc == 0
        payload = json.loads(out)
        assert payload["mode"] == "element"
        assert payload["verdict"] == "entangled"
        assert payload["lhs"] == pytest.approx(0.5, abs=0.05)

    def test_povm_bell_literal(self, tmp_path, capsys):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run(["simulate", "--seed", "4", "-o", str(a)], capsys)[0] == 0
        assert run(["simulate", "--povm", "BELL", "--seed", "4", "-o", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_model_spec_file(self, tmp_path, capsys):
        spec = tmp_path / "model.json"
        spec.write_text(json.dumps({"povm": "bell", "eps": 0.0, "counts_per_setting": 10000, "seed": 0}))
        out = tmp_path / "spec_counts.csv"
        assert run(["simulate", "--model", str(spec), "-o", str(out)], capsys)[0] == 0
        ref = tmp_path / "ref.csv"
        assert run(["simulate", "--seed", "0", "-o", str(ref)], capsys)[0] == 0
        assert out.read_bytes() == ref.read_bytes()

    def test_errors_summary_manifest(self, tmp_path, capsys):
        counts = tmp_path / "small.csv"
        assert run(["simulate", "--counts", "400", "--seed", "1", "-o", str(counts)], capsys)[0] == 0
        rc, out, _ = run(
            ["errors", "--counts", str(counts), "--samples", "12", "--seed", "2", "--workers", "1"],
            capsys,
        )
        assert rc == 0
        payload = json.loads(out)
        assert payload["manifest"]["parameters"]["samples"] == 12
        assert payload["manifest"]["parameters"]["inflation"] == 1.05
        assert payload["sample_size"] == 12
        assert set(payload["elements"]) if isinstance(payload["elements"], dict) else True

    def test_witness_family_modes(self, capsys):
        rc, out, _ = run(["witness", "--family", "ghz", "-n", "2", "--eps", "0.1"], capsys)
        assert rc == 0
        payload = json.loads(out)
        assert payload["verdict"] == "entangled"
        assert payload["noise_threshold"] == pytest.approx(0.2, abs=1e-12)

        rc, out, _ = run(["witness", "--family", "me", "-d", "3", "--eps", "0.2"], capsys)
        assert rc == 0
        payload = json.loads(out)
        assert payload["verdict"] == "inconclusive"

    def test_witness_lambda_cross_check(self, capsys):
        rc, out, _ = run(
            ["witness", "--lambda", "-n", "3", "-d", "2", "--restarts", "8", "--seed", "1"],
            capsys,
        )
        assert rc == 0
        payload = json.loads(out)
        assert payload["analytic"] == pytest.approx(0.25, abs=1e-12)
        assert abs(payload["difference"]) < 1e-6
        assert payload["converged"] is True

    def test_combine_identity_grouping_round_trips(self, tmp_path, capsys, bell_csv):
        out = tmp_path / "merged.csv"
        rc, _, _ = run(
            ["combine", "--counts", str(bell_csv), "--groups", "AA,AD,DA,DD", "-o", str(out)],
            capsys,
        )
        assert rc == 0
        assert out.read_bytes() == bell_csv.read_bytes()

    def test_combine_pairwise_merge(self, tmp_path, capsys, bell_csv):
        rc, out, _ = run(
            ["combine", "--counts", str(bell_csv), "--groups", "AA+AD,DA+DD"], capsys
        )
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "probe_a,probe_b,outcome,count"
        outcomes = {ln.split(",")[2] for ln in lines[1:]}
        assert outcomes == {"AA+AD", "DA+DD"}


class TestDeterminism:
    def test_simulate_rerun_byte_identical(self, tmp_path, capsys):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert run(["simulate", "--seed", "3", "-o", str(a)], capsys)[0] == 0
        assert run(["simulate", "--seed", "3", "-o", str(b)], capsys)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        c = tmp_path / "c.json"
        assert run(["simulate", "--seed", "4", "-o", str(c)], capsys)[0] == 0
        assert a.read_bytes() != c.read_bytes()

    def test_json_counts_reload_matches_csv(self, tmp_path, capsys):
        as_csv = tmp_path / "counts.csv"
        as_json = tmp_path / "counts.json"
        assert run(["simulate", "--seed", "7", "-o", str(as_csv)], capsys)[0] == 0
        assert run(["simulate", "--seed", "7", "-o", str(as_json)], capsys)[0] == 0
        rec_a = tmp_path / "rec_a.json"
        rec_b = tmp_path / "rec_b.json"
        assert run(["reconstruct", "--counts", str(as_csv), "-o", str(rec_a)], capsys)[0] == 0
        assert run(["reconstruct", "--counts", str(as_json), "-o", str(rec_b)], capsys)[0] == 0
        a = json.loads(rec_a.read_text())
        b = json.loads(rec_b.read_text())
        assert a["corrected_povm"] == b["corrected_povm"]

    def test_seed_env_fallback(self, tmp_path, capsys, monkeypatch):
        viaenv = tmp_path / "env.csv"
        viaflag = tmp_path / "flag.csv"
        monkeypatch.setenv("POVM_ENTANGLE_SEED", "123")
        assert run(["simulate", "-o", str(viaenv)], capsys)[0] == 0
        monkeypatch.delenv("POVM_ENTANGLE_SEED")
        assert run(["simulate", "--seed", "123", "-o", str(viaflag)], capsys)[0] == 0
        assert viaenv.read_bytes() == viaflag.read_bytes()

    def test_seed_env_must_be_integer(self, capsys, monkeypatch):
        monkeypatch.setenv("POVM_ENTANGLE_SEED", "not-a-number")
        rc, _, err = run(["simulate"], capsys)
        assert rc == 2
        assert "POVM_ENTANGLE_SEED" in err


class TestExitCodes:
    def test_version(self, capsys):
        rc, out, _ = run(["--version"], capsys)
        assert rc == 0
        assert "povm-entangle" in out

    def test_usage_error_is_one(self, capsys):
        rc, _, err = run(["reconstruct"], capsys)
        assert rc == 1
        assert "--counts" in err

    def test_witness_without_mode_is_one(self, capsys):
        rc, _, err = run(["witness"], capsys)
        assert rc == 1
        assert "mode" in err

    def test_missing_file_is_two(self, capsys):
        rc, _, err = run(["reconstruct", "--counts", "/nonexistent/file.csv"], capsys)
        assert rc == 2
        assert "no such file" in err

    def test_malformed_json_is_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        rc, _, err = run(["reconstruct", "--counts", str(bad)], capsys)
        assert rc == 2

    def test_overlapping_groups_is_two(self, tmp_path, capsys, bell_csv):
        rc, _, err = run(
            ["combine", "--counts", str(bell_csv), "--groups", "AA+AD,AD+DA"], capsys
        )
        assert rc == 2

    def test_quasidist_convergence_failure_is_three(self, tmp_path, capsys):
        povm_path = mixed_povm_file(tmp_path)
        qdir = tmp_path / "qout"
        rc, _, err = run(
            ["quasidist", "--povm", str(povm_path), "-o", str(qdir), "--max-iter", "300"],
            capsys,
        )
        assert rc == 3
        assert "bad" in err
        summary = json.loads((qdir / "summary.json").read_text())
        assert summary["failed"] == ["bad"]
        assert "error" in summary["elements"]["bad"]
        # the healthy element still went all the way through
        assert "q" in summary["elements"]["good"]
        assert (qdir / summary["elements"]["good"]["file"]).exists()
        assert not (qdir / "element_bad.json").exists()
