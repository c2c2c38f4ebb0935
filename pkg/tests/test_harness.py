import json
import os
import subprocess
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np
import pytest

from patchcert import (
    CertificateRecord,
    ConfigError,
    RunConfig,
    Sample,
    compute_metrics,
    format_fraction,
    run_certify,
    run_oracle,
    save_sample,
)

REPO = Path(__file__).parent.parent
GOLDEN = REPO / "tests" / "golden"


def record(g, c_u, c_d, c_r, sample="s", defender="cc"):
    return CertificateRecord(
        sample_id=sample, defender=defender, g=g, v=False,
        c_u=c_u, c_d=c_d, c_r=c_r, provenance="none",
        g1=g, g2=g, c1=c_r, c2=False, case_alg1="I", case_alg2="I",
    )


class TestMetrics:
    def test_all_correct_all_certified(self):
        records = [record(1, True, True, True)] * 4
        report = compute_metrics(records, [1, 1, 1, 1])
        assert (report.acc_clean, report.acc_cert_d, report.acc_cert_u,
                report.acc_cert_r) == ("1.000000",) * 4

    def test_hand_counted_three_sample_fixture(self):
        records = [
            record(0, True, True, True),    # correct, everything certified
            record(1, False, True, False),  # correct, detection only
            record(2, True, True, True),    # wrong prediction, flags ignored
        ]
        report = compute_metrics(records, [0, 1, 0])
        assert report.acc_clean == "0.666667"
        assert report.acc_cert_d == "0.666667"
        assert report.acc_cert_u == "0.333333"
        assert report.acc_cert_r == "0.333333"

    def test_count_mismatch(self):
        with pytest.raises(ConfigError, match="mismatch"):
            compute_metrics([record(0, True, True, True)], [0, 1])

    def test_empty_dataset_is_error(self):
        with pytest.raises(ConfigError, match="empty"):
            compute_metrics([], [])

    def test_aggregate_inequalities(self, rng):
        for _ in range(50):
            records = []
            labels = []
            for i in range(8):
                flags = rng.integers(0, 2, size=3).astype(bool)
                c_r, c2 = bool(flags[0]), bool(flags[1])
                c_u = c_r and c2 and bool(flags[2])
                c_d = c_u or c_r  # keep the structural implication
                records.append(record(int(rng.integers(0, 3)), c_u, c_d, c_r))
                labels.append(int(rng.integers(0, 3)))
            report = compute_metrics(records, labels)
            assert report.counts["cert_u"] <= report.counts["cert_d"] <= report.counts["clean"]
            assert report.counts["cert_u"] <= report.counts["cert_r"]


class TestFormatFraction:
    def test_plain_values(self):
        assert format_fraction(1, 2) == "0.500000"
        assert format_fraction(0, 7) == "0.000000"
        assert format_fraction(7, 7) == "1.000000"

    def test_round_half_even_matches_decimal(self):
        for num in range(0, 250):
            for den in (1, 3, 6, 7, 16, 2_000_000):
                want = str(
                    (Decimal(num) / Decimal(den)).quantize(
                        Decimal("0.000001"), rounding=ROUND_HALF_EVEN)
                )
                got = format_fraction(num, den)
                assert Decimal(got) == Decimal(want)
                assert len(got.split(".")[1]) == 6


def certify_args(dataset, out, defender="cc"):
    model = str(GOLDEN / "model_const.json")
    return [
        "certify", "--dataset", str(dataset), "--patch", "2", "--masks", "3",
        "--ablation", "1", "--classifier-h", f"table:{model}",
        "--classifier-f", f"table:{model}", "--defender", defender,
        "--out", str(out),
    ]


def run_cli(args, env_extra=None, cwd=None):
    env = dict(os.environ)
    env.update(env_extra or {})
    return subprocess.run(
        [sys.executable, "-m", "patchcert.cli", *args],
        capture_output=True, text=True, env=env, cwd=cwd or REPO,
    )


class TestCli:
    def test_certify_byte_identical_runs(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert run_cli(certify_args(GOLDEN / "dataset", out1)).returncode == 0
        assert run_cli(certify_args(GOLDEN / "dataset", out2)).returncode == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_certify_byte_identical_across_worker_counts(self, tmp_path):
        out1, out2 = tmp_path / "w1.json", tmp_path / "w4.json"
        run_cli(certify_args(GOLDEN / "dataset", out1), {"PATCHCERT_WORKERS": "1"})
        run_cli(certify_args(GOLDEN / "dataset", out2), {"PATCHCERT_WORKERS": "4"})
        assert out1.read_bytes() == out2.read_bytes()

    def test_golden_report(self, tmp_path):
        # the dataset path is part of the config echo, so run from the repo
        # root with the committed relative path
        out = tmp_path / "fresh.json"
        args = [
            "certify", "--dataset", "tests/golden/dataset", "--patch", "2",
            "--masks", "3", "--ablation", "1",
            "--classifier-h", "table:tests/golden/model_const.json",
            "--classifier-f", "table:tests/golden/model_const.json",
            "--defender", "cc", "--out", str(out),
        ]
        proc = run_cli(args, cwd=REPO)
        assert proc.returncode == 0, proc.stderr
        assert out.read_bytes() == (GOLDEN / "certify_cc.json").read_bytes()

    def test_constant_classifier_full_certified_metrics(self, tmp_path):
        dataset = tmp_path / "ds"
        dataset.mkdir()
        rng = np.random.default_rng(5)
        names = []
        for i in range(3):
            save_sample(dataset / f"s{i}.sgf",
                        Sample(6, 6, rng.integers(1, 3, size=36), 2))
            names.append(f"s{i}.sgf,0")
        (dataset / "labels.csv").write_text("file,label\n" + "\n".join(names) + "\n")
        out = tmp_path / "r.json"
        proc = run_cli(certify_args(dataset, out))
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["metrics"] == {
            "acc_clean": "1.000000", "acc_cert_d": "1.000000",
            "acc_cert_u": "1.000000", "acc_cert_r": "1.000000",
        }
        assert payload["timing_ms"] is None

    def test_predict_prints_label_and_warning(self):
        model = str(GOLDEN / "model_const.json")
        proc = run_cli([
            "predict", "--image", str(GOLDEN / "dataset" / "s000.sgf"),
            "--patch", "2", "--masks", "3", "--ablation", "1",
            "--classifier-h", f"table:{model}", "--classifier-f", f"table:{model}",
        ])
        assert proc.returncode == 0
        assert proc.stdout.strip() == "label=0 warning=false"

    def test_oracle_clean_exit_zero(self, tmp_path):
        model = str(GOLDEN / "model_const.json")
        out = tmp_path / "oracle.json"
        proc = run_cli([
            "oracle", "--dataset", str(GOLDEN / "dataset"), "--patch", "2",
            "--masks", "3", "--ablation", "1",
            "--classifier-h", f"table:{model}", "--classifier-f", f"table:{model}",
            "--out", str(out), "--budget", "3000",
        ])
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert payload["violations"] == []
        # both defenders' records are included
        assert {r["defender"] for r in payload["records"]} == {"cc", "cc-base"}

    def test_oracle_budget_exit_three(self):
        model = str(GOLDEN / "model_const.json")
        proc = run_cli([
            "oracle", "--dataset", str(GOLDEN / "dataset"), "--patch", "2",
            "--masks", "3", "--ablation", "1",
            "--classifier-h", f"table:{model}", "--classifier-f", f"table:{model}",
            "--budget", "0",
        ])
        assert proc.returncode == 3
        assert "budget" in proc.stderr

    def test_oracle_violation_exit_one(self, monkeypatch):
        from patchcert import cli
        monkeypatch.setattr(cli, "run_oracle", lambda cfg: (1, {}))
        code = cli.main([
            "oracle", "--dataset", "x", "--patch", "2", "--masks", "3",
            "--ablation", "1", "--classifier-h", "synthetic:modsum",
            "--classifier-f", "synthetic:modsum", "--labels", "3",
        ])
        assert code == 1

    def test_invalid_geometry_fails_before_classification(self, tmp_path):
        # patch larger than the frame: startup error, exit 2
        proc = run_cli([
            "certify", "--dataset", str(GOLDEN / "dataset"), "--patch", "9",
            "--masks", "3", "--ablation", "1",
            "--classifier-h", "synthetic:modsum", "--classifier-f", "synthetic:modsum",
            "--labels", "3", "--out", str(tmp_path / "x.json"),
        ])
        assert proc.returncode == 2
        assert "error" in proc.stderr

    def test_synthetic_requires_labels(self, tmp_path):
        proc = run_cli([
            "certify", "--dataset", str(GOLDEN / "dataset"), "--patch", "2",
            "--masks", "3", "--ablation", "1",
            "--classifier-h", "synthetic:modsum", "--classifier-f", "synthetic:modsum",
            "--out", str(tmp_path / "x.json"),
        ])
        assert proc.returncode == 2

    def test_report_pretty_print(self):
        proc = run_cli(["report", str(GOLDEN / "certify_cc.json")])
        assert proc.returncode == 0
        assert "acc_cert_u: 0.500000" in proc.stdout
        assert "violations: 0" in proc.stdout

    def test_bad_workers_env(self, tmp_path):
        proc = run_cli(certify_args(GOLDEN / "dataset", tmp_path / "x.json"),
                       {"PATCHCERT_WORKERS": "zero"})
        assert proc.returncode == 2


class TestRunApis:
    def test_run_certify_aggregates(self):
        cfg = RunConfig(
            dataset=str(GOLDEN / "dataset"), patch=2, masks=3, ablation=1,
            classifier_h=f"table:{GOLDEN / 'model_const.json'}",
            classifier_f=f"table:{GOLDEN / 'model_const.json'}",
            defender="cc", out=None,
        )
        metrics, payload = run_certify(cfg)
        c = metrics.counts
        assert c["cert_u"] <= c["cert_d"] <= c["clean"] <= c["total"]
        assert c["cert_u"] <= c["cert_r"]
        assert len(payload["records"]) == 8

    def test_run_oracle_differential(self):
        cfg = RunConfig(
            dataset=str(GOLDEN / "dataset"), patch=2, masks=3, ablation=1,
            classifier_h=f"table:{GOLDEN / 'model_const.json'}",
            classifier_f=f"table:{GOLDEN / 'model_const.json'}",
            defender="cc", differential=True, budget=3000,
        )
        status, payload = run_oracle(cfg)
        assert status == 0
        assert payload["differential"]["checked"] == 8 * 2026
        assert payload["differential"]["disagreements"] == []


def test_report_missing_file_clean_exit():
    proc = run_cli(["report", "/nonexistent/report.json"])
    assert proc.returncode == 2
    assert "cannot read report" in proc.stderr
