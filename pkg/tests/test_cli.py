"""CLI contract tests: command wiring, exit codes, artifact schemas,
idempotence, and config precedence. Runs use the tiny synthetic dataset with
small dimensions so the whole module stays fast.
"""

import hashlib
import json

import pytest
import torch

import dynlink.cli as cli
from dynlink.config import SEED_ENV, resolve_train_config
from dynlink.errors import NumericError
from dynlink.model import load_checkpoint
from dynlink.training import TrainHistory, build_model

FAST = [
    "--epochs", "8",
    "--d-enc", "12",
    "--d-state", "12",
    "--nce-negatives", "3",
]


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def ingest(workdir):
    assert cli.main(["ingest", "--dataset", "synthetic", "--out", "runs"]) == 0
    return workdir / "runs"


class TestIngest:
    def test_prints_table_stats_and_writes_container(self, workdir, capsys):
        out = ingest(workdir)
        captured = capsys.readouterr().out
        assert "nodes=40 edges=744 steps=8" in captured
        assert (out / "data" / "synthetic.npz").exists()
        assert (out / "data" / "synthetic.manifest.json").exists()

    def test_reingest_identical_artifact_hash(self, workdir, capsys):
        out = ingest(workdir)
        container = out / "data" / "synthetic.npz"
        first = sha(container)
        assert cli.main(["ingest", "--dataset", "synthetic", "--out", "runs"]) == 0
        assert sha(container) == first

    def test_missing_source_exits_2(self, workdir):
        assert cli.main(["ingest", "--dataset", "enron", "--out", "runs"]) == 2

    def test_explicit_path_ingestion(self, workdir, tmp_path):
        events = tmp_path / "mini.events"
        events.write_text("0 1 0.0\n1 2 0.5\n0 2 1.0\n", encoding="utf-8")
        code = cli.main(
            ["ingest", "--dataset", "mini", "--path", str(events), "--steps", "2", "--out", "runs"]
        )
        assert code == 0
        assert (workdir / "runs" / "data" / "mini.npz").exists()


def train(workdir, *extra):
    args = ["train", "--dataset", "synthetic", "--out", "runs", *FAST, *extra]
    assert cli.main(args) == 0
    run_dirs = sorted((workdir / "runs").glob("train-synthetic-*"))
    assert run_dirs
    return run_dirs[-1]


class TestTrain:
    def test_writes_checkpoints_history_manifest(self, workdir):
        ingest(workdir)
        run_dir = train(workdir, "--seeds", "0,1")
        assert (run_dir / "seed0.ckpt").exists()
        assert (run_dir / "seed1.ckpt").exists()
        assert (run_dir / "history-seed0.csv").exists()
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert manifest["seeds"] == [0, 1]
        assert manifest["input_hashes"] and manifest["output_hashes"]

    def test_same_seed_runs_byte_identical(self, workdir):
        ingest(workdir)
        run_dir = train(workdir, "--seed", "3")
        hist = run_dir / "history-seed3.csv"
        ckpt = run_dir / "seed3.ckpt"
        h1, c1 = sha(hist), sha(ckpt)
        run_dir2 = train(workdir, "--seed", "3")
        assert run_dir2 == run_dir  # config-hash keyed directory
        assert sha(hist) == h1 and sha(ckpt) == c1

    def test_zero_epochs_checkpoints_init_parameters(self, workdir):
        ingest(workdir)
        run_dir = train(workdir, "--epochs", "0", "--seed", "5")
        model, meta = load_checkpoint(run_dir / "seed5.ckpt")
        assert meta["epoch"] == 0
        cfg = resolve_train_config(
            overrides=dict(
                epochs=0, seed=5, d_enc=12, d_state=12, nce_negatives=3, alpha=1.0, beta=1.0
            )
        )
        reference = build_model(cfg, 40).double()
        for a, b in zip(reference.parameters(), model.parameters()):
            assert torch.equal(a, b)

    def test_not_ingested_exits_2(self, workdir):
        assert cli.main(["train", "--dataset", "synthetic", "--out", "runs", *FAST]) == 2

    def test_numeric_failure_exits_3(self, workdir, monkeypatch):
        ingest(workdir)

        def explode(*args, **kwargs):
            raise NumericError("non-finite loss at epoch 1", {"epoch": 1})

        monkeypatch.setattr(cli, "train_model", explode)
        assert cli.main(["train", "--dataset", "synthetic", "--out", "runs", *FAST]) == 3


class TestEvaluate:
    def test_report_files_and_std_zero_for_single_seed(self, workdir, capsys):
        ingest(workdir)
        run_dir = train(workdir, "--seed", "0")
        code = cli.main(
            ["evaluate", "--dataset", "synthetic", "--out", "runs", "--checkpoints", str(run_dir)]
        )
        assert code == 0
        eval_dirs = sorted((workdir / "runs").glob("eval-synthetic-*"))
        summary = json.loads((eval_dirs[-1] / "summary.json").read_text())
        for regime, metrics in summary.items():
            for metric, stats in metrics.items():
                if stats is not None:
                    assert stats["std"] == 0.0
        assert (eval_dirs[-1] / "metrics.jsonl").exists()
        assert "Rand-Pos/Rand-Neg" in capsys.readouterr().out

    def test_regeneration_byte_identical(self, workdir):
        ingest(workdir)
        run_dir = train(workdir, "--seed", "0")
        args = ["evaluate", "--dataset", "synthetic", "--out", "runs", "--checkpoints", str(run_dir)]
        assert cli.main(args) == 0
        eval_dir = sorted((workdir / "runs").glob("eval-synthetic-*"))[-1]
        hashes = {p.name: sha(p) for p in eval_dir.iterdir()}
        assert cli.main(args) == 0
        assert {p.name: sha(p) for p in eval_dir.iterdir()} == hashes

    def test_single_regime_flag(self, workdir):
        ingest(workdir)
        run_dir = train(workdir, "--seed", "0")
        code = cli.main(
            [
                "evaluate", "--dataset", "synthetic", "--out", "runs",
                "--checkpoints", str(run_dir), "--regime", "histpos-randneg",
            ]
        )
        assert code == 0
        eval_dir = sorted((workdir / "runs").glob("eval-synthetic-*"))[-1]
        records = [json.loads(line) for line in (eval_dir / "metrics.jsonl").read_text().splitlines()]
        assert {rec["regime"] for rec in records} == {"histpos-randneg"}

    def test_missing_checkpoints_exit_2(self, workdir):
        ingest(workdir)
        code = cli.main(
            ["evaluate", "--dataset", "synthetic", "--out", "runs", "--checkpoints", "nowhere"]
        )
        assert code == 2


class TestAblate:
    def test_four_stages_in_reference_order(self, workdir, capsys):
        ingest(workdir)
        code = cli.main(
            ["ablate", "--dataset", "synthetic", "--out", "runs", *FAST, "--seed", "0"]
        )
        assert code == 0
        ablate_dir = sorted((workdir / "runs").glob("ablate-synthetic-*"))[-1]
        rows = json.loads((ablate_dir / "ablation.json").read_text())
        assert [row["loss"] for row in rows] == [
            "prediction",
            "prediction+reconstruction",
            "prediction+reconstruction+local_nce",
            "full",
        ]
        for row in rows:
            assert 0.0 <= row["auc_mean"] <= 1.0


class TestAnalyze:
    def test_reports_and_density_length(self, workdir):
        ingest(workdir)
        code = cli.main(
            ["analyze", "--dataset", "synthetic", "--out", "runs", "--samples", "15"]
        )
        assert code == 0
        analysis_dir = workdir / "runs" / "analysis-synthetic"
        null = json.loads((analysis_dir / "null_models.json").read_text())
        assert null["samples"] == 15
        assert len(null["re_values"]) == 15
        density = json.loads((analysis_dir / "density.json").read_text())
        assert len(density) == 8

    def test_default_sample_count_is_100(self):
        parser = cli.build_parser()
        args = parser.parse_args(["analyze", "--dataset", "synthetic"])
        assert args.samples == 100


class TestConfigPrecedence:
    def test_cli_beats_env_beats_file(self, workdir, monkeypatch):
        cfg = workdir / "run.yaml"
        cfg.write_text("epochs: 7\nseed: 1\nalpha: 2.5\n", encoding="utf-8")
        monkeypatch.setenv(SEED_ENV, "5")
        resolved = resolve_train_config(cfg, overrides={"epochs": 3})
        assert resolved.epochs == 3  # CLI wins
        assert resolved.seed == 5  # env beats file
        assert resolved.alpha == 2.5  # file beats default

    def test_unknown_config_key_rejected(self, workdir):
        cfg = workdir / "bad.yaml"
        cfg.write_text("learning_rate: 0.1\n", encoding="utf-8")
        with pytest.raises(ValueError):
            resolve_train_config(cfg)

    def test_train_honors_config_file(self, workdir):
        ingest(workdir)
        cfg = workdir / "run.yaml"
        cfg.write_text(
            "epochs: 2\nd_enc: 12\nd_state: 12\nnce_negatives: 3\n", encoding="utf-8"
        )
        assert cli.main(
            ["train", "--dataset", "synthetic", "--out", "runs", "--config", str(cfg)]
        ) == 0
        run_dir = sorted((workdir / "runs").glob("train-synthetic-*"))[-1]
        history = TrainHistory.from_csv(run_dir / "history-seed0.csv")
        assert len(history) == 2
