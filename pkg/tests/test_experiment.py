import json
from pathlib import Path

import pytest
import yaml

from cieaudit.divergence import read_scores
from cieaudit.experiment import ExperimentConfig, load_experiment_ledger, run_experiment

TINY_CONFIG = {
    "dataset": {
        "num_examples": 1500,
        "test_fraction": 0.3,
        "seed": 4,
        "ambiguous_fraction": 0.1,
        "margin_spread": 0.5,
        "attributes": [
            {"name": "minority", "frequency": 0.08,
             "signal_features": [5, 6, 7, 8, 9], "signal_strength": 0.7},
            {"name": "common", "frequency": 0.3, "shift_features": [10, 11], "shift": 0.5},
        ],
    },
    "train": {"hidden_units": 16, "steps": 400, "batch_size": 64},
    "prune": {"prune_interval": 50, "prune_start_step": 100, "prune_end_step": 350},
    "sparsity_levels": [0.5, 0.9],
    "quant_kinds": ["hybrid_int8"],
    "seeds": [0, 1, 2],
    "percentiles": [90.0],
}


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    cfg = ExperimentConfig.from_dict(TINY_CONFIG)
    summary = run_experiment(cfg, out)
    return cfg, out, summary


class TestConfig:
    def test_yaml_roundtrip(self, tmp_path):
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(TINY_CONFIG))
        cfg = ExperimentConfig.load(path)
        assert cfg.sparsity_levels == (0.5, 0.9)
        assert cfg.dataset.num_examples == 1500
        assert cfg.dataset.attributes[0].name == "minority"
        assert cfg.train.hidden_units == 16

    def test_defaults_are_standard(self):
        cfg = ExperimentConfig()
        assert cfg.sparsity_levels == (0.3, 0.5, 0.7, 0.9, 0.95, 0.99)
        assert len(cfg.seeds) == 20


class TestPipeline:
    def test_population_arithmetic(self, tiny_run):
        _, out, summary = tiny_run
        # baseline + 2 pruned + 1 quantized
        assert len(summary["populations"]) == 4
        assert len(summary["score_files"]) == 3
        assert len(summary["reports"]) == 3

    def test_ledger_reloads(self, tiny_run):
        _, out, _ = tiny_run
        ledger = load_experiment_ledger(out)
        assert set(ledger.population_ids) == {
            "baseline", "pruned_0.5", "pruned_0.9", "quantized_hybrid_int8"
        }
        for pid in ledger.population_ids:
            assert len(ledger.models(pid)) == 3

    def test_score_files_parse(self, tiny_run):
        _, out, summary = tiny_run
        for path in summary["score_files"]:
            scores = read_scores(path)
            assert len(scores) == 450  # 1500 * 0.3 test examples
            assert scores[0].rank == 1

    def test_artifacts_embed_manifest_hash(self, tiny_run):
        _, out, _ = tiny_run
        for variant in ("pruned_0.9", "quantized_hybrid_int8"):
            manifest = json.loads((out / "reports" / f"{variant}_manifest.json").read_text())
            mhash = manifest["manifest_hash"]
            assert (out / "scores" / f"{variant}.csv").read_text().startswith(f"# manifest_hash={mhash}")
            rep = json.loads((out / "reports" / f"{variant}_report.json").read_text())
            assert rep["manifest_hash"] == mhash

    def test_figures_rendered(self, tiny_run):
        _, out, _ = tiny_run
        figdir = out / "figures" / "pruned_0.9"
        assert (figdir / "accuracy_vs_percentile.png").exists()
        assert (figdir / "accuracy_vs_percentile.csv").exists()
        assert any(figdir.glob("overindex_*.png"))

    def test_rerun_byte_identical(self, tiny_run, tmp_path):
        cfg, out, summary = tiny_run
        out2 = tmp_path / "again"
        run_experiment(cfg, out2)
        for rel in [Path(p).relative_to(out) for p in summary["score_files"]]:
            assert (out / rel).read_bytes() == (out2 / rel).read_bytes()
        for rel in [Path(p).relative_to(out) for p in summary["reports"]]:
            assert (out / rel).read_bytes() == (out2 / rel).read_bytes()
        assert (out / "ledger" / "predictions.csv").read_bytes() == \
            (out2 / "ledger" / "predictions.csv").read_bytes()
