"""End-to-end desk experiment: generate data, train populations under every
compression setting, score divergence and write reports.

The standard configuration (20 seeds, six sparsity levels, both int8 modes)
reproduces the qualitative compression-bias phenomena in a few minutes on a
laptop.  Reruns with an identical config are byte-identical.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from . import figures
from .desk.population import run_population, train_members
from .desk.synth import AttributeSpec, SyntheticDatasetSpec, generate_dataset
from .desk.train import PruneSchedule, TrainConfig
from .divergence import rank_scores, score_pair, write_scores
from .ledger import (
    Compression,
    Ledger,
    LedgerHeader,
    PopulationSpec,
    ingest_predictions,
    write_prediction_log,
)
from .report import AuditRunManifest, build_report, file_hash, write_report

log = logging.getLogger(__name__)

SPARSITY_LEVELS = (0.3, 0.5, 0.7, 0.9, 0.95, 0.99)
QUANT_KINDS = ("hybrid_int8", "fixedpoint_int8")


@dataclass
class ExperimentConfig:
    dataset: SyntheticDatasetSpec = field(default_factory=lambda: standard_dataset_spec())
    train: TrainConfig = field(default_factory=lambda: TrainConfig(hidden_units=32))
    prune: PruneSchedule = field(default_factory=lambda: PruneSchedule(target_sparsity=0.9))
    sparsity_levels: tuple[float, ...] = SPARSITY_LEVELS
    quant_kinds: tuple[str, ...] = QUANT_KINDS
    seeds: tuple[int, ...] = tuple(range(20))
    percentiles: tuple[float, ...] = (90.0, 95.0, 99.0)
    rng_seed: int = 0
    positive_class: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        cfg = cls()
        if "dataset" in d:
            ds = dict(d["dataset"])
            attrs = ds.pop("attributes", None)
            base = asdict(standard_dataset_spec())
            base.pop("attributes")
            base.update(ds)
            for key in ("default_signal_features",):
                if key in base:
                    base[key] = tuple(base[key])
            if attrs is not None:
                base["attributes"] = tuple(
                    AttributeSpec(
                        name=a["name"],
                        frequency=a["frequency"],
                        signal_features=tuple(a.get("signal_features", ())),
                        signal_strength=a.get("signal_strength", 0.0),
                        shift_features=tuple(a.get("shift_features", ())),
                        shift=a.get("shift", 0.0),
                    )
                    for a in attrs
                )
            else:
                base["attributes"] = standard_dataset_spec().attributes
            cfg.dataset = SyntheticDatasetSpec(**base)
        if "train" in d:
            cfg.train = TrainConfig(**{**asdict(cfg.train), **d["train"]})
        if "prune" in d:
            cfg.prune = PruneSchedule(**{**asdict(cfg.prune), **d["prune"]})
        for key in ("sparsity_levels", "quant_kinds", "seeds", "percentiles"):
            if key in d:
                cfg.__setattr__(key, tuple(d[key]))
        for key in ("rng_seed", "positive_class"):
            if key in d:
                cfg.__setattr__(key, d[key])
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()) or {})


def standard_dataset_spec() -> SyntheticDatasetSpec:
    """The reference desk regime: a rare attribute with its own weaker label
    signal, a decorative common attribute, and an ambiguous slab."""
    return SyntheticDatasetSpec(
        num_examples=20000,
        num_features=20,
        test_fraction=0.4,
        attributes=(
            AttributeSpec("minority", 0.08, signal_features=(5, 6, 7, 8, 9), signal_strength=0.7),
            AttributeSpec("common", 0.30, shift_features=(10, 11), shift=0.5),
        ),
        margin_spread=0.5,
        ambiguous_fraction=0.1,
        ambiguous_margin=0.05,
        seed=11,
    )


def population_plan(cfg: ExperimentConfig) -> list[PopulationSpec]:
    n = len(cfg.seeds)
    plan = [PopulationSpec("baseline", Compression.baseline(), n)]
    for t in cfg.sparsity_levels:
        plan.append(PopulationSpec(f"pruned_{t:g}", Compression.pruned(t), n))
    for kind in cfg.quant_kinds:
        plan.append(PopulationSpec(f"quantized_{kind}", Compression.quantized(kind), n))
    return plan


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path) -> dict:
    """Generate -> train -> score -> report.  Returns a summary dict."""
    out = Path(out_dir)
    for sub in ("ledger", "scores", "reports", "figures", "dataset"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    log.info("generating dataset (%d examples)", cfg.dataset.num_examples)
    dataset = generate_dataset(cfg.dataset)
    dataset.test_attributes.save(out / "dataset" / "attributes.csv")
    (out / "dataset" / "train_fractions.json").write_text(
        json.dumps(dataset.train_fractions, indent=2, sort_keys=True) + "\n"
    )

    plan = population_plan(cfg)
    header = LedgerHeader(num_classes=2, populations=tuple(plan))
    header.save(out / "ledger" / "header.json")

    seeds = list(cfg.seeds)
    log.info("training baseline population (%d seeds)", len(seeds))
    baseline_members = train_members(dataset, cfg.train, seeds)
    records = []
    for spec in plan:
        comp = spec.compression
        if comp.kind == "baseline":
            members = baseline_members
        elif comp.kind == "quantized":
            members = baseline_members  # post-training: reuse the float models
        else:
            log.info("training population %s", spec.population_id)
            members = train_members(
                dataset, cfg.train, seeds,
                PruneSchedule(**{**asdict(cfg.prune), "target_sparsity": comp.target_sparsity}),
            )
        records += run_population(dataset, cfg.train, spec, seeds,
                                  trained_members=members)
    log_path = out / "ledger" / "predictions.csv"
    write_prediction_log(log_path, records)
    ledger = ingest_predictions(records, header)

    summary = {"out_dir": str(out), "populations": [], "score_files": [], "reports": []}
    for spec in plan:
        summary["populations"].append(spec.population_id)
        if spec.is_baseline:
            continue
        variant = spec.population_id
        manifest = AuditRunManifest(
            inputs={"predictions": str(log_path)},
            baseline_id="baseline",
            variant_id=variant,
            percentiles=list(cfg.percentiles),
            rng_seed=cfg.rng_seed,
            out_dir=str(out),
        )
        mhash = manifest.hash()
        manifest.save(out / "reports" / f"{variant}_manifest.json")

        scores, _ = score_pair(ledger, "baseline", variant)
        ranked = rank_scores(scores, rng_seed=cfg.rng_seed)
        score_path = out / "scores" / f"{variant}.csv"
        write_scores(score_path, ranked, manifest_hash=mhash)
        summary["score_files"].append(str(score_path))

        report = build_report(
            ledger, ranked, "baseline", variant,
            percentiles=cfg.percentiles,
            attributes=dataset.test_attributes,
            train_fractions=dataset.train_fractions,
            rng_seed=cfg.rng_seed,
            positive_class=cfg.positive_class,
        )
        report["score_file_hash"] = file_hash(score_path)
        paths = write_report(report, out / "reports", f"{variant}_report", manifest_hash=mhash)
        figures.render_all(report, out / "figures" / variant)
        summary["reports"].append(str(paths["json"]))
        log.info("scored %s: %d modal CIEs", variant, report["divergence"]["modal_cie_count"])
    return summary


def load_experiment_ledger(out_dir: str | Path) -> Ledger:
    out = Path(out_dir)
    return Ledger.from_files(out / "ledger" / "predictions.csv", out / "ledger" / "header.json")
