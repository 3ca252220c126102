"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  The desk criteria run the frozen standard experiment
config once (plus one rerun for the determinism check)."""

import json
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from cieaudit.desk import QuantSpec, TrainConfig, generate_dataset, quantize, train_model
from cieaudit.divergence import audit_set_size, jaccard_distance, taxicab_distance
from cieaudit.experiment import ExperimentConfig, run_experiment
from cieaudit.metrics import normalized_difference


def check(name, condition, detail=""):
    status = "PASS" if condition else "FAIL"
    print(f"{status} {name}" + (f"  [{detail}]" if detail else ""))
    assert condition, f"{name}: {detail}"


def random_histogram_pairs(count=10_000, max_n=50, max_classes=10, seed=12345):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        c = int(rng.integers(2, max_classes + 1))
        n = int(rng.integers(1, max_n + 1))
        w1 = rng.dirichlet(np.ones(c))
        w2 = rng.dirichlet(np.ones(c))
        yield n, rng.multinomial(n, w1), rng.multinomial(n, w2)


class TestDistanceCriteria:
    def test_criterion_1_jaccard_taxicab_equivalence(self):
        start = time.monotonic()
        pairs = [(n, taxicab_distance(b, v), jaccard_distance(b, v))
                 for n, b, v in random_histogram_pairs()]
        # compare consecutive pairs with equal N: strict orderings must agree
        by_n = {}
        violations = 0
        compared = 0
        for n, dt, dj in pairs:
            if n in by_n:
                pt, pj = by_n[n]
                compared += 1
                if (dj > pj) != (dt > pt) or (dj < pj) != (dt < pt):
                    violations += 1
            by_n[n] = (dt, dj)
        elapsed = time.monotonic() - start
        check("criterion 1: jaccard/taxicab ordering equivalence",
              violations == 0 and compared >= 5000 and elapsed < 5.0,
              f"{compared} comparisons, {violations} violations, {elapsed:.2f}s")

    def test_criterion_2_max_sum_identity(self):
        bad = 0
        for n, b, v in random_histogram_pairs():
            dt = taxicab_distance(b, v)
            if int(np.maximum(b, v).sum()) != n + dt // 2 or dt % 2 != 0 or not 0 <= dt <= 2 * n:
                bad += 1
        check("criterion 2: sum(max) = N + d_T/2, d_T even in [0,2N]",
              bad == 0, f"{bad} failures over 10000 pairs")

    def test_criterion_3_golden_arithmetic_fixtures(self):
        nd = normalized_difference(0.93, 1.39)
        ok_nd = abs(nd - 49.5) <= 0.5
        ok_count = audit_set_size(1000, 90) == 100
        check("criterion 3: golden arithmetic fixtures",
              ok_nd and ok_count,
              f"normalized_diff(0.93,1.39)={nd:.2f}, count@90={audit_set_size(1000, 90)}")


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    cfg = ExperimentConfig()  # the standard desk config
    start = time.monotonic()
    summary = run_experiment(cfg, out)
    elapsed = time.monotonic() - start
    print(f"\nstandard desk experiment: {elapsed:.0f}s")
    assert elapsed < 600, "desk experiment exceeded the 10 minute budget"
    return cfg, out, summary


def load_report(out, variant):
    return json.loads((out / "reports" / f"{variant}_report.json").read_text())


class TestDeskCriteria:
    def test_criterion_4_cie_hardness(self, desk_run):
        _, out, _ = desk_run
        rep = load_report(out, "pruned_0.9")
        variant_acc = rep["accuracy"]["pruned_0.9"]
        baseline_acc = rep["accuracy"]["baseline"]
        gap = variant_acc["all"]["all_acc"] - variant_acc["all"]["cie_acc"]
        overall_delta = abs(variant_acc["all"]["all_acc"] - baseline_acc["all"]["all_acc"])
        check("criterion 4: modal-CIE hardness at sparsity 0.9",
              gap >= 20.0 and overall_delta <= 3.0,
              f"cie gap {gap:.1f}pt, overall delta {overall_delta:.2f}pt")

    def test_criterion_5_bucket_monotonicity(self, desk_run):
        _, out, _ = desk_run
        rep = load_report(out, "pruned_0.9")
        ok = True
        details = []
        for pop in ("baseline", "pruned_0.9"):
            acc = rep["accuracy"][pop]
            a90, a95, a99 = (acc[f"p{p}"]["cie_acc"] for p in (90, 95, 99))
            a_all = acc["all"]["all_acc"]
            ok &= a99 <= a95 <= a90 <= a_all
            details.append(f"{pop}: {a99:.1f}<={a95:.1f}<={a90:.1f}<={a_all:.1f}")
        check("criterion 5: accuracy monotone in percentile", ok, "; ".join(details))

    def test_criterion_6_cie_growth_with_sparsity(self, desk_run):
        cfg, out, _ = desk_run
        counts = [load_report(out, f"pruned_{t:g}")["divergence"]["modal_cie_count"]
                  for t in cfg.sparsity_levels]
        rho = spearmanr(cfg.sparsity_levels, counts).statistic
        check("criterion 6: modal CIE count grows with sparsity",
              rho > 0.7, f"counts {counts}, spearman {rho:.3f}")

    def test_criterion_7_minority_overindexing(self, desk_run):
        _, out, _ = desk_run
        rep = load_report(out, "pruned_0.9")
        row = next(r for r in rep["overindex"]["modal"] if r["attribute"] == "minority")
        check("criterion 7: minority over-indexes in modal CIE set",
              row["representation_ratio"] is not None and row["representation_ratio"] >= 1.5,
              f"train {row['train_fraction']:.3f} -> cie {row['cie_fraction']:.3f} "
              f"ratio {row['representation_ratio']:.2f}")

    def test_criterion_8_quantization_parity(self, desk_run):
        cfg, out, _ = desk_run
        counts = [load_report(out, f"quantized_{k}")["divergence"]["modal_cie_count"]
                  for k in cfg.quant_kinds]
        parity = (min(counts) > 0 and max(counts) / min(counts) <= 2.0) or counts[0] == counts[1]

        # weight roundtrip bound on a standard-config model
        dataset = generate_dataset(cfg.dataset)
        model = train_model(dataset, TrainConfig(hidden_units=8, steps=200, batch_size=64, seed=0))
        q = quantize(model, QuantSpec(kind="hybrid_int8"))
        bound_ok = all(
            np.abs(w - dq).max() <= np.abs(w).max() / 127 + 1e-12
            for w, dq in [(model.w1, q.w1), (model.w2, q.w2)]
        )
        check("criterion 8: int8 modes comparable, roundtrip bounded",
              parity and bound_ok, f"modal counts {counts}, roundtrip bound ok={bound_ok}")

    def test_criterion_9_determinism(self, desk_run, tmp_path):
        cfg, out, summary = desk_run
        out2 = tmp_path / "rerun"
        run_experiment(cfg, out2)
        mismatched = []
        for group in ("score_files", "reports"):
            for path in summary[group]:
                rel = Path(path).relative_to(out)
                if (out / rel).read_bytes() != (out2 / rel).read_bytes():
                    mismatched.append(str(rel))
        for variant in ("pruned_0.9",):
            rel = Path("reports") / f"{variant}_report.txt"
            if (out / rel).read_bytes() != (out2 / rel).read_bytes():
                mismatched.append(str(rel))
        check("criterion 9: rerun is byte-identical",
              not mismatched, f"mismatched: {mismatched or 'none'}")
