"""Divergence scoring between a baseline and a compressed model population.

Three measures per example:

* taxicab: L1 distance between the two populations' label-count vectors;
* jaccard: weighted Jaccard distance over the label multisets
  (rank-equivalent to taxicab for equal population sizes);
* modal flip: whether the most frequent label differs between populations.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .ledger import Ledger, LedgerError, PairingReport, validate_pairing

log = logging.getLogger(__name__)

TIE_RULES = ("lowest", "highest")


class DivergenceError(LedgerError):
    pass


def _check_pair(b: np.ndarray, v: np.ndarray, strict_totals: bool = True) -> None:
    if len(b) != len(v):
        raise DivergenceError(f"mismatched class counts: {len(b)} vs {len(v)}")
    if strict_totals and int(b.sum()) != int(v.sum()):
        raise DivergenceError(
            f"mismatched histogram totals: {int(b.sum())} vs {int(v.sum())} "
            "(apply frequency-mode rescaling upstream)"
        )


def taxicab_distance(b, v, strict_totals: bool = True) -> int:
    """Sum of per-class absolute count differences.  Even in [0, 2N]."""
    b = np.asarray(b, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    _check_pair(b, v, strict_totals)
    return int(np.abs(b - v).sum())


def jaccard_distance(b, v, strict_totals: bool = True) -> float:
    """1 - sum(min)/sum(max) over per-class counts, in [0, 1]."""
    b = np.asarray(b, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    _check_pair(b, v, strict_totals)
    total_max = int(np.maximum(b, v).sum())
    if total_max == 0:
        return 0.0
    return 1.0 - int(np.minimum(b, v).sum()) / total_max


def modal_label(counts, tie_rule: str = "lowest") -> tuple[int, bool]:
    """Most frequent class and whether the argmax was tied."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.sum() < 1:
        raise DivergenceError("modal label of an empty histogram")
    if tie_rule not in TIE_RULES:
        raise DivergenceError(f"unknown tie rule {tie_rule!r}; known: {TIE_RULES}")
    top = int(counts.max())
    winners = np.flatnonzero(counts == top)
    label = int(winners[0] if tie_rule == "lowest" else winners[-1])
    return label, len(winners) > 1


def modal_cie(b, v, tie_rule: str = "lowest") -> bool:
    """True iff the modal label flips between the two populations."""
    b = np.asarray(b, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    _check_pair(b, v)
    return modal_label(b, tie_rule)[0] != modal_label(v, tie_rule)[0]


@dataclass(frozen=True)
class CieScore:
    example_id: str
    taxicab: int
    jaccard: float
    modal_baseline: int
    modal_variant: int
    modal_cie: bool
    tie_flag: bool
    rank: int | None = None  # 1-based, highest divergence first
    percentile: float | None = None


def score_pair(
    ledger: Ledger,
    baseline_id: str,
    variant_id: str,
    tie_rule: str = "lowest",
    strict: bool = True,
) -> tuple[list[CieScore], PairingReport]:
    """Score every example shared by the two populations (unranked)."""
    pairing = validate_pairing(ledger, baseline_id, variant_id, strict=strict)
    scores = []
    for eid in pairing.shared_examples:
        b = ledger.histogram(baseline_id, eid) * pairing.scale_baseline
        v = ledger.histogram(variant_id, eid) * pairing.scale_variant
        d_t = taxicab_distance(b, v)
        d_j = jaccard_distance(b, v)
        # cheap runtime cross-check of the max-sum identity
        identity = int(np.maximum(b, v).sum())
        if identity != pairing.common_total + d_t // 2:
            raise DivergenceError(
                f"internal inconsistency on example {eid!r}: "
                f"sum(max)={identity} != N + d_T/2 = {pairing.common_total + d_t // 2}"
            )
        mb, tie_b = modal_label(b, tie_rule)
        mv, tie_v = modal_label(v, tie_rule)
        scores.append(
            CieScore(
                example_id=eid,
                taxicab=d_t,
                jaccard=d_j,
                modal_baseline=mb,
                modal_variant=mv,
                modal_cie=mb != mv,
                tie_flag=tie_b or tie_v,
            )
        )
    return scores, pairing


def rank_scores(scores: Sequence[CieScore], rng_seed: int = 0) -> list[CieScore]:
    """Order by descending taxicab, breaking ties with a seeded shuffle."""
    if not scores:
        raise DivergenceError("empty score list")
    rng = np.random.default_rng(rng_seed)
    tiebreak = rng.permutation(len(scores))
    order = sorted(range(len(scores)), key=lambda i: (-scores[i].taxicab, tiebreak[i]))
    m = len(scores)
    ranked = []
    for rank0, i in enumerate(order):
        ranked.append(replace(scores[i], rank=rank0 + 1, percentile=100.0 * (m - rank0 - 1) / m))
    return ranked


def audit_set_size(m: int, percentile: float) -> int:
    """Number of examples surfaced at a percentile threshold: ceil((100-p)% of m)."""
    if not 0 <= percentile < 100:
        raise DivergenceError(f"percentile must be in [0, 100), got {percentile}")
    return math.ceil((100.0 - percentile) / 100.0 * m)


def rank_and_threshold(scores: Sequence[CieScore], percentile: float, rng_seed: int = 0) -> list[CieScore]:
    """Ranked audit set: the top (100-p)% of examples by taxicab distance.

    Reproducible for a fixed seed.  If every score is zero the dataset has no
    divergence to audit; a warning is logged and (for p > 0) the set is empty.
    """
    ranked = rank_scores(scores, rng_seed)
    if all(s.taxicab == 0 for s in ranked):
        log.warning("all %d examples have zero divergence; nothing to audit", len(ranked))
        if percentile > 0:
            # validate the percentile before discarding it
            audit_set_size(len(ranked), percentile)
            return []
    return ranked[: audit_set_size(len(ranked), percentile)]


SCORE_COLUMNS = [
    "example_id", "taxicab", "jaccard", "modal_baseline", "modal_variant",
    "modal_cie", "rank", "percentile", "tie_flag",
]


def write_scores(path: str | Path, scores: Sequence[CieScore], manifest_hash: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if manifest_hash:
            fh.write(f"# manifest_hash={manifest_hash}\n")
        w = csv.writer(fh)
        w.writerow(SCORE_COLUMNS)
        for s in scores:
            w.writerow([
                s.example_id, s.taxicab, repr(s.jaccard), s.modal_baseline, s.modal_variant,
                int(s.modal_cie), s.rank if s.rank is not None else "",
                repr(s.percentile) if s.percentile is not None else "",
                int(s.tie_flag),
            ])


def read_scores(path: str | Path) -> list[CieScore]:
    scores = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for row in reader:
            scores.append(
                CieScore(
                    example_id=row["example_id"],
                    taxicab=int(row["taxicab"]),
                    jaccard=float(row["jaccard"]),
                    modal_baseline=int(row["modal_baseline"]),
                    modal_variant=int(row["modal_variant"]),
                    modal_cie=bool(int(row["modal_cie"])),
                    tie_flag=bool(int(row["tie_flag"])),
                    rank=int(row["rank"]) if row["rank"] else None,
                    percentile=float(row["percentile"]) if row["percentile"] else None,
                )
            )
    return scores
