import pytest

from cieaudit.ledger import (
    Compression,
    LedgerHeader,
    PopulationSpec,
    PredictionRecord,
    ingest_predictions,
)


def make_header(num_classes=2, pops=None):
    if pops is None:
        pops = [
            PopulationSpec("popA", Compression.baseline(), 3),
            PopulationSpec("popB", Compression.pruned(0.9), 3),
        ]
    return LedgerHeader(num_classes=num_classes, populations=tuple(pops))


def grid_records(populations=("popA", "popB"), models=("m1", "m2", "m3"),
                 examples=("ex1", "ex2", "ex3", "ex4"), label_fn=None, truth_fn=None):
    """Complete (population, model, example) grid of records."""
    records = []
    for p in populations:
        for m in models:
            for e in examples:
                label = label_fn(p, m, e) if label_fn else 0
                truth = truth_fn(e) if truth_fn else None
                records.append(PredictionRecord(e, p, m, label, truth))
    return records


@pytest.fixture
def small_ledger():
    """2 populations x 3 models x 4 examples, labels diverge on ex1/ex2."""

    def label(p, m, e):
        if p == "popA":
            return 1 if (e, m) == ("ex1", "m3") else 0
        # popB flips ex1 entirely and ex2 partially
        if e == "ex1":
            return 1
        if e == "ex2" and m in ("m1", "m2"):
            return 1
        return 0

    truths = {"ex1": 0, "ex2": 1, "ex3": 0, "ex4": 1}
    return ingest_predictions(
        grid_records(label_fn=label, truth_fn=truths.get), make_header()
    )
