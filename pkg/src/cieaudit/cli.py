"""Command line entry point: score, report, experiment, serve."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import figures
from .divergence import rank_scores, read_scores, score_pair, write_scores
from .experiment import ExperimentConfig, run_experiment
from .ledger import AttributeTable, Ledger, LedgerError
from .report import AuditRunManifest, build_report, file_hash, write_report

log = logging.getLogger(__name__)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose):
    """Audit how model compression redistributes prediction error."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


def _load_ledger(predictions, header, strict_populations):
    return Ledger.from_files(predictions, header, drop_incomplete=not strict_populations)


@main.command()
@click.option("--predictions", required=True, type=click.Path(exists=True), help="Prediction log CSV.")
@click.option("--header", required=True, type=click.Path(exists=True), help="Ledger header JSON.")
@click.option("--baseline", required=True, help="Baseline population id.")
@click.option("--variant", required=True, help="Compressed population id.")
@click.option("--out", required=True, type=click.Path(), help="Output score file (CSV).")
@click.option("--seed", default=0, show_default=True, help="RNG seed for tie-breaking.")
@click.option("--tie-rule", default="lowest", type=click.Choice(["lowest", "highest"]), show_default=True)
@click.option("--strict-populations/--no-strict-populations", default=True, show_default=True,
              help="Reject unequal population sizes and incomplete coverage.")
def score(predictions, header, baseline, variant, out, seed, tie_rule, strict_populations):
    """Score per-example divergence between two populations."""
    try:
        ledger = _load_ledger(predictions, header, strict_populations)
        scores, pairing = score_pair(ledger, baseline, variant,
                                     tie_rule=tie_rule, strict=strict_populations)
        ranked = rank_scores(scores, rng_seed=seed)
        manifest = AuditRunManifest(
            inputs={"predictions": str(predictions), "header": str(header)},
            baseline_id=baseline, variant_id=variant,
            percentiles=[], rng_seed=seed, out_dir=str(Path(out).parent),
        )
        write_scores(out, ranked, manifest_hash=manifest.hash())
        manifest.save(Path(out).with_suffix(".manifest.json"))
    except LedgerError as exc:
        _fail(exc)

    taxis = np.array([s.taxicab for s in ranked])
    n_modal = int(sum(s.modal_cie for s in ranked))
    if baseline == variant:
        click.echo("warning: baseline compared against itself; all scores are zero", err=True)
    if not taxis.any():
        click.echo("warning: zero divergence on every example", err=True)
    click.echo(f"scored {len(ranked)} examples ({pairing.n_baseline} vs {pairing.n_variant} models)")
    click.echo(f"modal CIEs: {n_modal}")
    click.echo(
        "taxicab: mean {:.2f}  median {:.0f}  max {}  nonzero {}".format(
            taxis.mean(), float(np.median(taxis)), int(taxis.max()), int((taxis > 0).sum())
        )
    )
    click.echo(f"wrote {out}")


@main.command()
@click.option("--scores", "score_file", required=True, type=click.Path(exists=True), help="Score file from `score`.")
@click.option("--predictions", required=True, type=click.Path(exists=True))
@click.option("--header", required=True, type=click.Path(exists=True))
@click.option("--baseline", required=True)
@click.option("--variant", required=True)
@click.option("--attributes", type=click.Path(exists=True), help="Attribute table CSV.")
@click.option("--train-fractions", type=click.Path(exists=True), help="JSON of attribute -> training fraction.")
@click.option("--intersection", multiple=True,
              help="Named conjunction, e.g. minority*common (repeatable).")
@click.option("--percentile", "percentiles", multiple=True, type=float, default=(90.0, 95.0, 99.0),
              show_default=True, help="Taxicab threshold (repeatable).")
@click.option("--positive-class", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--strict-populations/--no-strict-populations", default=True, show_default=True)
def report(score_file, predictions, header, baseline, variant, attributes, train_fractions,
           intersection, percentiles, positive_class, seed, out, strict_populations):
    """Render accuracy, subgroup and over-index tables from a score file."""
    try:
        ledger = _load_ledger(predictions, header, strict_populations)
        scores = read_scores(score_file)
        attr_table = AttributeTable.load(attributes) if attributes else None
        if attr_table:
            for expr in intersection:
                attr_table.define_intersection(expr, expr.split("*"))
        fractions = json.loads(Path(train_fractions).read_text()) if train_fractions else None
        manifest = AuditRunManifest(
            inputs={"scores": str(score_file), "predictions": str(predictions)},
            baseline_id=baseline, variant_id=variant,
            percentiles=list(percentiles), rng_seed=seed, out_dir=str(out),
        )
        rep = build_report(
            ledger, scores, baseline, variant,
            percentiles=percentiles, attributes=attr_table,
            train_fractions=fractions, rng_seed=seed, positive_class=positive_class,
        )
        rep["score_file_hash"] = file_hash(score_file)
        paths = write_report(rep, out, "report", manifest_hash=manifest.hash())
        manifest.save(Path(out) / "manifest.json")
        rendered = figures.render_all(rep, Path(out) / "figures")
    except LedgerError as exc:
        _fail(exc)
    for note in rep["notes"]:
        click.echo(f"note: {note}", err=True)
    click.echo((paths["txt"]).read_text(), nl=False)
    click.echo(f"wrote {paths['json']} and {len(rendered)} figure/data files")


@main.command()
@click.option("--config", type=click.Path(exists=True), help="Experiment config YAML (default: standard desk config).")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
def experiment(config, out):
    """Run the full desk pipeline: generate, train, score, report."""
    try:
        cfg = ExperimentConfig.load(config) if config else ExperimentConfig()
        summary = run_experiment(cfg, out)
    except LedgerError as exc:
        _fail(exc)
    click.echo(f"populations: {', '.join(summary['populations'])}")
    click.echo(f"score files: {len(summary['score_files'])}  reports: {len(summary['reports'])}")
    click.echo(f"outputs in {summary['out_dir']}")


@main.command()
@click.option("--scores", "score_file", required=True, type=click.Path(exists=True))
@click.option("--predictions", required=True, type=click.Path(exists=True))
@click.option("--header", required=True, type=click.Path(exists=True))
@click.option("--baseline", required=True)
@click.option("--variant", required=True)
@click.option("--attributes", type=click.Path(exists=True))
@click.option("--train-fractions", type=click.Path(exists=True))
@click.option("--media-map", type=click.Path(exists=True), help="JSON of example_id -> media URL.")
@click.option("--data-dir", required=True, type=click.Path(), help="Directory for annotation storage.")
@click.option("--seed", default=0, show_default=True)
@click.option("--positive-class", default=1, show_default=True)
@click.option("--port", default=8400, show_default=True, envvar="CIEAUDIT_PORT")
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(score_file, predictions, header, baseline, variant, attributes, train_fractions,
          media_map, data_dir, seed, positive_class, port, host):
    """Serve a scored audit run to the browser UI."""
    import uvicorn

    from .service import AuditSession, create_app

    try:
        session = AuditSession.load(
            score_file=score_file, predictions=predictions, header=header,
            baseline_id=baseline, variant_id=variant,
            attributes=attributes, train_fractions=train_fractions,
            media_map=media_map, data_dir=data_dir, rng_seed=seed,
            positive_class=positive_class,
        )
    except LedgerError as exc:
        _fail(exc)
    app = create_app(session)
    click.echo(f"serving audit session on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
