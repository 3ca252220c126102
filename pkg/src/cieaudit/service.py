"""HTTP service for human-in-the-loop auditing of a scored run.

Read-mostly: the loaded session (scores, ledger, attributes) is immutable;
annotations go through a single append-only JSONL log so the audit trail
survives restarts and stays reviewable as plain text.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .divergence import CieScore, rank_and_threshold, read_scores
from .ledger import AttributeTable, Ledger, LedgerError
from .report import build_report

DEFAULT_VERDICTS = ("mislabeled", "ambiguous", "underrepresented-attribute", "ok", "other")
PAGE_SIZE = 20


class AnnotationIn(BaseModel):
    example_id: str
    auditor: str
    verdict: str
    note: str = ""


@dataclass
class Annotation:
    annotation_id: str
    example_id: str
    auditor: str
    verdict: str
    note: str
    created_at: str

    def to_dict(self) -> dict:
        return self.__dict__.copy()


class AnnotationStore:
    """Append-only JSONL log; the latest verdict per (example, auditor) wins."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()
        self._history: list[Annotation] = []
        if path.exists():
            for line in path.read_text().splitlines():
                if line.strip():
                    self._history.append(Annotation(**json.loads(line)))

    def append(self, a: Annotation) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as fh:
                fh.write(json.dumps(a.to_dict(), sort_keys=True) + "\n")
                fh.flush()
            self._history.append(a)

    def active(self) -> dict[tuple[str, str], Annotation]:
        out: dict[tuple[str, str], Annotation] = {}
        for a in self._history:
            out[(a.example_id, a.auditor)] = a
        return out

    def latest_for_example(self, example_id: str) -> Annotation | None:
        latest = None
        for a in self._history:
            if a.example_id == example_id:
                latest = a
        return latest

    def history(self, example_id: str) -> list[Annotation]:
        return [a for a in self._history if a.example_id == example_id]

    def annotated_examples(self) -> set[str]:
        return {a.example_id for a in self._history}


@dataclass
class AuditSession:
    """One scored comparison loaded for auditing."""

    scores: list[CieScore]
    ledger: Ledger
    baseline_id: str
    variant_id: str
    store: AnnotationStore
    attributes: AttributeTable | None = None
    train_fractions: dict[str, float] | None = None
    media_map: dict[str, str] = field(default_factory=dict)
    rng_seed: int = 0
    positive_class: int = 1
    verdicts: tuple[str, ...] = DEFAULT_VERDICTS
    page_size: int = PAGE_SIZE

    @classmethod
    def load(cls, score_file, predictions, header, baseline_id, variant_id,
             data_dir, attributes=None, train_fractions=None, media_map=None,
             rng_seed=0, positive_class=1, verdicts=DEFAULT_VERDICTS) -> "AuditSession":
        ledger = Ledger.from_files(predictions, header)
        scores = read_scores(score_file)
        attr_table = AttributeTable.load(attributes) if attributes else None
        fractions = json.loads(Path(train_fractions).read_text()) if train_fractions else None
        media = json.loads(Path(media_map).read_text()) if media_map else {}
        store = AnnotationStore(Path(data_dir) / "annotations.jsonl")
        return cls(
            scores=scores, ledger=ledger, baseline_id=baseline_id, variant_id=variant_id,
            store=store, attributes=attr_table, train_fractions=fractions,
            media_map=media, rng_seed=rng_seed, positive_class=positive_class,
            verdicts=tuple(verdicts),
        )

    @property
    def example_ids(self) -> set[str]:
        return {s.example_id for s in self.scores}

    def exemplar_slice(self, percentile: float) -> list[CieScore]:
        return rank_and_threshold(self.scores, percentile, rng_seed=self.rng_seed)


def create_app(session: AuditSession) -> FastAPI:
    app = FastAPI(title="cieaudit audit service")
    app.state.session = session

    def check_percentile(p: float) -> float:
        if not 0 <= p < 100:
            raise HTTPException(422, f"percentile must be in [0, 100), got {p}")
        return p

    @app.get("/session")
    def get_session():
        s = session
        return {
            "baseline_id": s.baseline_id,
            "variant_id": s.variant_id,
            "examples": len(s.scores),
            "modal_cie_count": sum(sc.modal_cie for sc in s.scores),
            "attributes": s.attributes.subgroup_names if s.attributes else [],
            "verdicts": list(s.verdicts),
            "page_size": s.page_size,
            "rng_seed": s.rng_seed,
            "has_truth": s.ledger.has_true_labels([sc.example_id for sc in s.scores]),
        }

    @app.get("/exemplars")
    def get_exemplars(
        percentile: float = Query(90.0),
        page: int = Query(0, ge=0),
        attr: str | None = None,
        verdict: str | None = None,
    ):
        check_percentile(percentile)
        selected = session.exemplar_slice(percentile)
        if attr is not None:
            if session.attributes is None:
                raise HTTPException(422, "no attribute table loaded")
            try:
                selected = [s for s in selected if session.attributes.has(s.example_id, attr)]
            except LedgerError as exc:
                raise HTTPException(422, str(exc))
        if verdict is not None:
            selected = [
                s for s in selected
                if (a := session.store.latest_for_example(s.example_id)) and a.verdict == verdict
            ]
        total = len(selected)
        start = page * session.page_size
        page_items = selected[start: start + session.page_size]
        return {
            "percentile": percentile,
            "total": total,
            "page": page,
            "page_size": session.page_size,
            "exemplars": [_exemplar_payload(session, s) for s in page_items],
        }

    @app.get("/dashboard")
    def get_dashboard(percentile: float = Query(90.0)):
        check_percentile(percentile)
        report = build_report(
            session.ledger, session.scores, session.baseline_id, session.variant_id,
            percentiles=[percentile], attributes=session.attributes,
            train_fractions=session.train_fractions, rng_seed=session.rng_seed,
            positive_class=session.positive_class,
        )
        surfaced = {s.example_id for s in session.exemplar_slice(percentile)}
        annotated = session.store.annotated_examples() & surfaced
        report["annotation_progress"] = {"annotated": len(annotated), "surfaced": len(surfaced)}
        return report

    @app.post("/annotations", status_code=201)
    def post_annotation(body: AnnotationIn):
        if body.example_id not in session.example_ids:
            raise HTTPException(404, f"unknown example {body.example_id!r}")
        if body.verdict not in session.verdicts:
            raise HTTPException(422, f"verdict must be one of {list(session.verdicts)}")
        a = Annotation(
            annotation_id=uuid.uuid4().hex,
            example_id=body.example_id,
            auditor=body.auditor,
            verdict=body.verdict,
            note=body.note,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        session.store.append(a)
        return {"annotation_id": a.annotation_id}

    @app.get("/annotations/history/{example_id}")
    def get_history(example_id: str):
        return {"example_id": example_id,
                "history": [a.to_dict() for a in session.store.history(example_id)]}

    @app.get("/annotations/export", response_class=PlainTextResponse)
    def export_annotations():
        lines = ["example_id,auditor,verdict,note,created_at"]
        for a in sorted(session.store.active().values(), key=lambda a: (a.example_id, a.auditor)):
            note = a.note.replace('"', '""')
            lines.append(f'{a.example_id},{a.auditor},{a.verdict},"{note}",{a.created_at}')
        return "\n".join(lines) + "\n"

    return app


def _exemplar_payload(session: AuditSession, s: CieScore) -> dict:
    payload = {
        "example_id": s.example_id,
        "taxicab": s.taxicab,
        "jaccard": s.jaccard,
        "modal_baseline": s.modal_baseline,
        "modal_variant": s.modal_variant,
        "modal_cie": s.modal_cie,
        "rank": s.rank,
        "percentile": s.percentile,
        "tie_flag": s.tie_flag,
        "true_label": session.ledger.true_label(s.example_id),
    }
    if session.attributes is not None:
        payload["attributes"] = {
            name: session.attributes.has(s.example_id, name)
            for name in session.attributes.subgroup_names
        }
    if s.example_id in session.media_map:
        payload["media_url"] = session.media_map[s.example_id]
    latest = session.store.latest_for_example(s.example_id)
    payload["annotation"] = latest.to_dict() if latest else None
    return payload
