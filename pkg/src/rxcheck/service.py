"""HTTP serving of validity decisions, with an append-only session log."""

from __future__ import annotations

import json
import logging
import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .channel import extract_entities
from .corpus import CompatibilityTable, normalize_prescription
from .encoder import PairClassifier, load_checkpoint, variant_display_name
from .subword import Vocabulary, encode_pair
from .encoder import batch_tensors

import torch

logger = logging.getLogger(__name__)


class ValidationRequest(BaseModel):
    diagnosis: str
    prescription: str
    threshold: float | None = None


class CorrectionRequest(ValidationRequest):
    correction_of: str


class ServiceState:
    def __init__(
        self,
        checkpoint_path: str | Path,
        vocab_path: str | Path,
        log_path: str | Path | None = None,
        threshold: float = 0.5,
    ):
        self.checkpoint_path = Path(checkpoint_path)
        self.vocab_path = Path(vocab_path)
        self.log_path = Path(log_path) if log_path else None
        self.threshold = threshold
        self.model: PairClassifier | None = None
        self.vocab: Vocabulary | None = None
        self.drug_lexicon = CompatibilityTable.default().drug_lexicon()
        self._lock = threading.Lock()
        self._known_ids: set[str] = set()
        self._counter = 0
        if self.log_path and self.log_path.exists():
            for entry in self._read_log():
                self._known_ids.add(entry["id"])
                self._counter = max(self._counter, int(entry["id"].split("-")[1]))

    def load(self) -> None:
        self.model = load_checkpoint(self.checkpoint_path)
        self.vocab = Vocabulary.load(self.vocab_path)

    @property
    def ready(self) -> bool:
        return self.model is not None and self.vocab is not None

    def score(self, prescription: str, diagnosis: str) -> float:
        assert self.model is not None and self.vocab is not None
        pair = encode_pair(prescription, diagnosis, self.vocab, self.model.cfg.max_len)
        ids, segments, mask, _ = batch_tensors([pair])
        self.model.train(False)
        with torch.no_grad():
            scores, _ = self.model(ids, segments, mask, mode="infer")
        return float(scores[0].item())

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            rid = f"req-{self._counter:06d}"
            self._known_ids.add(rid)
            return rid

    def append_log(self, entry: dict) -> None:
        if self.log_path is None:
            return
        with self._lock:
            try:
                with open(self.log_path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(entry) + "\n")
            except OSError as exc:
                logger.warning("session log write failed: %s", exc)

    def _read_log(self) -> list[dict]:
        if self.log_path is None or not self.log_path.exists():
            return []
        entries = []
        with open(self.log_path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    entries.append(json.loads(line))
        return entries

    def history(self, limit: int) -> list[dict]:
        return list(reversed(self._read_log()))[:limit]

    def knows(self, request_id: str) -> bool:
        return request_id in self._known_ids


def create_app(
    checkpoint_path: str | Path,
    vocab_path: str | Path,
    log_path: str | Path | None = None,
    threshold: float = 0.5,
    defer_load: bool = False,
) -> FastAPI:
    state = ServiceState(checkpoint_path, vocab_path, log_path, threshold)
    if not defer_load:
        state.load()
    app = FastAPI(title="rxcheck validation service")
    app.state.service = state

    def _validate(req: ValidationRequest, correction_of: str | None = None) -> dict:
        if not state.ready:
            raise HTTPException(status_code=503, detail="model not loaded")
        norm_dx = normalize_prescription(req.diagnosis)
        norm_rx = normalize_prescription(req.prescription)
        for field_name, value in (("diagnosis", norm_dx), ("prescription", norm_rx)):
            if not value:
                raise HTTPException(status_code=422, detail=f"field {field_name} is empty after normalization")
        thr = req.threshold if req.threshold is not None else state.threshold
        score = state.score(norm_rx, norm_dx)
        entities = extract_entities(norm_rx, state.drug_lexicon)
        rid = state.next_id()
        response = {
            "request_id": rid,
            "score": score,
            "valid": score >= thr,
            "threshold": thr,
            "entities": {
                "medications": sorted(entities.medications),
                "dosages": sorted(entities.dosages),
                "usages": sorted(entities.usages),
            },
            "variant": variant_display_name(state.model.metadata),
            "normalized": {"diagnosis": norm_dx, "prescription": norm_rx},
        }
        if correction_of is not None:
            response["correction_of"] = correction_of
        state.append_log({
            "id": rid,
            "ts": time.time(),
            "type": "correction" if correction_of else "validation",
            "request": {"diagnosis": req.diagnosis, "prescription": req.prescription},
            "response": response,
            "correction_of": correction_of,
        })
        return response

    @app.post("/v1/validate")
    def validate(req: ValidationRequest) -> dict:
        return _validate(req)

    @app.post("/v1/correction")
    def correction(req: CorrectionRequest) -> dict:
        if not state.knows(req.correction_of):
            raise HTTPException(status_code=404, detail=f"unknown request id {req.correction_of}")
        return _validate(req, correction_of=req.correction_of)

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "ready": state.ready,
            "checkpoint_id": state.checkpoint_path.name if state.ready else "",
            "vocab_hash": state.vocab.content_hash() if state.ready else "",
            "variant": variant_display_name(state.model.metadata) if state.ready else "",
        }

    @app.get("/v1/history")
    def history(limit: int = 20) -> list[dict]:
        return state.history(limit)

    return app
