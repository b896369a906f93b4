"""HTTP boundary consumed by the clinician UI: case lifecycle endpoints plus
batch evaluation runs."""
from __future__ import annotations

import base64
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Header, HTTPException, Request, Response

from . import evaluation, orchestrator
from .config import ServiceConfig
from .imaging import ImageDecodeError
from .orchestrator import IllegalTransitionError, WorkflowState
from .prompts import UnstructuredResponseError
from .providers import HttpProviderSet, MockProviderSet, ProviderError, ProviderSet
from .segmentation import NoLesionError
from .store import CaseNotFoundError, CaseStore

__all__ = ["create_app", "build_providers"]


def build_providers(config: ServiceConfig) -> ProviderSet:
    if config.mock_fixtures is not None:
        return MockProviderSet(fixtures_dir=Path(config.mock_fixtures))
    return HttpProviderSet(
        vision_url=config.vision_url,
        text_url=config.text_url,
        embedding_url=config.embedding_url,
        nli_url=config.nli_url,
        token=config.bearer_token,
    )


class _EvalRuns:
    def __init__(self, workers: int):
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.runs: dict[str, dict[str, Any]] = {}
        self.guard = threading.Lock()

    def start(self, corpus: str, reviews: str | None, providers: ProviderSet, weights) -> str:
        run_id = uuid.uuid4().hex
        with self.guard:
            self.runs[run_id] = {"status": "running", "completed": 0, "total": 0, "report": None, "errors": []}

        def work():
            state = self.runs[run_id]
            try:
                cases = evaluation.load_corpus(corpus)
                state["total"] = len(cases)
                records = []
                for case in cases:
                    records.append(evaluation.score_case(case, providers))
                    state["completed"] += 1
                review_list, errors = ([], [])
                if reviews:
                    review_list, errors = evaluation.ingest_expert_reviews(reviews)
                state["errors"] = errors
                report = evaluation.aggregate(records, review_list, weights)
                state["report"] = report.to_dict()
                state["table"] = evaluation.render_capability_table(report)
                state["status"] = "done"
            except Exception as exc:  # surfaced via the status endpoint
                state["status"] = "failed"
                state["errors"] = state.get("errors", []) + [str(exc)]

        self.pool.submit(work)
        return run_id


def create_app(config: ServiceConfig, providers: ProviderSet | None = None) -> FastAPI:
    app = FastAPI(title="dermatology analysis engine")
    store = CaseStore(config.store_root)
    providers = providers or build_providers(config)
    eval_runs = _EvalRuns(config.eval_workers)
    grabcut = config.grabcut.to_params()
    weights = config.weights.to_weights()

    def load_case(case_id: str) -> orchestrator.Case:
        try:
            return store.load(case_id)
        except CaseNotFoundError:
            raise HTTPException(status_code=404, detail="case not found")

    def case_summary(case: orchestrator.Case) -> dict[str, Any]:
        return {"id": case.id, "state": case.state.value, "path": case.artifacts.get("path")}

    @app.post("/cases", status_code=201)
    async def create_case(request: Request, idempotency_key: str | None = Header(default=None)):
        if idempotency_key:
            cached = store.cached_response(idempotency_key)
            if cached is not None:
                return cached
        body = await request.body()
        if len(body) > config.max_upload_bytes:
            raise HTTPException(status_code=413, detail="image too large")
        try:
            case = orchestrator.new_case(body)
        except ImageDecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        store.save(case)
        response = case_summary(case)
        if idempotency_key:
            store.cache_response(idempotency_key, response)
        return response

    def mutate(case_id: str, idempotency_key: str | None, action):
        if idempotency_key:
            cached = store.cached_response(idempotency_key)
            if cached is not None:
                return cached
        with store.lock(case_id):
            case = load_case(case_id)
            try:
                action(case)
            except IllegalTransitionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except (ProviderError, UnstructuredResponseError, NoLesionError) as exc:
                store.save(case)
                raise HTTPException(status_code=502, detail=str(exc))
            store.save(case)
        response = case_summary(case)
        if idempotency_key:
            store.cache_response(idempotency_key, response)
        return response

    @app.post("/cases/{case_id}/analyze")
    def analyze(case_id: str, idempotency_key: str | None = Header(default=None)):
        return mutate(case_id, idempotency_key, lambda case: orchestrator.run_initial_analysis(case, providers))

    @app.post("/cases/{case_id}/xai")
    def xai(case_id: str, idempotency_key: str | None = Header(default=None)):
        return mutate(case_id, idempotency_key, lambda case: orchestrator.run_lesion_path(case, providers, grabcut))

    @app.post("/cases/{case_id}/followup")
    def followup(case_id: str, idempotency_key: str | None = Header(default=None)):
        return mutate(case_id, idempotency_key, lambda case: orchestrator.run_condition_followup(case, providers))

    @app.get("/cases/{case_id}/report")
    def report(case_id: str, include_image: bool = False):
        case = load_case(case_id)
        doc = case.to_dict()
        doc["image_url"] = f"/cases/{case_id}/image"
        if include_image:
            doc["image_base64"] = base64.b64encode(case.image).decode("ascii")
        doc["legal_actions"] = legal_actions(case)
        return doc

    def legal_actions(case: orchestrator.Case) -> list[str]:
        if case.state is WorkflowState.CREATED:
            return ["analyze"]
        if case.state is WorkflowState.INITIAL_ANALYZED:
            path = case.artifacts.get("path")
            if path == "lesion":
                return ["xai"]
            if path == "condition":
                return ["followup"]
        return []

    @app.get("/cases/{case_id}/image")
    def image(case_id: str):
        case = load_case(case_id)
        media = "image/png" if case.image[:8] == b"\x89PNG\r\n\x1a\n" else "image/jpeg"
        return Response(content=case.image, media_type=media)

    @app.post("/eval/runs", status_code=202)
    def start_eval(body: dict):
        corpus = body.get("corpus")
        if not corpus or not Path(corpus).is_dir():
            raise HTTPException(status_code=422, detail=[{"corpus": "missing or not a directory"}])
        reviews = body.get("reviews")
        if reviews and not Path(reviews).is_file():
            raise HTTPException(status_code=422, detail=[{"reviews": "not a file"}])
        run_id = eval_runs.start(corpus, reviews, providers, weights)
        return {"run_id": run_id}

    @app.get("/eval/runs/{run_id}")
    def eval_status(run_id: str):
        state = eval_runs.runs.get(run_id)
        if state is None:
            raise HTTPException(status_code=404, detail="run not found")
        return state

    return app
