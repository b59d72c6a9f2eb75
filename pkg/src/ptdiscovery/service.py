"""HTTP facade for human labeling sessions.

Serves candidate batches with merchandising evidence, accepts decisions, and
exposes metrics. A batch token fences each open batch: decisions are applied
at most once no matter how often a client retries, and a mismatched token
signals that a concurrent submission won. GET endpoints never mutate loop
state; label application and retraining serialize on a single-writer lock.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field, replace

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .corpus import Catalog, QueryLog
from .errors import PtdError, StaleBatch, UnknownPhrase, UnknownSession
from .features import FeatureStore, click_entropy
from .forest import Forest, Hyperparams
from .loop import (
    APPROVED,
    DEFERRED,
    IterationReport,
    LabelDecision,
    PoolState,
    SelectionPolicy,
    apply_labels,
    select_batch,
    train_on_pools,
)
from .forest.rng import derive_child_seed

MAX_SNIPPETS = 5


@dataclass
class CandidateContext:
    """Evidence shown to the expert for one candidate."""

    phrase: str
    confidence: float
    sample_titles: list[str]
    sample_queries: list[str]
    key_features: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "phrase": self.phrase,
            "confidence": self.confidence,
            "sample_titles": self.sample_titles,
            "sample_queries": self.sample_queries,
            "key_features": self.key_features,
        }


@dataclass
class LabelingSession:
    session_id: str
    policy: SelectionPolicy
    hp: Hyperparams
    batch_token: str | None = None
    open_batch: list[CandidateContext] = field(default_factory=list)


class LoopRuntime:
    """Single-writer loop state shared by every labeling session."""

    def __init__(
        self,
        store: FeatureStore,
        pools: PoolState,
        catalog: Catalog,
        query_log: QueryLog,
        hp: Hyperparams | None = None,
        policy: SelectionPolicy | None = None,
        master_seed: int = 0,
        parallelism: int = 1,
    ):
        self.store = store
        self.pools = pools
        self.catalog = catalog
        self.query_log = query_log
        self.hp = hp or Hyperparams()
        self.policy = policy or SelectionPolicy.top_k(10)
        self.master_seed = master_seed
        self.parallelism = parallelism
        self.reports: list[IterationReport] = []
        self.sessions: dict[str, LabelingSession] = {}
        self.forest: Forest | None = None
        self.confidences: dict[str, float] = {}
        self._lock = threading.Lock()
        self._title_index = self._build_title_index()
        self._query_index = self._build_query_index()

    def _build_title_index(self) -> dict[str, list[str]]:
        index: dict[str, list[str]] = {}
        wanted = set(self.store.phrases)
        for sku in self.catalog:
            title = " ".join(sku.title)
            toks = sku.title
            spans = set()
            for n in range(1, min(6, len(toks)) + 1):
                for i in range(len(toks) - n + 1):
                    spans.add(" ".join(toks[i : i + n]))
            for phrase in spans & wanted:
                bucket = index.setdefault(phrase, [])
                if len(bucket) < MAX_SNIPPETS:
                    bucket.append(title)
        return index

    def _build_query_index(self) -> dict[str, list[str]]:
        index: dict[str, list[str]] = {}
        wanted = set(self.store.phrases)
        for rec in self.query_log:
            toks = rec.query.split(" ")
            spans = set()
            for n in range(1, min(6, len(toks)) + 1):
                for i in range(len(toks) - n + 1):
                    spans.add(" ".join(toks[i : i + n]))
            for phrase in spans & wanted:
                bucket = index.setdefault(phrase, [])
                if len(bucket) < MAX_SNIPPETS:
                    bucket.append(rec.query)
        return index

    def ensure_forest(self, hp: Hyperparams) -> Forest:
        if self.forest is None:
            seed = derive_child_seed(self.master_seed, len(self.reports))
            self.forest = train_on_pools(self.pools, self.store, hp, seed, self.parallelism)
            self._refresh_confidences()
        return self.forest

    def _refresh_confidences(self) -> None:
        from .loop import score_unlabeled

        self.confidences = score_unlabeled(self.forest, self.pools, self.store)

    def context_for(self, phrase: str, confidence: float) -> CandidateContext:
        if phrase not in self.store.index:
            raise UnknownPhrase(f"{phrase!r} is not a pool candidate")
        row = self.store.matrix[self.store.index[phrase]]
        rec = self.query_log.records.get(phrase)
        return CandidateContext(
            phrase=phrase,
            confidence=confidence,
            sample_titles=self._title_index.get(phrase, []),
            sample_queries=self._query_index.get(phrase, []),
            key_features={
                "query_volume": float(rec.volume) if rec else 0.0,
                "quality_score": float(row[0]),
                "click_entropy": click_entropy(rec.sku_clicks) if rec else 0.0,
            },
        )

    def create_session(
        self, policy: SelectionPolicy | None, hp: Hyperparams | None
    ) -> LabelingSession:
        session = LabelingSession(
            session_id=uuid.uuid4().hex,
            policy=policy or self.policy,
            hp=hp or self.hp,
        )
        self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> LabelingSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def get_batch(self, session_id: str) -> LabelingSession:
        """Return the open batch, creating one if none is open (idempotent)."""
        session = self.get_session(session_id)
        if session.batch_token is not None:
            return session
        with self._lock:
            if session.batch_token is not None:
                return session
            forest = self.ensure_forest(session.hp)
            batch = select_batch(forest, self.pools, self.store, session.policy)
            session.open_batch = [self.context_for(p, c) for p, c in batch]
            session.batch_token = uuid.uuid4().hex
        return session

    def submit_labels(
        self, session_id: str, batch_token: str, decisions: list[LabelDecision]
    ) -> IterationReport:
        """Apply a batch's decisions exactly once; omitted phrases defer."""
        session = self.get_session(session_id)
        with self._lock:
            if session.batch_token is None or batch_token != session.batch_token:
                raise StaleBatch("batch token does not match the open batch")
            batch_phrases = [c.phrase for c in session.open_batch]
            decided = {d.phrase for d in decisions}
            for d in decisions:
                if d.phrase not in batch_phrases:
                    raise UnknownPhrase(f"{d.phrase!r} was not in the presented batch")
            full = list(decisions) + [
                LabelDecision(p, DEFERRED) for p in batch_phrases if p not in decided
            ]
            new_pools = apply_labels(self.pools, full)
            approved = sum(1 for d in full if d.verdict == APPROVED)
            presented = len(batch_phrases)
            report = IterationReport(
                iteration=self.pools.iteration + 1,
                presented=presented,
                approved=approved,
                precision=approved / presented if presented else 0.0,
                cumulative_discovered=len(new_pools.discovered),
            )
            self.pools = replace(new_pools, iteration=report.iteration)
            self.reports.append(report)
            session.batch_token = None
            session.open_batch = []
            # retrain on the updated pools so the next batch reflects the labels
            seed = derive_child_seed(self.master_seed, len(self.reports))
            self.forest = train_on_pools(self.pools, self.store, session.hp, seed, self.parallelism)
            self._refresh_confidences()
            return report


class CreateSessionBody(BaseModel):
    top_k: int | None = None
    threshold: float | None = None
    hyperparams: dict | None = None


class DecisionBody(BaseModel):
    phrase: str
    verdict: str = Field(pattern="^(approved|rejected|deferred)$")


class SubmitLabelsBody(BaseModel):
    batch_token: str
    decisions: list[DecisionBody]


_ERROR_STATUS = {
    "UnknownSession": 404,
    "UnknownPhrase": 404,
    "StaleBatch": 409,
    "DuplicateDecision": 400,
    "ConfigError": 400,
}


def _report_dict(r: IterationReport) -> dict:
    return {
        "iteration": r.iteration,
        "presented": r.presented,
        "approved": r.approved,
        "precision": r.precision,
        "cumulative_discovered": r.cumulative_discovered,
        "coverage": r.coverage,
    }


def create_app(runtime: LoopRuntime, static_dir: str | None = None) -> FastAPI:
    """Build the FastAPI app over a prepared runtime."""
    app = FastAPI(title="ptdiscovery labeling service")
    app.state.runtime = runtime

    @app.exception_handler(PtdError)
    async def _ptd_error(request: Request, exc: PtdError):
        status = _ERROR_STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status, content={"code": exc.code, "detail": str(exc)})

    @app.post("/api/session")
    def create_session(body: CreateSessionBody | None = None):
        policy = None
        hp = None
        if body is not None:
            if body.top_k is not None:
                policy = SelectionPolicy.top_k(body.top_k)
            elif body.threshold is not None:
                policy = SelectionPolicy.threshold(body.threshold)
            if body.hyperparams:
                hp = Hyperparams(**body.hyperparams)
        session = runtime.create_session(policy, hp)
        return {"session_id": session.session_id}

    @app.get("/api/session/{session_id}/batch")
    def get_batch(session_id: str):
        session = runtime.get_batch(session_id)
        return {
            "batch_token": session.batch_token,
            "candidates": [c.as_dict() for c in session.open_batch],
        }

    @app.post("/api/session/{session_id}/labels")
    def post_labels(session_id: str, body: SubmitLabelsBody):
        decisions = [LabelDecision(d.phrase, d.verdict) for d in body.decisions]
        report = runtime.submit_labels(session_id, body.batch_token, decisions)
        return _report_dict(report)

    @app.get("/api/metrics")
    def metrics():
        return {
            "reports": [_report_dict(r) for r in runtime.reports],
            "pool_sizes": {
                "positive": len(runtime.pools.positive),
                "unlabeled": len(runtime.pools.unlabeled),
                "rejected": len(runtime.pools.rejected),
                "deferred": len(runtime.pools.deferred),
            },
        }

    @app.get("/api/candidates/{phrase}/context")
    def candidate_context(phrase: str):
        confidence = runtime.confidences.get(phrase, 0.0)
        return runtime.context_for(phrase, confidence).as_dict()

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
