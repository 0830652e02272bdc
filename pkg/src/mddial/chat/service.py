"""HTTP chat service exposing trained ensembles to human users.

Sessions are assigned a frozen policy from the pool round-robin (the counter
persists across restarts); each typed turn runs parse -> tracker -> greedy
action selection -> templates, with no learning anywhere. After hanging up,
the user submits the Q1-Q6 questionnaire, which lands in an append-only
results log for later aggregation.

Wire protocol (JSON bodies; errors are {error, detail} with conventional
status codes):

    GET  /health
    POST /session                      -> {session_id, task_card}
    POST /session/{id}/turn   {text}   -> {utterance, acts, status}
    POST /session/{id}/end             -> {status}
    POST /session/{id}/questionnaire   {q1..q6} -> {status, completion_code}
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..acts import serialize_act
from ..domain import sample_goal
from ..harness import Domain, discover_ensembles, ensemble_metadata, load_ensemble
from ..selection import AgentEnsemble, select_response
from ..tracking import DialogueState, init_state, update_with_system_acts, update_with_user_input
from .nlg import generate_utterance
from .nlu import parse_utterance

QUESTION_TEXTS = {
    "q1": "The system recommended a restaurant that matched my constraints.",
    "q2": "I got all the information I was looking for.",
    "q3": "The system understood what I was saying.",
    "q4": "The system recognised my speech well.",
    "q5": "The system's responses were appropriate.",
    "q6": "The conversation felt natural.",
}


class ChatError(Exception):
    def __init__(self, status_code: int, error: str, detail: str):
        self.status_code = status_code
        self.error = error
        self.detail = detail


@dataclass
class ChatSession:
    session_id: str
    policy_index: int
    policy_name: str
    ensemble: AgentEnsemble
    state: DialogueState
    task_card: str
    phase: str = "chatting"  # chatting | ended | done
    transcript: list[dict] = field(default_factory=list)
    started_at: float = field(default_factory=time.time)
    ended_at: float | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


def _task_card(goal) -> str:
    bits = []
    price = goal.constraints.get("pricerange")
    food = goal.constraints.get("food")
    area = goal.constraints.get("area")
    descr = "restaurant"
    if food:
        descr = f"{food.capitalize()} restaurant"
    if price:
        phrase = {"moderate": "moderately priced", "cheap": "cheap", "expensive": "expensive"}.get(price, price)
        descr = f"{phrase} {descr}"
    card = f"You are looking for a {descr}"
    if area:
        card += f" in the {area} of town"
    card += "."
    wanted = [s for s in goal.requests if s != "name"]
    if wanted:
        names = {"phone": "phone number", "address": "address", "postcode": "postcode"}
        listed = [names.get(s, s) for s in wanted]
        joined = listed[0] if len(listed) == 1 else ", ".join(listed[:-1]) + " and " + listed[-1]
        card += f" Make sure you get the {joined}."
    bits.append(card)
    return " ".join(bits)


class ChatService:
    """Session book-keeping behind the HTTP app; usable directly in tests."""

    def __init__(self, pool: list[tuple[str, AgentEnsemble]], domain: Domain,
                 results_dir: str | Path, goal_seed: int = 0):
        if not pool:
            raise ValueError("policy pool is empty")
        self.pool = pool
        self.domain = domain
        self.results_dir = Path(results_dir)
        self.results_dir.mkdir(parents=True, exist_ok=True)
        (self.results_dir / "transcripts").mkdir(exist_ok=True)
        self.goal_seed = goal_seed
        self.sessions: dict[str, ChatSession] = {}
        self._counter_lock = threading.Lock()
        self._state_path = self.results_dir / "pool_state.json"
        self._counter = 0
        if self._state_path.exists():
            self._counter = json.loads(self._state_path.read_text()).get("counter", 0)

    def _next_assignment(self) -> int:
        with self._counter_lock:
            assignment = self._counter
            self._counter += 1
            self._state_path.write_text(json.dumps({"counter": self._counter}))
        return assignment

    def create_session(self) -> ChatSession:
        assignment = self._next_assignment()
        index = assignment % len(self.pool)
        name, ensemble = self.pool[index]
        rng = np.random.default_rng(np.random.SeedSequence((self.goal_seed, assignment)))
        goal = sample_goal(self.domain.ontology, self.domain.db, rng)
        session = ChatSession(
            session_id=uuid.uuid4().hex,
            policy_index=index,
            policy_name=name,
            ensemble=ensemble,
            state=init_state(),
            task_card=_task_card(goal),
        )
        self.sessions[session.session_id] = session
        return session

    def _get(self, session_id: str, phase: str | None = None) -> ChatSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise ChatError(404, "unknown_session", f"no session {session_id!r}")
        if phase is not None and session.phase != phase:
            raise ChatError(409, "wrong_phase", f"session is {session.phase}, expected {phase}")
        return session

    def post_turn(self, session_id: str, text: str) -> dict:
        session = self._get(session_id, phase="chatting")
        with session.lock:
            hypotheses = parse_utterance(text, self.domain.ontology)
            state = update_with_user_input(session.state, hypotheses, self.domain.ontology)
            acts, _ = select_response(session.ensemble, state, self.domain.index,
                                      temperature=1.0, explore=False)
            session.state = update_with_system_acts(state, acts)
            utterance = generate_utterance(acts)
            session.transcript.append({"speaker": "user", "text": text, "ts": time.time()})
            session.transcript.append({
                "speaker": "system", "text": utterance,
                "acts": [serialize_act(a) for a in acts], "ts": time.time(),
            })
            return {"utterance": utterance, "acts": [serialize_act(a) for a in acts], "status": session.phase}

    def end_session(self, session_id: str) -> dict:
        session = self._get(session_id)
        if session.phase != "chatting":
            raise ChatError(409, "wrong_phase", f"session already {session.phase}")
        with session.lock:
            session.phase = "ended"
            session.ended_at = time.time()
            path = self.results_dir / "transcripts" / f"{session.session_id}.json"
            path.write_text(json.dumps({
                "session_id": session.session_id,
                "policy_index": session.policy_index,
                "policy_name": session.policy_name,
                "task_card": session.task_card,
                "transcript": session.transcript,
            }, indent=2))
        return {"status": "ended"}

    def submit_questionnaire(self, session_id: str, answers: dict) -> dict:
        session = self._get(session_id, phase="ended")
        cleaned = _validate_answers(answers)
        with session.lock:
            record = {
                "session_id": session.session_id,
                "policy_index": session.policy_index,
                "policy_name": session.policy_name,
                "variant": session.ensemble.variant,
                "n_user_turns": sum(1 for t in session.transcript if t["speaker"] == "user"),
                "transcript": f"transcripts/{session.session_id}.json",
                "answers": cleaned,
                "submitted_at": time.time(),
            }
            with open(self.results_dir / "questionnaires.jsonl", "a") as fh:
                fh.write(json.dumps(record) + "\n")
            session.phase = "done"
        return {"status": "done", "completion_code": f"MD-{session.session_id[:8].upper()}"}


def _validate_answers(answers: dict) -> dict:
    cleaned = {}
    for key in ("q1", "q2"):
        value = answers.get(key)
        if not isinstance(value, bool):
            raise ChatError(422, "invalid_answer", f"{key} must be a boolean yes/no")
        cleaned[key] = value
    for key in ("q3", "q4", "q5", "q6"):
        value = answers.get(key)
        if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 6:
            raise ChatError(422, "invalid_answer", f"{key} must be an integer in 1..6")
        cleaned[key] = value
    return cleaned


def aggregate_questionnaires(results_path: str | Path) -> dict:
    """Per-variant questionnaire means/stddevs (Q1-Q2 as percent yes)."""
    groups: dict[str, list[dict]] = {}
    with open(results_path) as fh:
        for line in fh:
            record = json.loads(line)
            groups.setdefault(record.get("variant", "unknown"), []).append(record)
    summary = {}
    for variant, records in sorted(groups.items()):
        row: dict = {"n_dialogues": len(records)}
        lengths = [r["n_user_turns"] for r in records]
        row["average_length"] = {"mean": float(np.mean(lengths)), "std": float(np.std(lengths))}
        for key in ("q1", "q2"):
            values = [100.0 if r["answers"][key] else 0.0 for r in records]
            row[key] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
        for key in ("q3", "q4", "q5", "q6"):
            values = [float(r["answers"][key]) for r in records]
            row[key] = {"mean": float(np.mean(values)), "std": float(np.std(values))}
        summary[variant] = row
    return summary


# ---------------------------------------------------------------------------
# FastAPI wiring

def load_pool(policy_source: str | Path, domain: Domain, checkpoint: str | None = None):
    members = discover_ensembles(policy_source, checkpoint)
    pool = []
    for name, directory in members:
        ensemble = load_ensemble(directory, domain)
        meta = ensemble_metadata(directory)
        label = meta.get("variant", ensemble.variant)
        pool.append((f"{label}/{name}", ensemble))
    return pool


def create_app(service: ChatService) -> FastAPI:
    app = FastAPI(title="mddial chat service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.service = service

    @app.exception_handler(ChatError)
    async def on_chat_error(_request: Request, exc: ChatError):
        return JSONResponse(status_code=exc.status_code, content={"error": exc.error, "detail": exc.detail})

    @app.get("/health")
    def health():
        return {"status": "ok", "pool_size": len(service.pool), "sessions": len(service.sessions)}

    @app.post("/session")
    def create_session():
        session = service.create_session()
        return {"session_id": session.session_id, "task_card": session.task_card}

    @app.post("/session/{session_id}/turn")
    async def post_turn(session_id: str, request: Request):
        body = await _json_body(request)
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ChatError(422, "invalid_request", "body must contain non-empty 'text'")
        return service.post_turn(session_id, text)

    @app.post("/session/{session_id}/end")
    def end_session(session_id: str):
        return service.end_session(session_id)

    @app.post("/session/{session_id}/questionnaire")
    async def questionnaire(session_id: str, request: Request):
        body = await _json_body(request)
        return service.submit_questionnaire(session_id, body)

    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except json.JSONDecodeError:
        raise ChatError(422, "invalid_request", "body must be a JSON object") from None
    if not isinstance(body, dict):
        raise ChatError(422, "invalid_request", "body must be a JSON object")
    return body
