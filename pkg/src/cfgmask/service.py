"""HTTP surface for engine lifecycle: create, mask, accept, reset.

Sessions are held in process memory.  Methods on one engine are serialized
behind a lock (single-writer contract); independent engines run freely.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .grammar import GrammarError, parse_grammar, transform
from .mask import Vocabulary, mask_to_hex, popcount
from .session import MaskGenerator, SessionOptions


class EngineOptions(BaseModel):
    prune: bool = True
    ci_cache: bool = True
    trie: bool = True
    state_cache: bool = True


class VocabularyModel(BaseModel):
    eos_id: int
    tokens: dict[str, str] = Field(description="token id -> base64 byte sequence")


class CreateEngineRequest(BaseModel):
    grammar: str
    start: str = "start"
    vocab: VocabularyModel
    options: EngineOptions = EngineOptions()


class CreateEngineResponse(BaseModel):
    engine_id: str
    vocab_size: int


class MaskResponse(BaseModel):
    mask_hex: str
    allowed: int
    fingerprint: str
    accepting: bool
    finished: bool


class AcceptRequest(BaseModel):
    token_id: int


class AcceptResponse(BaseModel):
    accepted: bool
    finished: bool


class _Session:
    def __init__(self, gen: MaskGenerator):
        self.gen = gen
        self.lock = threading.Lock()


def create_app() -> FastAPI:
    app = FastAPI(title="cfgmask", version="0.1.0")
    sessions: dict[str, _Session] = {}
    registry_lock = threading.Lock()

    def get_session(engine_id: str) -> _Session:
        with registry_lock:
            session = sessions.get(engine_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown engine id")
        return session

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/engines", response_model=CreateEngineResponse)
    def create_engine(req: CreateEngineRequest):
        try:
            grammar = transform(parse_grammar(req.grammar, start=req.start))
            vocab = Vocabulary.from_json(
                VocabularyModel(eos_id=req.vocab.eos_id, tokens=req.vocab.tokens).model_dump_json()
            )
            gen = MaskGenerator(
                grammar,
                vocab,
                SessionOptions(
                    prune=req.options.prune,
                    ci_cache=req.options.ci_cache,
                    trie=req.options.trie,
                    state_cache=req.options.state_cache,
                ),
            )
        except (GrammarError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        engine_id = uuid.uuid4().hex
        with registry_lock:
            sessions[engine_id] = _Session(gen)
        return CreateEngineResponse(engine_id=engine_id, vocab_size=vocab.size)

    @app.get("/engines/{engine_id}/mask", response_model=MaskResponse)
    def get_mask(engine_id: str):
        session = get_session(engine_id)
        with session.lock:
            gen = session.gen
            m = gen.current_mask()
            return MaskResponse(
                mask_hex=mask_to_hex(m, gen.vocab.size),
                allowed=popcount(m),
                fingerprint=gen.fingerprint().hex(),
                accepting=gen.is_accepting(),
                finished=gen.finished,
            )

    @app.post("/engines/{engine_id}/accept", response_model=AcceptResponse)
    def accept_token(engine_id: str, req: AcceptRequest):
        session = get_session(engine_id)
        with session.lock:
            gen = session.gen
            if not (0 <= req.token_id < gen.vocab.size):
                raise HTTPException(status_code=422, detail="token id out of range")
            accepted = gen.accept(req.token_id)
            return AcceptResponse(accepted=accepted, finished=gen.finished)

    @app.post("/engines/{engine_id}/reset")
    def reset_engine(engine_id: str):
        session = get_session(engine_id)
        with session.lock:
            session.gen.reset()
        return {"status": "ok"}

    @app.delete("/engines/{engine_id}")
    def delete_engine(engine_id: str):
        with registry_lock:
            if engine_id not in sessions:
                raise HTTPException(status_code=404, detail="unknown engine id")
            del sessions[engine_id]
        return {"status": "ok"}

    return app


app = create_app()
