"""HTTP facade: FastAPI application factory.

Every non-2xx response carries a machine-readable error code and never leaks
stack traces or secret material.
"""

from __future__ import annotations

from datetime import datetime

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import (
    DissectAuthError,
    InvalidRule,
    LockedOut,
    NotFound,
    SchemaViolation,
    UserExists,
)
from ..rules import DecoySpec
from ..store import ProfileStore, SecretVault, master_key_from_hex
from .config import AppConfig, load_config
from .pipeline import AuthService, ChallengeStateError, Clock, SessionError, rule_spec_from_wire, system_clock
from .schemas import (
    AttemptRequest,
    AttemptResponse,
    ChallengeAnswerRequest,
    ChallengeAnswerResponse,
    CreateUserRequest,
    CreateUserResponse,
    OpenSessionRequest,
    OpenSessionResponse,
    PreviewResponse,
    SwitchRuleRequest,
)

_ERROR_STATUS = [
    (UserExists, 409, "USER_EXISTS"),
    (NotFound, 404, "NOT_FOUND"),
    (InvalidRule, 422, "INVALID_RULE"),
    (SchemaViolation, 422, "SCHEMA_VIOLATION"),
    (LockedOut, 423, "ACCOUNT_LOCKED"),
    (SessionError, 401, "SESSION_INVALID"),
    (ChallengeStateError, 422, "NO_CHALLENGE_PENDING"),
]


def create_app(
    config: AppConfig | None = None,
    clock: Clock = system_clock,
    store: ProfileStore | None = None,
) -> FastAPI:
    config = config or load_config()
    if store is None:
        vault = SecretVault(master_key_from_hex(config.master_key_hex))
        store = ProfileStore(
            config.storage_root,
            vault,
            default_scheme=config.scheme(),
            snapshot_every=config.snapshot_every,
        )
    service = AuthService(config, store, clock=clock)
    if config.keyboard_layout_path:
        from ..telemetry.extraction import configure_layout

        configure_layout(config.keyboard_layout_path)

    app = FastAPI(title="dissectauth", version=__version__, docs_url=None, redoc_url=None)
    app.state.service = service
    app.state.store = store
    app.state.config = config

    def error_response(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})

    @app.exception_handler(DissectAuthError)
    async def _domain_error(request: Request, exc: DissectAuthError):
        for klass, status, code in _ERROR_STATUS:
            if isinstance(exc, klass):
                return error_response(status, code, str(exc))
        return error_response(500, "INTERNAL", "internal error")

    @app.exception_handler(SessionError)
    async def _session_error(request: Request, exc: SessionError):
        return error_response(401, "SESSION_INVALID", str(exc))

    @app.exception_handler(ChallengeStateError)
    async def _challenge_error(request: Request, exc: ChallengeStateError):
        return error_response(422, "NO_CHALLENGE_PENDING", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return error_response(422, "VALIDATION", str(exc.errors()[:3]))

    @app.exception_handler(HTTPException)
    async def _http_error(request: Request, exc: HTTPException):
        detail = exc.detail
        if isinstance(detail, dict) and "code" in detail:
            return error_response(exc.status_code, detail["code"], detail.get("message", ""))
        return error_response(exc.status_code, "HTTP_ERROR", str(detail))

    def require_admin(authorization: str | None = Header(default=None)) -> None:
        expected = f"Bearer {config.admin_token}"
        if authorization != expected:
            raise HTTPException(
                status_code=401,
                detail={"code": "BAD_ADMIN_TOKEN", "message": "admin bearer token required"},
            )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    def _inject_leet_default(doc: dict) -> dict:
        # rules that substitute but ship no table get the configured default map
        if doc.get("variant") == "Leet" and "leet_map" not in doc:
            doc["leet_map"] = dict(config.leet_map)
        for child in doc.get("children", []):
            _inject_leet_default(child)
        return doc

    @app.post("/users", response_model=CreateUserResponse, status_code=201)
    def create_user(body: CreateUserRequest):
        spec = rule_spec_from_wire(_inject_leet_default(body.rule.to_engine_dict()))
        decoy = DecoySpec(
            decoy_positions=frozenset(body.decoy.decoy_positions),
            enabled=body.decoy.enabled,
        )
        now = clock().timestamp()
        profile = store.create_user(body.username, body.secret, spec, decoy, now=now)
        return CreateUserResponse(
            username=profile.user_id,
            rule_variant=profile.rule_spec.variant.value,
            rule_cycle=profile.rule_spec.effective_cycle(),
            created_at=profile.created_at,
        )

    @app.post("/users/{username}/rule", response_model=CreateUserResponse)
    def switch_rule(username: str, body: SwitchRuleRequest):
        spec = rule_spec_from_wire(_inject_leet_default(body.rule.to_engine_dict()))
        decoy = None
        if body.decoy is not None:
            decoy = DecoySpec(
                decoy_positions=frozenset(body.decoy.decoy_positions),
                enabled=body.decoy.enabled,
            )
        profile = store.switch_rule(username, spec, decoy, now=clock().timestamp())
        return CreateUserResponse(
            username=profile.user_id,
            rule_variant=profile.rule_spec.variant.value,
            rule_cycle=profile.rule_spec.effective_cycle(),
            created_at=profile.created_at,
        )

    @app.post("/sessions", response_model=OpenSessionResponse, status_code=201)
    def open_session(body: OpenSessionRequest):
        live = service.open_session(body.username)
        return OpenSessionResponse(session_token=live.token, expires_in_s=config.session_ttl_s)

    @app.post("/sessions/{token}/attempts", response_model=AttemptResponse)
    def submit_attempt(token: str, body: AttemptRequest):
        if body.session_token != token:
            raise SessionError("session token mismatch between path and body")
        output = service.evaluate_attempt(body)
        return output.response

    @app.post("/sessions/{token}/challenge", response_model=ChallengeAnswerResponse)
    def answer_challenge(token: str, body: ChallengeAnswerRequest):
        if body.session_token != token:
            raise SessionError("session token mismatch between path and body")
        return service.answer_challenge(token, body.answer)

    @app.get("/admin/users/{username}/profile", dependencies=[Depends(require_admin)])
    def admin_profile(username: str):
        return store.export_user(username)

    @app.get(
        "/admin/users/{username}/preview",
        response_model=PreviewResponse,
        dependencies=[Depends(require_admin)],
    )
    def admin_preview(username: str, steps: int = 5, at: str | None = None):
        when = datetime.fromisoformat(at) if at else None
        return service.preview(username, steps=min(max(steps, 1), 32), at=when)

    @app.get("/admin/stats", dependencies=[Depends(require_admin)])
    def admin_stats():
        from ..store.store import _global_stats_to_dict

        return {"stats": _global_stats_to_dict(store.global_stats)}

    return app
