"""HTTP serving layer: FastAPI app, request/response models, session store."""

from .app import ServiceConfig, create_app
from .store import Session, SessionStore

__all__ = ["ServiceConfig", "create_app", "Session", "SessionStore"]
