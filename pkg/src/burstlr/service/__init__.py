"""HTTP service exposing detection, calibration, simulation, validation,
and power studies.  Run with e.g. ``uvicorn burstlr.service:app``."""

from .app import app, create_app

__all__ = ["app", "create_app"]
