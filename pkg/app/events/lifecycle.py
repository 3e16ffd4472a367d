import time
import uuid
from contextlib import contextmanager
from typing import Iterator

import structlog

from app.utils.config import settings
from app.utils.logger import configure_logging

log = structlog.get_logger()


def startup_tasks() -> None:
    """Execute startup tasks."""
    log.info("Command startup", app=settings.APP_NAME, debug=settings.DEBUG)


def shutdown_tasks(duration_s: float) -> None:
    """Execute shutdown tasks."""
    log.info("Command shutdown", duration_s=round(duration_s, 6))


@contextmanager
def lifespan(command: str) -> Iterator[str]:
    """Handle startup and shutdown of one CLI command; yields the run id."""
    configure_logging()
    run_id = uuid.uuid4().hex[:12]
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(command=command, run_id=run_id)
    started = time.perf_counter()
    startup_tasks()
    try:
        yield run_id
    finally:
        shutdown_tasks(time.perf_counter() - started)
        structlog.contextvars.clear_contextvars()
