"""
Process logging setup and the per-run log file.

- text format: "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
- json format: one orjson-serialized object per line
"""

import logging
import subprocess
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import UTC, datetime
from pathlib import Path

import orjson

from brinkhom import __version__
from brinkhom.config import settings

TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
RUN_LOG = "run.log"


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": datetime.fromtimestamp(record.created, tz=UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return orjson.dumps(payload).decode()


def make_formatter(fmt: str | None = None) -> logging.Formatter:
    if (fmt or settings.log_format) == "json":
        return JsonFormatter()
    return logging.Formatter(TEXT_FORMAT)


def configure_logging(level: str | int | None = None, fmt: str | None = None) -> None:
    level = level if level is not None else settings.log_level
    if isinstance(level, str):
        level = getattr(logging, level.upper())
    handler = logging.StreamHandler()
    handler.setFormatter(make_formatter(fmt))
    logging.basicConfig(level=level, handlers=[handler], force=True)


@contextmanager
def run_log(directory: str | Path) -> Iterator[Path]:
    """Mirror every record of the run into <directory>/run.log."""
    path = Path(directory) / RUN_LOG
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(make_formatter())
    root = logging.getLogger()
    root.addHandler(handler)
    try:
        yield path
    finally:
        root.removeHandler(handler)
        handler.close()


def version_string() -> str:
    """git describe of the source tree when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    described = out.stdout.strip()
    return f"{__version__}+{described}" if described else __version__
