"""Structured log lines: `ts level query_id event k=v ...` (UTC, ms precision)."""

from __future__ import annotations

import logging
import time

LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING, "error": logging.ERROR}


class _UtcFormatter(logging.Formatter):
    def formatTime(self, record, datefmt=None):
        t = time.gmtime(record.created)
        return time.strftime("%Y-%m-%dT%H:%M:%S", t) + f".{int(record.msecs):03d}Z"


def configure(level: str = "info"):
    logger = logging.getLogger("polygate")
    logger.setLevel(LEVELS.get(level, logging.INFO))
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(_UtcFormatter("%(asctime)s %(levelname)s %(message)s"))
        logger.addHandler(handler)
    return logger


def _fmt(v) -> str:
    s = str(v)
    if " " in s or '"' in s or s == "":
        return '"' + s.replace('"', '\\"') + '"'
    return s


def log_event(logger, level: int, event: str, query_id: str = "-", **kv):
    parts = [query_id, event] + [f"{k}={_fmt(v)}" for k, v in kv.items()]
    logger.log(level, " ".join(parts))
