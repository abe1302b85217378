"""Capture solver stage timings for the run manifest."""

from __future__ import annotations

import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any


@dataclass
class TraceStep:
    t: int
    ts: float
    stage: str
    detail: dict[str, Any] = field(default_factory=dict)


class StageTrace:
    def __init__(self) -> None:
        self.steps: list[TraceStep] = []
        self._counter = 0
        self._start = time.monotonic()

    def record(self, stage: str, **detail: Any) -> None:
        self.steps.append(
            TraceStep(
                t=self._counter,
                ts=round(time.monotonic() - self._start, 3),
                stage=stage,
                detail=detail,
            )
        )
        self._counter += 1

    @contextmanager
    def stage(self, name: str, **detail: Any) -> Iterator[dict[str, Any]]:
        """Time a block; the yielded dict may be filled with extra detail."""
        started = time.monotonic()
        extra: dict[str, Any] = {}
        yield extra
        self.record(name, seconds=round(time.monotonic() - started, 3), **detail, **extra)

    def elapsed(self) -> float:
        return time.monotonic() - self._start

    def to_list(self) -> list[dict]:
        return [{"t": s.t, "ts": s.ts, "stage": s.stage, "detail": s.detail} for s in self.steps]
