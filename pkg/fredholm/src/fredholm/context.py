from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from .tracing import StageTrace


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="FREDHOLM_", env_file=".env", extra="ignore")

    threads: int = Field(default=1, ge=1)
    log_level: str = "INFO"
    out_dir: Path = Path("out")


@dataclass
class SolverContext:
    settings: Settings
    trace: StageTrace = field(default_factory=StageTrace)
    executor: ThreadPoolExecutor | None = None

    @classmethod
    def create(cls, settings: Settings | None = None) -> SolverContext:
        settings = settings or Settings()
        executor = ThreadPoolExecutor(max_workers=settings.threads) if settings.threads > 1 else None
        return cls(settings=settings, executor=executor)

    def fresh(self) -> SolverContext:
        """New trace, same settings and executor (one per solve in a convergence sweep)."""
        return SolverContext(settings=self.settings, executor=self.executor)

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None

    def __enter__(self) -> SolverContext:
        return self

    def __exit__(self, *exc) -> None:
        self.close()
