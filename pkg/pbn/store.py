import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from .harness import ExperimentConfig, SummaryRow


class JobStatus(str, Enum):
    PENDING = "pending"
    READY = "ready"
    FAILED = "failed"


###################### EXPERIMENT JOB
@dataclass
class ExperimentJob:
    config: ExperimentConfig
    id: uuid.UUID = field(default_factory=uuid.uuid4)
    status: JobStatus = JobStatus.PENDING
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    rows: list[SummaryRow] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def experiment(self) -> str:
        return self.config.experiment.value


class ExperimentStore:
    """In-memory job registry shared by the request handlers and background tasks."""

    def __init__(self):
        self._jobs: dict[uuid.UUID, ExperimentJob] = {}
        self._lock = threading.Lock()

    def add(self, config: ExperimentConfig) -> ExperimentJob:
        job = ExperimentJob(config=config)
        with self._lock:
            self._jobs[job.id] = job
        return job

    def get(self, job_id: uuid.UUID) -> Optional[ExperimentJob]:
        with self._lock:
            return self._jobs.get(job_id)

    def all(self) -> list[ExperimentJob]:
        with self._lock:
            return sorted(self._jobs.values(), key=lambda j: j.created_at)

    def finish(self, job_id: uuid.UUID, rows: list[SummaryRow]) -> None:
        with self._lock:
            job = self._jobs.get(job_id)
            if job:
                job.status, job.rows = JobStatus.READY, rows

    def fail(self, job_id: uuid.UUID, error: str) -> None:
        with self._lock:
            job = self._jobs.get(job_id)
            if job:
                job.status, job.error = JobStatus.FAILED, error

    def delete(self, job_id: uuid.UUID) -> bool:
        with self._lock:
            return self._jobs.pop(job_id, None) is not None


_store = ExperimentStore()


# Dependency
def get_store():
    yield _store
