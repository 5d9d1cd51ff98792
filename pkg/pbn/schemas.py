from datetime import datetime
from typing import List, Optional
from uuid import UUID

from pydantic import BaseModel, ConfigDict

from .harness import SummaryRow
from .store import JobStatus


###################### EXPERIMENT SCHEMAS
class ExperimentIdsResponse(BaseModel):
    experiments: List[str]


class JobResponse(BaseModel):
    id: UUID
    experiment: str
    status: JobStatus
    created_at: datetime
    error: Optional[str] = None
    rows: List[SummaryRow] = []

    model_config = ConfigDict(from_attributes=True)
