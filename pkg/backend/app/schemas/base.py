from typing import Any, Generic, List, Optional, TypeVar
from pydantic import BaseModel

DataT = TypeVar("DataT")

class ResponseWrapper(BaseModel, Generic[DataT]):
    data: DataT
    warnings: List[str] = []

class JobStatus(BaseModel):
    job_id: str
    status: str
    progress: int = 0
    current_stage: Optional[str] = None
    stages: dict = {}
    logs: List[str] = []
    report: Optional[Any] = None
