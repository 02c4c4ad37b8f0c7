import asyncio
import logging
import uuid
from typing import Set

from fastapi import APIRouter, HTTPException

from app.core.exceptions import InvalidArgumentError
from app.schemas.base import JobStatus, ResponseWrapper
from app.services.orchestrator import orchestrator

router = APIRouter()
logger = logging.getLogger(__name__)

# Tasks of running jobs; each removes itself when done
running_jobs: Set[asyncio.Task] = set()


@router.get("/status/{job_id}", response_model=JobStatus)
async def get_reproduction_status(job_id: str):
    return await orchestrator.get_status(job_id)


@router.post("/{target}", response_model=ResponseWrapper[JobStatus])
async def start_reproduction(target: str, scale: str = "desk"):
    try:
        plan = orchestrator.plan(target, scale)
    except InvalidArgumentError as e:
        raise HTTPException(status_code=400, detail=str(e))

    job_id = f"{target}-{scale}-{uuid.uuid4().hex[:8]}"
    # Background task; failures are recorded in the job status
    task = asyncio.create_task(_run(job_id, target, scale, plan))
    running_jobs.add(task)
    task.add_done_callback(running_jobs.discard)
    status = JobStatus(job_id=job_id, status="queued")
    return ResponseWrapper(data=status, warnings=[f"{len(plan.cases)} simulations scheduled"])


async def _run(job_id, target, scale, plan):
    try:
        await orchestrator.reproduce(job_id, target, scale, plan=plan)
    except Exception as e:
        logger.warning(f"Reproduction job {job_id} ended with an error: {e}")
