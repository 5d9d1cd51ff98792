import logging
import uuid

from fastapi import APIRouter, BackgroundTasks, Depends, HTTPException, Query, Response, status
from fastapi.responses import PlainTextResponse

from .. import schemas
from ..exceptions import PbnError
from ..harness import ExperimentConfig, ExperimentId, OutputFormat, emit_table, phi_sensitivity, run_experiment
from ..store import ExperimentStore, JobStatus, get_store

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/experiments", tags=["Experiments"])


def run_experiment_background(store: ExperimentStore, job_id: uuid.UUID):
    """
    Background task: run the experiment and store its rows or the failure.
    """
    job = store.get(job_id)
    if job is None:
        return
    try:
        config = job.config
        rows = phi_sensitivity(config, config.phi_factors) if config.is_phi_sensitivity else run_experiment(config)
        store.finish(job_id, rows)
    except PbnError as e:
        store.fail(job_id, str(e))
        logger.error("experiment %s failed: %s", job_id, e)
    except Exception as e:
        store.fail(job_id, f"{type(e).__name__}: {e}")
        logger.exception("experiment %s crashed", job_id)


def get_job_or_404(store: ExperimentStore, job_id: uuid.UUID):
    job = store.get(job_id)
    if not job:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail="Experiment not found")
    return job


###################### experiment ids { READ } #####################
@router.get("/ids", response_model=schemas.ExperimentIdsResponse)
def list_experiment_ids():
    return {"experiments": [e.value for e in ExperimentId]}


###################### start experiment { CREATE } #####################
@router.post("", status_code=status.HTTP_202_ACCEPTED, response_model=schemas.JobResponse)
def create_experiment(
    config: ExperimentConfig,
    background_tasks: BackgroundTasks,
    store: ExperimentStore = Depends(get_store),
):
    if config.experiment is ExperimentId.WIRELESS and config.data_path is None:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail="The wireless benchmark needs data_path",
        )
    job = store.add(config)
    background_tasks.add_task(run_experiment_background, store, job.id)
    return job


###################### all experiments { READ } #####################
@router.get("", response_model=list[schemas.JobResponse])
def list_experiments(store: ExperimentStore = Depends(get_store)):
    return store.all()


###################### experiment status { READ } #####################
@router.get("/{job_id}", response_model=schemas.JobResponse)
def get_experiment(job_id: uuid.UUID, store: ExperimentStore = Depends(get_store)):
    return get_job_or_404(store, job_id)


###################### experiment table { READ } #####################
@router.get("/{job_id}/table", response_class=PlainTextResponse)
def get_experiment_table(
    job_id: uuid.UUID,
    fmt: OutputFormat = Query(OutputFormat.CSV, alias="format"),
    store: ExperimentStore = Depends(get_store),
):
    job = get_job_or_404(store, job_id)
    if job.status is not JobStatus.READY:
        raise HTTPException(
            status_code=status.HTTP_409_CONFLICT,
            detail=f"Experiment is {job.status.value}",
        )
    try:
        return emit_table(job.rows, fmt)
    except PbnError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))


###################### delete experiment { DELETE } #####################
@router.delete("/{job_id}", status_code=status.HTTP_204_NO_CONTENT)
def delete_experiment(job_id: uuid.UUID, store: ExperimentStore = Depends(get_store)):
    get_job_or_404(store, job_id)
    store.delete(job_id)
    return Response(status_code=status.HTTP_204_NO_CONTENT)
