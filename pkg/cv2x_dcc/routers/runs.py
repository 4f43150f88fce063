import logging
import math
from pathlib import Path
from typing import Annotated

from fastapi import APIRouter, Depends, HTTPException

from cv2x_dcc.config import settings
from cv2x_dcc.dal.run_outputs import RunOutputDAL
from cv2x_dcc.dependencies import get_run_service
from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.schemas.run_config import RunConfig, parse_config
from cv2x_dcc.schemas.runs import RunRequest, RunResponse, SummaryRow
from cv2x_dcc.services.presets import PRESETS, desk_scale
from cv2x_dcc.services.run_service import RunService

router = APIRouter(prefix="/runs", tags=["Runs"])

logger = logging.getLogger(__name__)


def _clean(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _output_root(requested: str) -> Path:
    """Resolve a requested output directory under the configured one."""
    root = Path(settings.output_dir).resolve()
    target = (root / requested).resolve()
    if not target.is_relative_to(root):
        raise ConfigurationError(f"must stay inside {root}", field="output_dir")
    return target


@router.post("/", response_model=RunResponse)
def create_run(
    request: RunRequest,
    run_service: Annotated[RunService, Depends(get_run_service)],
):
    if request.preset is not None and request.preset not in PRESETS:
        raise HTTPException(
            status_code=404, detail=f"Unknown preset {request.preset!r}"
        )
    try:
        if request.output_dir is not None:
            run_service.output_dal = RunOutputDAL(_output_root(request.output_dir))
        base = parse_config(request.config) if request.config else RunConfig()
        if request.preset is not None:
            summary = run_service.run_preset(
                request.preset, base, desk=request.desk_scale, seeds=request.seeds
            )
        else:
            if request.desk_scale:
                base = desk_scale(base)
            if request.seeds:
                base = base.model_copy(update={"seeds": list(request.seeds)})
            summary = run_service.run_many([base])
    except ConfigurationError as e:
        raise HTTPException(status_code=422, detail=str(e))

    rows = [
        SummaryRow(**{k: _clean(v) for k, v in row.items()})
        for row in summary.to_dict(orient="records")
    ]
    return RunResponse(output_dir=str(run_service.output_dal.root), summary=rows)
