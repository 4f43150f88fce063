from fastapi import Depends

from cv2x_dcc.config import settings
from cv2x_dcc.dal.run_outputs import RunOutputDAL
from cv2x_dcc.services.run_service import RunService


async def get_output_dal() -> RunOutputDAL:
    return RunOutputDAL(settings.output_dir)


async def get_run_service(
    dal: RunOutputDAL = Depends(get_output_dal),
) -> RunService:
    return RunService(dal, workers=settings.workers)
