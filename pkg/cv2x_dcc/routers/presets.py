from fastapi import APIRouter

from cv2x_dcc.schemas.presets import PresetInfo
from cv2x_dcc.services.presets import list_presets

router = APIRouter(prefix="/presets", tags=["Presets"])


@router.get("/", response_model=list[PresetInfo])
async def get_presets():
    return list_presets()
