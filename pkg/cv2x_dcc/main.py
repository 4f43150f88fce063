import cv2x_dcc.silence_logs  # isort:skip  # noqa
import logging

from fastapi import FastAPI

from cv2x_dcc.config import settings
from cv2x_dcc.routers import presets, runs

# Configure root logger
logging.basicConfig(
    level=settings.log_level,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)
logger = logging.getLogger(__name__)

app = FastAPI(title="C-V2X Congestion Control Simulator", version="0.1.0")

app.include_router(presets.router)
app.include_router(runs.router)


@app.get("/")
async def root():
    return {"message": "C-V2X congestion control simulator running"}
