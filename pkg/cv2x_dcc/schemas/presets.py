from typing import Any

from pydantic import BaseModel, Field


class ExperimentPreset(BaseModel):
    """A named experiment: a list of configuration deltas run side by side."""

    name: str
    description: str
    variants: list[dict[str, Any]] = Field(default_factory=list)
    # Vehicles on the road at desk scale; None keeps the configured density
    desk_vehicles: int | None = Field(100, ge=1)


class PresetInfo(BaseModel):
    name: str
    description: str
    mechanisms: list[str]
