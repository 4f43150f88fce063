import pytest

from cv2x_dcc.schemas.run_config import RunConfig


def small_config(**overrides) -> RunConfig:
    """A few dozen vehicles for a few simulated seconds."""
    data = {
        "scenario": {
            "road_length": 300,
            "lanes_per_direction": 1,
            "density": 0.1,
            "sim_duration": 3000,
            "warmup": 500,
        },
        "metrics": {"verify_meters": True},
        "seeds": [3],
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return RunConfig.model_validate(data)


@pytest.fixture
def small():
    return small_config
