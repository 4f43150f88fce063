import pandas as pd
import pytest

from cv2x_dcc.dal.run_outputs import RunOutputDAL
from cv2x_dcc.schemas.run_config import RunConfig
from cv2x_dcc.services.presets import desk_scale, expand_preset, get_preset
from cv2x_dcc.services.run_service import RunService
from cv2x_dcc.services.trends import (
    ADAPTIVE_68,
    DROP_AGGRESSIVE,
    NO_DCC,
    REACTIVE_GB,
    adaptive_holds_target,
    aggressive_dropping_calibrated,
    grant_breaking_hurts_reactive,
)

pytestmark = pytest.mark.slow


def _desk_run(
    root, preset: str, mechanisms: list[str], seeds: list[int] | None = None
) -> pd.DataFrame:
    experiment = get_preset(preset)
    base = desk_scale(RunConfig(), experiment.desk_vehicles)
    if seeds:
        base = base.model_copy(update={"seeds": seeds})
    configs = [c for c in expand_preset(experiment, base) if c.label in mechanisms]
    dal = RunOutputDAL(root)
    RunService(dal).run_many(configs)
    return dal.read_seed_summaries(mechanisms)


def test_grant_breaking_lowers_reactive_pdr(tmp_path):
    per_seed = _desk_run(tmp_path, "fig3", [NO_DCC, REACTIVE_GB])

    check = grant_breaking_hurts_reactive(per_seed)

    assert check.passed, check.detail


def test_aggressive_dropping_settles_near_a_fifth(tmp_path):
    per_seed = _desk_run(tmp_path, "fig5", [DROP_AGGRESSIVE])

    check = aggressive_dropping_calibrated(per_seed)

    assert check.passed, check.detail


def test_adaptive_holds_its_target_on_the_congested_road(tmp_path):
    per_seed = _desk_run(tmp_path, "cbr60", [NO_DCC, ADAPTIVE_68], seeds=[1, 2])

    check = adaptive_holds_target(per_seed)

    assert check.passed is True, check.detail
