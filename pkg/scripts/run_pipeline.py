"""Desk-scale trend report over the comparison presets.

Runs each preset at desk scale and checks the orderings the mechanisms are
expected to show. Exits with status 1 when any applicable check fails.
"""

import cv2x_dcc.silence_logs  # isort:skip  # noqa
import argparse
import logging
import sys
from pathlib import Path

import pandas as pd

from cv2x_dcc.config import settings
from cv2x_dcc.dal.run_outputs import RunOutputDAL
from cv2x_dcc.services.run_service import RunService
from cv2x_dcc.services.trends import TrendCheck, check_trends

logging.basicConfig(
    level=settings.log_level,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)
logger = logging.getLogger("run_pipeline")

DEFAULT_PRESETS = ["fig3", "fig5", "cbr20", "cbr60"]
STATUS = {True: "ok", False: "MISS", None: "n/a"}


def report(name: str, summary: pd.DataFrame, dal: RunOutputDAL) -> list[TrendCheck]:
    per_seed = dal.read_seed_summaries(list(summary["mechanism"]))
    checks = check_trends(name, per_seed)
    for check in checks:
        logger.info("[%s] %s (%s)", STATUS[check.passed], check.name, check.detail)
    for row in summary.to_dict(orient="records"):
        logger.info(
            "%s | %-28s CBR %.3f PDR %.3f IPG %.1f awareness %.3f gamma %.1f",
            name,
            row["mechanism"],
            row["mean_cbr"],
            row["pdr_100_500"],
            row["mean_ipg"],
            row["awareness_mean"],
            row["gamma"],
        )
    return checks


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out", type=Path, default=Path(settings.output_dir) / "pipeline"
    )
    parser.add_argument("--workers", type=int, default=settings.workers)
    args = parser.parse_args()

    presets = settings.extra_config.get("pipeline", {}).get("presets", DEFAULT_PRESETS)
    failed = []
    for name in presets:
        dal = RunOutputDAL(args.out / name)
        summary = RunService(dal, workers=args.workers).run_preset(name, desk=True)
        checks = report(name, summary, dal)
        failed.extend(f"{name}: {c.name}" for c in checks if c.passed is False)

    if failed:
        logger.warning("%d trend checks failed: %s", len(failed), "; ".join(failed))
        return 1
    logger.info("All applicable trend checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
