import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pandas as pd

from cv2x_dcc.dal.run_outputs import RunOutputDAL
from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.schemas.run_config import RunConfig
from cv2x_dcc.services import metrics
from cv2x_dcc.services.collisions import colliding_grant_totals
from cv2x_dcc.services.presets import desk_scale, expand_preset, get_preset
from cv2x_dcc.services.simulation import SimulationResult, simulate

logger = logging.getLogger(__name__)


def seed_tables(result: SimulationResult) -> tuple[dict[str, pd.DataFrame], dict]:
    """Per-event tables of one seed and the summary row derived from them."""
    config = result.config
    scenario = config.scenario
    metrics_config = config.metrics
    outcomes = result.outcomes
    measured = outcomes[outcomes["subframe"] >= scenario.warmup]

    pdr = metrics.pdr_by_distance(measured, metrics_config.bin_width)
    gaps = metrics.ipg(measured, metrics_config.ipg_max_distance)
    sample_times = range(
        scenario.warmup + metrics_config.sample_period,
        scenario.sim_duration,
        metrics_config.sample_period,
    )
    aware = metrics.awareness(
        outcomes,
        result.positions,
        sample_times,
        len(result.vehicles),
        scenario.road_length,
        tuple(metrics_config.awareness_ring),
        metrics_config.cam_lifetime,
    )
    grants = pd.DataFrame(
        [
            {
                "grant_a": e.grant_a,
                "grant_b": e.grant_b,
                "owner_a": e.owner_a,
                "owner_b": e.owner_b,
                "first_subframe": e.first_subframe,
                "last_subframe": e.last_subframe,
                "recurrences": e.recurrences,
                "cause": e.cause.value,
            }
            for e in result.collisions
        ],
        columns=[
            "grant_a",
            "grant_b",
            "owner_a",
            "owner_b",
            "first_subframe",
            "last_subframe",
            "recurrences",
            "cause",
        ],
    )

    tables = {
        "pdr": pdr,
        "cbr": result.cbr_samples,
        "ipg": gaps,
        "awareness": aware,
        "grants": grants,
        "counters": result.counters,
    }
    if config.trace_grants:
        tables["grant_trace"] = pd.DataFrame(
            [
                {
                    "time_ms": e.time,
                    "vehicle": e.vehicle,
                    "grant_id": e.grant_id,
                    "event": e.event,
                    "rri": e.rri,
                    "rrc": e.rrc,
                    "subchannel_start": e.subchannel_start,
                    "subchannel_width": e.subchannel_width,
                    "selection_context": e.selection_context.value,
                    "tx_id": e.tx_id if e.tx_id is not None else -1,
                }
                for e in result.grant_events
            ]
        )
    if config.trace_channel and result.controller_trace is not None:
        tables["controller"] = result.controller_trace

    gamma = colliding_grant_totals(result.collisions)
    summary = metrics.summarize(
        config.label, result.seed, result.cbr_samples, pdr, gaps, aware, gamma
    )
    return tables, summary


def run_seed(config_data: dict, seed: int, root: str) -> dict:
    """Simulate one seed and write its tables; safe to call in a worker process."""
    config = RunConfig.model_validate(config_data)
    result = simulate(config, seed)
    tables, summary = seed_tables(result)
    RunOutputDAL(root).write_seed_tables(config.label, seed, tables)
    logger.info(
        "%s seed %d: CBR %.3f, PDR(100-500 m) %.3f, gamma %d",
        config.label,
        seed,
        summary["mean_cbr"],
        summary["pdr_100_500"],
        summary["gamma"],
    )
    return summary


class RunService:
    """Runs configurations and presets and writes their outputs."""

    def __init__(self, output_dal: RunOutputDAL, workers: int = 1):
        self.output_dal = output_dal
        self.workers = max(1, workers)

    def run(self, config: RunConfig) -> list[dict]:
        """Run every seed of one configuration.

        Returns:
            The per-seed summary rows, in seed order.

        Raises:
            OSError: the output directory cannot be written.
        """
        root = self.output_dal.ensure_root()
        self.output_dal.write_config(config)
        data = config.model_dump(mode="json")
        if self.workers > 1 and len(config.seeds) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = [
                    pool.submit(run_seed, data, seed, str(root))
                    for seed in config.seeds
                ]
                rows = [future.result() for future in futures]
        else:
            rows = [run_seed(data, seed, str(root)) for seed in config.seeds]
        self.output_dal.write_mechanism_summary(config.label, rows)
        return rows

    def run_many(self, configs: list[RunConfig]) -> pd.DataFrame:
        labels = [c.label for c in configs]
        duplicates = {label for label in labels if labels.count(label) > 1}
        if duplicates:
            raise ConfigurationError(
                f"mechanism labels must be unique, repeated: {sorted(duplicates)}",
                field="mechanism",
            )
        rows: list[dict] = []
        for config in configs:
            rows.extend(self.run(config))
        summary = metrics.aggregate_summaries(rows)
        path = self.output_dal.write_summary(summary)
        logger.info("Summary of %d mechanisms written to %s", len(configs), path)
        return summary

    def run_preset(
        self,
        name: str,
        base: RunConfig | None = None,
        desk: bool = False,
        seeds: list[int] | None = None,
    ) -> pd.DataFrame:
        preset = get_preset(name)
        base = base or RunConfig()
        if desk:
            base = desk_scale(base, preset.desk_vehicles)
        if seeds:
            base = base.model_copy(update={"seeds": list(seeds)})
        return self.run_many(expand_preset(preset, base))


def output_root(path: str | Path | None, config: RunConfig) -> Path:
    return Path(path) if path is not None else Path(config.output_dir)
