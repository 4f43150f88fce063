import cv2x_dcc.silence_logs  # isort:skip  # noqa
import argparse
import logging
import sys
from pathlib import Path

from cv2x_dcc.config import settings
from cv2x_dcc.dal.run_outputs import RunOutputDAL
from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.schemas.run_config import RunConfig, load_config
from cv2x_dcc.services.presets import apply_delta, desk_scale, list_presets
from cv2x_dcc.services.run_service import RunService, output_root

logger = logging.getLogger("cv2x_dcc")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _seeds(value: str) -> list[int]:
    """Parse `1,2,3` or a range `1-5`."""
    try:
        if "-" in value and "," not in value:
            low, high = (int(part) for part in value.split("-", 1))
            return list(range(low, high + 1))
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed list {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cv2x-dcc",
        description="Simulate congestion control over the C-V2X Mode 4 SB-SPS MAC.",
    )
    parser.add_argument("--config", type=Path, help="YAML run configuration")
    parser.add_argument("--preset", help="named experiment (see --list-presets)")
    parser.add_argument("--seeds", type=_seeds, help="e.g. 1,2,3 or 1-5")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--trace-grants", action="store_true", help="write grant_trace.csv per seed"
    )
    parser.add_argument(
        "--trace-channel", action="store_true", help="write controller.csv per seed"
    )
    parser.add_argument(
        "--desk-scale",
        action="store_true",
        help="20 s, seeds 1-5 and, outside the congested presets, 100 vehicles",
    )
    parser.add_argument("--workers", type=int, default=settings.workers)
    parser.add_argument("--log-level", default=settings.log_level)
    parser.add_argument("--list-presets", action="store_true")
    return parser


def _base_config(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        return load_config(args.config)
    defaults = settings.extra_config.get("run")
    if defaults:
        return apply_delta(RunConfig(), defaults)
    return RunConfig()


def run(args: argparse.Namespace) -> int:
    if args.list_presets:
        for preset in list_presets():
            print(f"{preset.name:8s} {preset.description}")
            print(f"{'':8s} {', '.join(preset.mechanisms)}")
        return EXIT_OK

    base = _base_config(args)
    overrides = {}
    if args.trace_grants:
        overrides["trace_grants"] = True
    if args.trace_channel:
        overrides["trace_channel"] = True
    if overrides:
        base = apply_delta(base, overrides)

    if args.out is None and args.config is None:
        args.out = Path(settings.output_dir)
    root = output_root(args.out, base)
    service = RunService(RunOutputDAL(root), workers=args.workers)

    if args.preset:
        summary = service.run_preset(
            args.preset, base, desk=args.desk_scale, seeds=args.seeds
        )
    else:
        if args.desk_scale:
            base = desk_scale(base)
        if args.seeds:
            base = apply_delta(base, {"seeds": args.seeds})
        summary = service.run_many([base])

    for row in summary.to_dict(orient="records"):
        logger.info(
            "%-30s CBR %.3f  PDR(100-500 m) %.3f  IPG %.1f ms  "
            "awareness %.3f  gamma %.1f (MT %.1f, NF %.1f, TSim %.1f)",
            row["mechanism"],
            row["mean_cbr"],
            row["pdr_100_500"],
            row["mean_ipg"],
            row["awareness_mean"],
            row["gamma"],
            row["gamma_mt"],
            row["gamma_nf"],
            row["gamma_tsim"],
        )
    logger.info("Outputs in %s", root)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=str(args.log_level).upper(),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        return run(args)
    except ConfigurationError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except Exception as e:
        logger.error("Run failed: %s", e, exc_info=logger.isEnabledFor(logging.DEBUG))
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
