import logging
import math
from dataclasses import dataclass
from typing import Callable

import pandas as pd

from cv2x_dcc.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

NO_DCC = "NoDcc"
REACTIVE = "DCC Reactive"
REACTIVE_GB = "DCC Reactive (GB)"
ADAPTIVE_68 = "DCC Adaptive (68%)"
ADAPTIVE_20 = "DCC Adaptive (20%)"
DROP_AGGRESSIVE = "Packet Dropping (Aggressive)"
RRI_LOOKUP = "RRI Lookup"
RRI_CR_LIMIT_AGGRESSIVE = "RRI CR Limit (Aggressive)"
RRI_CR_LIMIT_3GPP = "RRI CR Limit (3GPP)"

LOW_LOAD_SET = [
    NO_DCC,
    ADAPTIVE_20,
    REACTIVE,
    DROP_AGGRESSIVE,
    RRI_LOOKUP,
    RRI_CR_LIMIT_AGGRESSIVE,
]

# share of seeds a per-seed ordering must hold in
SEED_MAJORITY = 0.8


@dataclass(frozen=True)
class TrendCheck:
    """Outcome of one expected ordering; `passed` is None when it does not apply."""

    name: str
    passed: bool | None
    detail: str


def _series(per_seed: pd.DataFrame, mechanism: str, column: str) -> pd.Series:
    rows = per_seed[per_seed["mechanism"] == mechanism]
    if rows.empty:
        raise ConfigurationError(f"no rows for {mechanism!r}", field="mechanism")
    return rows.set_index("seed")[column].astype(float)


def _mean(per_seed: pd.DataFrame, mechanism: str, column: str) -> float:
    return float(_series(per_seed, mechanism, column).mean())


def _seed_wins(better: pd.Series, worse: pd.Series) -> tuple[int, int]:
    both = pd.concat([better, worse], axis=1, join="inner").dropna()
    return int((both.iloc[:, 0] > both.iloc[:, 1]).sum()), len(both)


def _majority(wins: int, seeds: int) -> bool:
    return seeds > 0 and wins >= math.ceil(SEED_MAJORITY * seeds)


def grant_breaking_hurts_reactive(per_seed: pd.DataFrame) -> TrendCheck:
    wins, seeds = _seed_wins(
        _series(per_seed, NO_DCC, "pdr_100_500"),
        _series(per_seed, REACTIVE_GB, "pdr_100_500"),
    )
    return TrendCheck(
        "grant breaking lowers reactive PDR at 100-500 m",
        _majority(wins, seeds),
        f"below NoDcc in {wins}/{seeds} seeds",
    )


def colliding_grant_ranking(per_seed: pd.DataFrame) -> TrendCheck:
    order = [
        RRI_CR_LIMIT_AGGRESSIVE,
        RRI_LOOKUP,
        DROP_AGGRESSIVE,
        ADAPTIVE_20,
        REACTIVE,
    ]
    gamma = [_mean(per_seed, m, "gamma") for m in order]
    passed = gamma[0] < gamma[1] < gamma[2] <= gamma[3] < gamma[4]
    detail = " / ".join(f"{m} {g:.1f}" for m, g in zip(order, gamma))
    return TrendCheck("colliding grants rank by mechanism", passed, detail)


def crlimit_beats_adaptive_far_out(
    per_seed: pd.DataFrame, margin: float = 0.03
) -> TrendCheck:
    crlimit = _mean(per_seed, RRI_CR_LIMIT_AGGRESSIVE, "pdr_200_500")
    adaptive = _mean(per_seed, ADAPTIVE_20, "pdr_200_500")
    return TrendCheck(
        f"RRI CR limit PDR at 200-500 m at least {margin:.2f} above adaptive",
        crlimit - adaptive >= margin,
        f"{crlimit:.3f} vs {adaptive:.3f}",
    )


def crlimit_wins_when_congested(per_seed: pd.DataFrame) -> TrendCheck:
    crlimit = _series(per_seed, RRI_CR_LIMIT_3GPP, "pdr_200_500")
    over_adaptive = _seed_wins(crlimit, _series(per_seed, ADAPTIVE_68, "pdr_200_500"))
    over_none = _seed_wins(crlimit, _series(per_seed, NO_DCC, "pdr_200_500"))
    return TrendCheck(
        "RRI CR limit PDR at 200-500 m above adaptive and no DCC",
        _majority(*over_adaptive) and _majority(*over_none),
        f"above adaptive in {over_adaptive[0]}/{over_adaptive[1]} seeds, "
        f"above NoDcc in {over_none[0]}/{over_none[1]} seeds",
    )


def adaptive_holds_target(
    per_seed: pd.DataFrame, target: float = 0.68, tolerance: float = 0.05
) -> TrendCheck:
    name = f"adaptive DCC holds the CBR within {tolerance:.2f} of {target:.2f}"
    uncontrolled = _mean(per_seed, NO_DCC, "mean_cbr")
    if not uncontrolled > target:
        return TrendCheck(name, None, f"uncontrolled CBR {uncontrolled:.3f}")
    cbr = _mean(per_seed, ADAPTIVE_68, "mean_cbr")
    return TrendCheck(
        name,
        abs(cbr - target) <= tolerance,
        f"{cbr:.3f} with {uncontrolled:.3f} uncontrolled",
    )


def aggressive_dropping_calibrated(
    per_seed: pd.DataFrame, low: float = 0.15, high: float = 0.30
) -> TrendCheck:
    cbr = _mean(per_seed, DROP_AGGRESSIVE, "mean_cbr")
    return TrendCheck(
        f"aggressive dropping settles the CBR in [{low:.2f}, {high:.2f}]",
        low <= cbr <= high,
        f"{cbr:.3f}",
    )


def awareness_ranking(per_seed: pd.DataFrame, floor: float = 0.95) -> TrendCheck:
    aware = {m: _mean(per_seed, m, "awareness_mean") for m in LOW_LOAD_SET}
    best = max(aware, key=aware.get)
    worst = min(aware, key=aware.get)
    crlimit = aware[RRI_CR_LIMIT_AGGRESSIVE]
    return TrendCheck(
        "RRI CR limit best aware, reactive DCC least",
        best == RRI_CR_LIMIT_AGGRESSIVE and worst == REACTIVE and crlimit >= floor,
        f"best {best} {aware[best]:.3f}, worst {worst} {aware[worst]:.3f}",
    )


def ipg_ordering(per_seed: pd.DataFrame) -> TrendCheck:
    order = [NO_DCC, RRI_CR_LIMIT_3GPP, ADAPTIVE_68]
    gaps = [_mean(per_seed, m, "mean_ipg") for m in order]
    return TrendCheck(
        "inter-packet gap grows from no DCC to RRI CR limit to adaptive",
        gaps[0] < gaps[1] < gaps[2],
        " / ".join(f"{m} {g:.1f} ms" for m, g in zip(order, gaps)),
    )


LOW_LOAD_CHECKS = [
    colliding_grant_ranking,
    crlimit_beats_adaptive_far_out,
    awareness_ranking,
]
CONGESTED_CHECKS = [crlimit_wins_when_congested, adaptive_holds_target, ipg_ordering]

PRESET_CHECKS: dict[str, list[Callable[[pd.DataFrame], TrendCheck]]] = {
    "fig3": [grant_breaking_hurts_reactive],
    "fig5": [aggressive_dropping_calibrated],
    "cbr20": LOW_LOAD_CHECKS,
    "cbr60": CONGESTED_CHECKS,
    "table4": LOW_LOAD_CHECKS + CONGESTED_CHECKS,
    "table6": LOW_LOAD_CHECKS + CONGESTED_CHECKS,
}


def check_trends(preset: str, per_seed: pd.DataFrame) -> list[TrendCheck]:
    """Evaluate the expected orderings of a preset on its per-seed summary rows.

    A check whose mechanisms are missing from `per_seed` is reported as not
    applicable.
    """
    results = []
    for check in PRESET_CHECKS.get(preset, []):
        try:
            result = check(per_seed)
        except ConfigurationError as e:
            result = TrendCheck(check.__name__, None, e.reason)
        logger.debug("%s: %s (%s)", preset, result.name, result.detail)
        results.append(result)
    return results
