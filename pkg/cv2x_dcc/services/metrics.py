import logging
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd

from cv2x_dcc.helpers.scenario import distance_matrix
from cv2x_dcc.models.records import GrantEvent, RxOutcome

logger = logging.getLogger(__name__)

OUTCOME_COLUMNS = [
    "tx_id",
    "source",
    "receiver",
    "subframe",
    "distance",
    "decoded",
    "failure_cause",
]


def outcomes_frame(records: Iterable[RxOutcome]) -> pd.DataFrame:
    rows = [
        (
            r.tx_id,
            r.source,
            r.receiver,
            r.subframe,
            r.distance,
            r.decoded,
            r.failure_cause.value if r.failure_cause is not None else None,
        )
        for r in records
    ]
    return pd.DataFrame(rows, columns=OUTCOME_COLUMNS)


def pdr_by_distance(outcomes: pd.DataFrame, bin_width: float = 50.0) -> pd.DataFrame:
    """Packet delivery ratio per distance bin.

    Bins are [k * bin_width, (k + 1) * bin_width); bins without receptions are
    left out.
    """
    columns = ["bin_lo", "bin_hi", "decoded", "total", "pdr"]
    if outcomes.empty:
        return pd.DataFrame(columns=columns)
    bins = np.floor(outcomes["distance"].to_numpy() / bin_width).astype(int)
    grouped = (
        outcomes.assign(bin=bins)
        .groupby("bin", sort=True)["decoded"]
        .agg(decoded="sum", total="count")
        .reset_index()
    )
    grouped["decoded"] = grouped["decoded"].astype(int)
    grouped["bin_lo"] = grouped["bin"] * bin_width
    grouped["bin_hi"] = grouped["bin_lo"] + bin_width
    grouped["pdr"] = grouped["decoded"] / grouped["total"]
    return grouped[columns]


def ipg(outcomes: pd.DataFrame, max_distance: float | None = None) -> pd.DataFrame:
    """Gaps (ms) between consecutive decoded packets of each (receiver, source) pair."""
    decoded = outcomes[outcomes["decoded"].astype(bool)]
    if max_distance is not None:
        decoded = decoded[decoded["distance"] <= max_distance]
    decoded = decoded.sort_values(["receiver", "source", "subframe"], kind="stable")
    gaps = decoded.groupby(["receiver", "source"], sort=False)["subframe"].diff()
    frame = pd.DataFrame(
        {
            "receiver": decoded["receiver"],
            "source": decoded["source"],
            "gap_ms": gaps,
        }
    ).dropna()
    frame["gap_ms"] = frame["gap_ms"].astype(int)
    return frame.reset_index(drop=True)


def ipg_cdf(gaps: pd.Series | Sequence[float]) -> pd.DataFrame:
    values = np.sort(np.asarray(gaps, dtype=float))
    if values.size == 0:
        return pd.DataFrame(columns=["gap_ms", "cdf"])
    unique, counts = np.unique(values, return_counts=True)
    return pd.DataFrame({"gap_ms": unique, "cdf": np.cumsum(counts) / values.size})


def awareness(
    outcomes: pd.DataFrame,
    positions: Callable[[int], tuple[np.ndarray, np.ndarray]],
    sample_times: Iterable[int],
    n_vehicles: int,
    road_length: float,
    ring: tuple[float, float] = (200.0, 300.0),
    lifetime: int = 1000,
) -> pd.DataFrame:
    """Fraction of ring neighbours each vehicle heard from within `lifetime`.

    Args:
        outcomes: Columnar reception log; every decoded row counts, warm-up
            included, so early samples see a filled history.
        positions: Returns the (x, y) arrays of all vehicles at a time.
        sample_times: Instants (ms) at which to sample.
        n_vehicles: Vehicles in the run.
        road_length: Ring length for wrap-around distances.
        ring: Inclusive distance band (m) of neighbours that count.
        lifetime: A CAM stays valid this long (ms) after reception.

    Returns:
        One row per (time, vehicle) with at least one neighbour in the ring.
    """
    decoded = outcomes[outcomes["decoded"].astype(bool)].sort_values(
        "subframe", kind="stable"
    )
    times = decoded["subframe"].to_numpy(dtype=np.int64)
    rx = decoded["receiver"].to_numpy(dtype=np.int64)
    src = decoded["source"].to_numpy(dtype=np.int64)
    last_heard = np.full((n_vehicles, n_vehicles), -np.inf)

    low, high = ring
    rows = []
    cursor = 0
    for t in sample_times:
        end = np.searchsorted(times, t, side="right")
        np.maximum.at(last_heard, (rx[cursor:end], src[cursor:end]), times[cursor:end])
        cursor = end

        x, y = positions(t)
        distances = distance_matrix(x, y, road_length)
        in_ring = (distances >= low) & (distances <= high)
        np.fill_diagonal(in_ring, False)
        heard = in_ring & (t - last_heard <= lifetime)

        neighbours = in_ring.sum(axis=1)
        for vehicle in np.flatnonzero(neighbours):
            rows.append(
                (
                    int(t),
                    int(vehicle),
                    int(neighbours[vehicle]),
                    heard[vehicle].sum() / neighbours[vehicle],
                )
            )
    return pd.DataFrame(rows, columns=["time_ms", "vehicle", "neighbours", "fraction"])


def sci_truthfulness_violations(events: Iterable[GrantEvent]) -> int:
    """Count announced RRIs that the next use of the same grant contradicts.

    After a transmission announcing RRI R at t, the grant's next reserved
    opportunity (transmit, missed or break) must fall at t + R.
    """
    pending: dict[int, int] = {}
    violations = 0
    for event in sorted(events, key=lambda e: e.time):
        if event.event not in ("transmit", "missed", "break"):
            continue
        expected = pending.pop(event.grant_id, None)
        if expected is not None and expected != event.time:
            violations += 1
        if event.event == "transmit":
            pending[event.grant_id] = event.time + event.rri
    return violations


def format_bins(pdr: pd.DataFrame) -> str:
    """PDR per bin from 0 m up to the last populated bin; empty bins are nan.

    Position k in the string is always the bin starting at k * bin_width.
    """
    if pdr.empty:
        return ""
    width = float(pdr["bin_hi"].iloc[0] - pdr["bin_lo"].iloc[0])
    index = np.rint(pdr["bin_lo"].to_numpy(dtype=float) / width).astype(int)
    values = np.full(index.max() + 1, np.nan)
    values[index] = pdr["pdr"].to_numpy(dtype=float)
    return ";".join(f"{value:.6f}" for value in values)


def mean_bins(strings: Iterable[str]) -> str:
    """Average formatted PDR strings bin by bin, skipping seeds without data."""
    parsed = [
        np.array([float(v) for v in s.split(";")])
        for s in strings
        if isinstance(s, str) and s
    ]
    if not parsed:
        return ""
    stacked = np.full((len(parsed), max(p.size for p in parsed)), np.nan)
    for row, values in zip(stacked, parsed):
        row[: values.size] = values
    present = ~np.isnan(stacked)
    counts = present.sum(axis=0)
    sums = np.where(present, stacked, 0.0).sum(axis=0)
    means = np.divide(
        sums, counts, out=np.full(counts.shape, np.nan), where=counts > 0
    )
    return ";".join(f"{v:.6f}" for v in means)


def summarize(
    mechanism: str,
    seed: int,
    cbr: pd.DataFrame,
    pdr: pd.DataFrame,
    gaps: pd.DataFrame,
    aware: pd.DataFrame,
    gamma: dict[str, int],
) -> dict:
    """One summary.csv row, built only from the per-seed tables."""

    def band(lo: float, hi: float) -> float:
        rows = pdr[(pdr["bin_lo"] >= lo) & (pdr["bin_hi"] <= hi)]
        if rows.empty:
            return float("nan")
        return float(rows["decoded"].sum() / rows["total"].sum())

    return {
        "mechanism": mechanism,
        "seed": seed,
        "mean_cbr": float(cbr["cbr"].mean()) if not cbr.empty else float("nan"),
        "mean_pdr_by_bin": format_bins(pdr),
        "pdr_0_100": band(0.0, 100.0),
        "pdr_100_500": band(100.0, 500.0),
        "pdr_200_500": band(200.0, 500.0),
        "mean_ipg": float(gaps["gap_ms"].mean()) if not gaps.empty else float("nan"),
        "awareness_mean": (
            float(aware["fraction"].mean()) if not aware.empty else float("nan")
        ),
        "awareness_std": (
            float(aware["fraction"].std(ddof=0)) if not aware.empty else float("nan")
        ),
        **gamma,
    }


def aggregate_summaries(rows: Sequence[dict]) -> pd.DataFrame:
    """Average per-seed summary rows into one row per mechanism."""
    frame = pd.DataFrame(list(rows))
    if frame.empty:
        return frame
    text = ("mechanism", "seed", "mean_pdr_by_bin")
    numeric = [c for c in frame.columns if c not in text]
    aggregated = frame.groupby("mechanism", sort=False)[numeric].mean().reset_index()
    aggregated.insert(1, "seeds", frame.groupby("mechanism", sort=False).size().values)
    aggregated["mean_pdr_by_bin"] = (
        frame.groupby("mechanism", sort=False)["mean_pdr_by_bin"]
        .agg(mean_bins)
        .values
    )
    return aggregated
