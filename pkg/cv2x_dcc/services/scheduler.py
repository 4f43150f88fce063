import logging
import math

import numpy as np

from cv2x_dcc.exceptions import SchedulingError
from cv2x_dcc.models.grant import (
    ExpiryAction,
    Grant,
    GrantAction,
    GrantBreakingPolicy,
    SelectionContext,
    validate_rri,
)
from cv2x_dcc.schemas.run_config import SbSpsConfig
from cv2x_dcc.services.sensing import SensingWindow

logger = logging.getLogger(__name__)


def _reservation_rsrp(
    sw: SensingWindow,
    subframes: np.ndarray,
    starts: np.ndarray,
    width: int,
    rri: int,
    now: int,
    config: SbSpsConfig,
) -> np.ndarray:
    """Strongest announced reservation hitting each candidate's repetitions.

    A candidate (y, s) repeats at y + k * rri for k < rrc_max. A decoded SCI
    projects its resource to received_at + j * announced_rri for
    j = 1..rrc_snapshot. Candidates no SCI reaches get -inf.
    """
    reserved = np.full((len(subframes), len(starts)), -np.inf)
    sensed = [s for s in sw.live_scis(now) if s.sci.rrc_snapshot > 0]
    if not sensed:
        return reserved
    received_at = np.array([s.received_at for s in sensed])
    announced = np.array([s.sci.announced_rri for s in sensed])
    counts = np.array([s.sci.rrc_snapshot for s in sensed])
    first = np.array([s.sci.subchannel_start for s in sensed])
    end = np.array([s.sci.subchannel_end for s in sensed])
    rsrp = np.array([s.rsrp for s in sensed])

    # (sci, repetition) -> projected subframe
    j = np.arange(1, counts.max() + 1)
    projected = received_at[:, None] + announced[:, None] * j[None, :]
    valid = (j[None, :] <= counts[:, None]) & (projected >= subframes[0])

    horizon = rri * (config.rrc_max - 1)
    gap = projected[:, :, None] - subframes[None, None, :]
    lands = (gap >= 0) & (gap <= horizon) & (gap % rri == 0)
    hit = (lands & valid[:, :, None]).any(axis=1)  # (sci, subframe)
    overlap = (starts[None, :] < end[:, None]) & (
        starts[None, :] + width > first[:, None]
    )  # (sci, start)

    mask = hit[:, :, None] & overlap[:, None, :]
    return np.where(mask, rsrp[:, None, None], -np.inf).max(axis=0)


def select_resources(
    sw: SensingWindow,
    rri: int,
    now: int,
    rng: np.random.Generator,
    config: SbSpsConfig | None = None,
    num_subchannels: int = 3,
    owner: int = -1,
    end: int | None = None,
) -> Grant:
    """Sensing-based selection of a new semi-persistent grant.

    Candidates are every (subframe, first subchannel) pair in
    [now + t1, now + t2]. Those overlapping a decoded reservation above the
    RSRP threshold are excluded, raising the threshold in steps until enough
    remain. The survivors are ranked by average S-RSSI and one is picked at
    random among the best fraction.

    Args:
        sw: Sensing window of the selecting vehicle.
        rri: Reservation interval of the new grant (ms).
        now: Current subframe.
        rng: Generator for tie-breaking, the pick and the reselection counter.
        config: SB-SPS block.
        num_subchannels: Subchannels in the carrier.
        owner: Vehicle id stored on the grant.
        end: First subframe outside the run; the window is clipped to it.

    Returns:
        The new grant. `selection_context` is NoFree only when the RSRP
        threshold had to be raised and no reservation-free candidate survived.

    Raises:
        ConfigurationError: `rri` is not an allowed interval.
        SchedulingError: no subframe of the window lies before `end`.
    """
    config = config or SbSpsConfig()
    validate_rri(rri)
    first = now + config.t1
    last = now + config.t2
    if end is not None:
        last = min(last, end - 1)
    if last < first:
        raise SchedulingError(
            f"no selection window left at {now} ms (run ends at {end})"
        )

    width = config.subchannels_per_tx
    subframes = np.arange(first, last + 1)
    starts = np.arange(0, num_subchannels - width + 1)
    total = len(subframes) * len(starts)
    min_keep = config.candidate_fraction * total
    period = config.default_rri

    reserved = _reservation_rsrp(sw, subframes, starts, width, rri, now, config)

    own = sw.own_tx_offsets(period)[subframes % period]
    own_mask = np.broadcast_to(own[:, None], reserved.shape)
    if np.count_nonzero(~own_mask) < min_keep:
        own_mask = np.zeros_like(own_mask)

    threshold = config.rsrp_threshold
    while True:
        available = (reserved <= threshold) & ~own_mask
        if np.count_nonzero(available) >= min_keep:
            break
        threshold += config.rsrp_step

    free = available & np.isneginf(reserved)
    relaxed = threshold > config.rsrp_threshold
    context = (
        SelectionContext.NO_FREE
        if relaxed and not free.any()
        else SelectionContext.HAD_FREE
    )

    averaged = sw.average_srssi(period)
    per_start = np.stack(
        [averaged[:, s : s + width].mean(axis=1) for s in starts], axis=1
    )
    candidate_rssi = per_start[subframes % period]

    flat = np.flatnonzero(available)
    # Shuffle first so equal averages are broken at random by the stable sort
    flat = flat[rng.permutation(flat.size)]
    order = np.argsort(candidate_rssi.ravel()[flat], kind="stable")
    best = min(flat.size, max(1, math.ceil(config.candidate_fraction * total)))
    chosen = flat[order[rng.integers(best)]]
    row, col = np.unravel_index(chosen, reserved.shape)

    y = int(subframes[row])
    grant = Grant(
        owner=owner,
        subframe_offset=y % rri,
        subchannel_start=int(starts[col]),
        subchannel_width=width,
        rri=rri,
        rrc=int(rng.integers(config.rrc_min, config.rrc_max + 1)),
        created_at=now,
        selection_context=context,
        next_opportunity=y,
    )
    if relaxed:
        logger.debug(
            "Vehicle %d raised RSRP threshold to %.0f dBm (%s)",
            owner,
            threshold,
            context.value,
        )
    return grant


def on_reserved_opportunity(
    grant: Grant,
    has_packet: bool,
    gb: GrantBreakingPolicy,
    now: int,
) -> GrantAction:
    """Consume one reserved opportunity of `grant` at subframe `now`.

    With a packet the reservation is used. Without one, grant breaking releases
    the grant once the misses reach `sl_reselect_after`; otherwise the
    reservation is kept and the miss recorded.
    """
    if has_packet:
        grant.consecutive_misses = 0
        grant.rrc -= 1
        grant.next_opportunity = now + grant.rri
        return GrantAction.TRANSMIT

    grant.consecutive_misses += 1
    if gb.enabled and grant.consecutive_misses >= gb.sl_reselect_after:
        return GrantAction.BREAK

    grant.rrc -= 1
    grant.missed_at.append(now)
    grant.next_opportunity = now + grant.rri
    return GrantAction.MISSED


def grant_break_check(inter_arrival: int, rri: int) -> bool:
    """True when the gap between released packets no longer fits the grant."""
    return inter_arrival > 2 * rri - 2


def on_rrc_expiry(
    grant: Grant,
    keep_probability: float,
    rng: np.random.Generator,
    config: SbSpsConfig | None = None,
) -> ExpiryAction:
    config = config or SbSpsConfig()
    if rng.random() < keep_probability:
        grant.rrc = int(rng.integers(config.rrc_min, config.rrc_max + 1))
        return ExpiryAction.KEEP
    return ExpiryAction.RESELECT


def retune_rri(grant: Grant, new_rri: int, now: int) -> Grant:
    """Re-time a live grant to `new_rri`, anchored at the current opportunity.

    The subchannels and remaining counter are unchanged; the next reserved
    opportunity becomes now + new_rri.
    """
    validate_rri(new_rri)
    if new_rri == grant.rri:
        return grant
    grant.rri = new_rri
    grant.subframe_offset = now % new_rri
    grant.next_opportunity = now + new_rri
    grant.retuned_at = now
    return grant
