import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from cv2x_dcc.models.grant import Grant

logger = logging.getLogger(__name__)


class CbrMeter:
    """Channel busy ratio over the trailing window, for a bank of vehicles.

    Each update pushes one subframe of busy flags (vehicles x subchannels) and
    evicts the oldest; the ratio is always taken over the full window so the
    first readings of a run start low.
    """

    def __init__(
        self, n_vehicles: int = 1, num_subchannels: int = 3, window: int = 100
    ):
        self.n_vehicles = n_vehicles
        self.num_subchannels = num_subchannels
        self.window = window
        self._ring = np.zeros((window, n_vehicles, num_subchannels), dtype=bool)
        self._busy = np.zeros(n_vehicles, dtype=np.int64)
        self._cursor = 0

    def update(self, flags: np.ndarray) -> np.ndarray:
        flags = np.asarray(flags, dtype=bool).reshape(
            self.n_vehicles, self.num_subchannels
        )
        evicted = self._ring[self._cursor]
        self._busy += flags.sum(axis=1) - evicted.sum(axis=1)
        self._ring[self._cursor] = flags
        self._cursor = (self._cursor + 1) % self.window
        return self.cbr

    @property
    def cbr(self) -> np.ndarray:
        return self._busy / (self.window * self.num_subchannels)

    def recount(self) -> np.ndarray:
        """Brute-force ratio over the stored window."""
        busy = self._ring.sum(axis=(0, 2))
        return busy / (self.window * self.num_subchannels)


def update_cbr(meter: CbrMeter, flags: np.ndarray) -> np.ndarray:
    return meter.update(flags)


def projected_use(grant: Grant | None, now: int, horizon: int = 500) -> int:
    """Subchannels the grant will occupy in [now, now + horizon - 1]."""
    if grant is None or grant.rrc <= 0:
        return 0
    last = now + horizon - 1
    count = 0
    opportunity = grant.next_opportunity
    for _ in range(grant.rrc):
        if opportunity > last:
            break
        if opportunity >= now:
            count += 1
        opportunity += grant.rri
    return count * grant.subchannel_width


@dataclass
class CrMeter:
    """Channel occupancy ratio of one vehicle.

    Past use covers [now - 500, now - 1]; use recorded at `now` itself counts
    with the projection over [now, now + 499].
    """

    num_subchannels: int = 3
    past_window: int = 500
    future_window: int = 500
    history: deque = field(default_factory=deque)
    past_used: int = 0
    cr: float = 0.0

    def record(self, subframe: int, used: int):
        if used > 0:
            self.history.append((subframe, used))
            self.past_used += used

    def _evict(self, now: int):
        while self.history and self.history[0][0] < now - self.past_window:
            self.past_used -= self.history.popleft()[1]

    def value(self, now: int, grant: Grant | None) -> float:
        self._evict(now)
        current = sum(used for subframe, used in self.history if subframe >= now)
        past = self.past_used - current
        future = current + projected_use(grant, now, self.future_window)
        denominator = (self.past_window + self.future_window) * self.num_subchannels
        self.cr = (past + future) / denominator
        return self.cr


def update_cr(
    meter: CrMeter, now: int, grant: Grant | None, own_usage: int = 0
) -> float:
    """Record this subframe's own use (subchannels) and return the updated CR."""
    meter.record(now, own_usage)
    return meter.value(now, grant)


def recount_cr(
    tx_history: Iterable[tuple[int, int]],
    grant: Grant | None,
    now: int,
    num_subchannels: int = 3,
    past_window: int = 500,
    future_window: int = 500,
) -> float:
    """Recompute a CR from the full transmission history of a vehicle."""
    used = sum(
        subchannels
        for subframe, subchannels in tx_history
        if now - past_window <= subframe <= now
    )
    used += projected_use(grant, now, future_window)
    return used / ((past_window + future_window) * num_subchannels)
