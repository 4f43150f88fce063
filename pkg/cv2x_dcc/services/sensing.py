import logging
from dataclasses import dataclass, field

import numpy as np

from cv2x_dcc.models.grant import Sci

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SensedSci:
    sci: Sci
    rsrp: float  # dBm
    received_at: int


@dataclass
class SensingWindow:
    """What one vehicle observed over the trailing sensing window.

    `srssi_mw` and `own_tx` are rings indexed by subframe modulo `depth`.
    """

    srssi_mw: np.ndarray  # (depth, n_sub)
    own_tx: np.ndarray  # (depth,)
    scis: list[SensedSci] = field(default_factory=list)
    depth: int = 1000

    @classmethod
    def empty(cls, num_subchannels: int, noise_mw: float, depth: int = 1000):
        return cls(
            srssi_mw=np.full((depth, num_subchannels), noise_mw),
            own_tx=np.zeros(depth, dtype=bool),
            depth=depth,
        )

    def average_srssi(self, period: int = 100) -> np.ndarray:
        """Linear mean S-RSSI per (subframe mod period, subchannel)."""
        n_sub = self.srssi_mw.shape[1]
        return self.srssi_mw.reshape(self.depth // period, period, n_sub).mean(axis=0)

    def own_tx_offsets(self, period: int = 100) -> np.ndarray:
        """Offsets modulo `period` at which this vehicle was on air."""
        return self.own_tx.reshape(self.depth // period, period).any(axis=0)

    def live_scis(self, now: int) -> list[SensedSci]:
        return [s for s in self.scis if s.received_at >= now - self.depth]


class SensingBank:
    """Sensing history of every vehicle in a run.

    The latest SCI per (receiver, source) is kept in (n, n) arrays; a newer SCI
    from the same source supersedes the older one.
    """

    def __init__(
        self,
        n_vehicles: int,
        num_subchannels: int,
        noise_mw: float,
        depth: int = 1000,
    ):
        self.depth = depth
        self.srssi_mw = np.full((depth, n_vehicles, num_subchannels), noise_mw)
        self.own_tx = np.zeros((depth, n_vehicles), dtype=bool)
        self._log: list[Sci] = []
        self._ref = np.full((n_vehicles, n_vehicles), -1, dtype=np.int64)
        self._rsrp = np.zeros((n_vehicles, n_vehicles))
        self._heard_at = np.zeros((n_vehicles, n_vehicles), dtype=np.int64)

    def record_subframe(self, t: int, srssi_mw: np.ndarray, transmitting: np.ndarray):
        slot = t % self.depth
        self.srssi_mw[slot] = srssi_mw
        self.own_tx[slot] = transmitting

    def record_sci(
        self, receivers: np.ndarray | int, sci: Sci, rsrp: np.ndarray | float, t: int
    ):
        """Store `sci` as decoded at `t` by every vehicle in `receivers`."""
        self._log.append(sci)
        self._ref[receivers, sci.source] = len(self._log) - 1
        self._rsrp[receivers, sci.source] = rsrp
        self._heard_at[receivers, sci.source] = t

    def window_for(self, vehicle: int, now: int) -> SensingWindow:
        refs = self._ref[vehicle]
        live = (refs >= 0) & (self._heard_at[vehicle] >= now - self.depth)
        scis = [
            SensedSci(
                sci=self._log[refs[source]],
                rsrp=float(self._rsrp[vehicle, source]),
                received_at=int(self._heard_at[vehicle, source]),
            )
            for source in np.flatnonzero(live)
        ]
        return SensingWindow(
            srssi_mw=self.srssi_mw[:, vehicle, :],
            own_tx=self.own_tx[:, vehicle],
            scis=scis,
            depth=self.depth,
        )
