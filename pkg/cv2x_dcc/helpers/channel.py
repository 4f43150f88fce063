import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from cv2x_dcc.helpers.scenario import ring_distance
from cv2x_dcc.models.records import RxSample
from cv2x_dcc.schemas.run_config import RadioConfig

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 3e8  # m/s
THERMAL_NOISE_DBM_HZ = -174.0
RB_BANDWIDTH_HZ = 180e3


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(mw, dtype=float))


def _scalar_or_array(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


def breakpoint_distance(config: RadioConfig) -> float:
    """Distance where the LOS model switches to its second slope, in meters."""
    height = config.antenna_height
    if config.breakpoint_on_effective_height:
        height -= 1.0
    return 4.0 * height * height * config.carrier_frequency * 1e9 / SPEED_OF_LIGHT


def pathloss(d, config: RadioConfig | None = None):
    """Two-slope LOS pathloss in dB for distances in meters.

    Distances below `min_distance` are clamped so the result stays finite.
    """
    config = config or RadioConfig()
    d = np.maximum(np.asarray(d, dtype=float), config.min_distance)
    fc = config.carrier_frequency
    h_eff = config.antenna_height - 1.0
    near = 22.7 * np.log10(d) + 41.0 + 20.0 * np.log10(fc / 5.0)
    far = (
        40.0 * np.log10(d)
        + 9.45
        - 2.0 * 17.3 * np.log10(h_eff)
        + 2.7 * np.log10(fc / 5.0)
    )
    return _scalar_or_array(np.where(d <= breakpoint_distance(config), near, far))


def received_power(tx_power: float, d, shadow=0.0, config: RadioConfig | None = None):
    return _scalar_or_array(tx_power - np.asarray(pathloss(d, config)) + shadow)


def noise_floor(config: RadioConfig | None = None) -> float:
    """Thermal noise over one subchannel plus the receiver noise figure, in dBm."""
    config = config or RadioConfig()
    bandwidth = config.rbs_per_subchannel * RB_BANDWIDTH_HZ
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth) + config.noise_figure


def subchannel_srssi(contributions: Iterable[float], config: RadioConfig | None = None):
    """Received energy on one subchannel in dBm; noise is always included."""
    total = float(dbm_to_mw(noise_floor(config)))
    total += float(np.sum(dbm_to_mw(list(contributions))))
    return float(mw_to_dbm(total))


def sinr(signal: float, interferer_powers: Iterable[float], config=None) -> float:
    noise_mw = float(dbm_to_mw(noise_floor(config)))
    interference = float(np.sum(dbm_to_mw(list(interferer_powers))))
    return float(signal - mw_to_dbm(noise_mw + interference))


def decode(
    target_rx: RxSample | float,
    interferer_powers: Iterable[float],
    config: RadioConfig | None = None,
    receiver_transmitting: bool = False,
) -> bool:
    """Decide whether a transmission is decoded at one receiver.

    Args:
        target_rx: The wanted signal, either an RxSample or its RSRP in dBm.
        interferer_powers: Received powers (dBm) of concurrent transmissions
            overlapping the same subchannels.
        config: Radio block; defaults to the standard 10 MHz setup.
        receiver_transmitting: The receiver is on air in the same subframe.

    Returns:
        True iff the receiver is listening and the SINR reaches the threshold.
    """
    if receiver_transmitting:
        return False
    config = config or RadioConfig()
    rsrp = target_rx.rsrp if isinstance(target_rx, RxSample) else float(target_rx)
    return sinr(rsrp, interferer_powers, config) >= config.sinr_threshold


def rx_sample(
    signal: float,
    interferer_powers: Iterable[float],
    config: RadioConfig | None = None,
    receiver_transmitting: bool = False,
) -> RxSample:
    interferers = list(interferer_powers)
    return RxSample(
        rsrp=signal,
        rssi=subchannel_srssi([signal, *interferers], config),
        sinr=sinr(signal, interferers, config),
        decoded=decode(signal, interferers, config, receiver_transmitting),
    )


def max_decode_distance(config: RadioConfig | None = None) -> float:
    """Largest distance at which an interference-free, unshadowed packet decodes."""
    config = config or RadioConfig()
    budget = config.tx_power - noise_floor(config) - config.sinr_threshold
    fc = config.carrier_frequency
    d_bp = breakpoint_distance(config)
    far_offset = (
        9.45
        - 2.0 * 17.3 * math.log10(config.antenna_height - 1.0)
        + 2.7 * math.log10(fc / 5.0)
    )
    far = 10 ** ((budget - far_offset) / 40.0)
    if far > d_bp:
        return far
    near_offset = 41.0 + 20.0 * math.log10(fc / 5.0)
    return min(10 ** ((budget - near_offset) / 22.7), d_bp)


@dataclass
class SubframeReception:
    """Physical layer outcome of one subframe for K transmissions and N vehicles."""

    distance: np.ndarray  # (K, N) m
    rx_dbm: np.ndarray  # (K, N)
    srssi_mw: np.ndarray  # (N, n_sub) including noise
    sinr_db: np.ndarray  # (K, N) worst occupied subchannel
    snr_db: np.ndarray  # (K, N)
    transmitting: np.ndarray  # (N,)
    decoded: np.ndarray  # (K, N)


def subframe_reception(
    sources: np.ndarray,
    starts: np.ndarray,
    widths: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    road_length: float,
    shadow_db: np.ndarray | float,
    config: RadioConfig,
) -> SubframeReception:
    """Resolve every link of one subframe at once.

    Each receiver sums the energy of all transmissions overlapping a
    subchannel. A transmission decodes when the SINR on every subchannel it
    occupies clears the threshold and the receiver itself is silent.
    """
    sources = np.asarray(sources, dtype=int)
    k, n = len(sources), len(x)
    distance = ring_distance(
        x[sources][:, None], y[sources][:, None], x[None, :], y[None, :], road_length
    )
    rx_dbm = config.tx_power - pathloss(distance, config) + shadow_db
    rx_mw = dbm_to_mw(rx_dbm)
    rx_mw[np.arange(k), sources] = 0.0

    occupied = np.zeros((k, config.num_subchannels), dtype=bool)
    for i, (start, width) in enumerate(zip(starts, widths)):
        occupied[i, start : start + width] = True

    noise_mw = float(dbm_to_mw(noise_floor(config)))
    total_mw = rx_mw.T @ occupied.astype(float)
    srssi_mw = noise_mw + total_mw

    transmitting = np.zeros(n, dtype=bool)
    transmitting[sources] = True

    sinr_lin = np.empty((k, n))
    for i in range(k):
        cols = occupied[i]
        interference = np.clip(total_mw[:, cols] - rx_mw[i][:, None], 0.0, None)
        sinr_lin[i] = np.min(rx_mw[i][:, None] / (noise_mw + interference), axis=1)

    sinr_db = mw_to_dbm(sinr_lin)
    snr_db = mw_to_dbm(rx_mw / noise_mw)
    decoded = (sinr_db >= config.sinr_threshold) & ~transmitting[None, :]
    return SubframeReception(
        distance=distance,
        rx_dbm=rx_dbm,
        srssi_mw=srssi_mw,
        sinr_db=sinr_db,
        snr_db=snr_db,
        transmitting=transmitting,
        decoded=decoded,
    )
