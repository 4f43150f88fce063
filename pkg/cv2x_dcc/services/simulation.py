import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import simpy

from cv2x_dcc.exceptions import SchedulingError
from cv2x_dcc.helpers.channel import dbm_to_mw, noise_floor, subframe_reception
from cv2x_dcc.helpers.scenario import build_scenario, positions_at
from cv2x_dcc.models.cam import CamSource
from cv2x_dcc.models.controller import GateAction
from cv2x_dcc.models.grant import (
    ExpiryAction,
    Grant,
    GrantAction,
    GrantBreakingPolicy,
    Sci,
)
from cv2x_dcc.models.records import (
    FAILURE_CODES,
    CollidingGrantEvent,
    GrantEvent,
    TxRecord,
)
from cv2x_dcc.models.vehicle import VehicleState
from cv2x_dcc.schemas.run_config import RunConfig
from cv2x_dcc.services.collisions import CollisionTracker
from cv2x_dcc.services.congestion import CongestionController
from cv2x_dcc.services.meters import CbrMeter, CrMeter, recount_cr
from cv2x_dcc.services.scheduler import (
    grant_break_check,
    on_reserved_opportunity,
    on_rrc_expiry,
    retune_rri,
    select_resources,
)
from cv2x_dcc.services.sensing import SensingBank
from cv2x_dcc.services.traffic import draw_phases, enqueue, generate_cam, make_sources

logger = logging.getLogger(__name__)


@dataclass
class SimulationResult:
    config: RunConfig
    seed: int
    vehicles: list[VehicleState]
    outcomes: pd.DataFrame
    cbr_samples: pd.DataFrame
    tx_records: list[TxRecord]
    grant_events: list[GrantEvent]
    collisions: list[CollidingGrantEvent]
    counters: pd.DataFrame
    controller_trace: pd.DataFrame | None = None
    meter_checks: int = 0
    meter_mismatches: int = 0
    start: np.ndarray = field(default_factory=lambda: np.zeros(0))
    direction: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lateral: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def positions(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        x = positions_at(self.start, self.direction, t, self.config.scenario)
        return x, self.lateral


class _OutcomeLog:
    """Columnar reception log; one chunk of arrays per transmission."""

    def __init__(self):
        self._chunks: list[tuple[np.ndarray, ...]] = []

    def append(self, tx_id, source, receivers, subframe, distance, decoded, cause):
        n = len(receivers)
        self._chunks.append(
            (
                np.full(n, tx_id, dtype=np.int32),
                np.full(n, source, dtype=np.int32),
                receivers.astype(np.int32),
                np.full(n, subframe, dtype=np.int32),
                distance.astype(np.float64),
                decoded,
                cause.astype(np.int8),
            )
        )

    def frame(self) -> pd.DataFrame:
        columns = ["tx_id", "source", "receiver", "subframe", "distance", "decoded"]
        if not self._chunks:
            frame = pd.DataFrame({c: pd.Series(dtype="int32") for c in columns})
            frame["decoded"] = frame["decoded"].astype(bool)
            frame["failure_cause"] = pd.Series(dtype="object")
            return frame
        stacked = [np.concatenate(parts) for parts in zip(*self._chunks)]
        frame = pd.DataFrame(dict(zip(columns, stacked[:6])))
        codes = pd.Series(stacked[6])
        labels = {code: cause.value for code, cause in FAILURE_CODES.items()}
        frame["failure_cause"] = codes.map(labels)
        return frame


class Simulation:
    """One seeded run of the SB-SPS MAC with a congestion controller.

    Time advances in 1 ms subframes on a simpy clock. CAM generators and the
    control loop are separate processes; at equal timestamps they fire before
    the subframe tick, so a CAM generated at t can use a reservation at t.
    """

    def __init__(self, config: RunConfig, seed: int):
        self.config = config
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        scenario = config.scenario.model_copy(update={"seed": seed})
        self.scenario = scenario
        self.vehicles = build_scenario(scenario, self.rng)
        n = len(self.vehicles)
        self.n = n

        self.start = np.array([v.position for v in self.vehicles])
        self.direction = np.array([v.direction for v in self.vehicles], dtype=float)
        self.lateral = np.array([v.lateral for v in self.vehicles])

        radio = config.radio
        self.n_sub = radio.num_subchannels
        self.noise_mw = float(dbm_to_mw(noise_floor(radio)))
        self.busy_mw = float(dbm_to_mw(radio.srssi_threshold))
        self.sigma = radio.shadowing_sigma
        self._idle_srssi = np.full((n, self.n_sub), self.noise_mw)

        sbsps = config.sbsps
        self.gb = GrantBreakingPolicy(sbsps.grant_breaking, sbsps.sl_reselect_after)
        self.sensing = SensingBank(n, self.n_sub, self.noise_mw, sbsps.sensing_window)
        self.cbr_meter = CbrMeter(n, self.n_sub, window=100)
        self.cr_meters = [CrMeter(self.n_sub) for _ in range(n)]
        self.controllers = [
            CongestionController(config.controller, sbsps, self.n_sub) for _ in range(n)
        ]

        traffic = config.traffic
        phases = draw_phases(self.rng, n, traffic.generation_period)
        self.sources: list[CamSource] = make_sources(
            phases, traffic.generation_period, traffic.packet_size
        )

        self.grants: list[Grant | None] = [None] * n
        self.next_opportunity = np.full(n, -1, dtype=np.int64)
        self.committed = np.zeros(n, dtype=bool)
        self.last_release: list[int | None] = [None] * n
        self.awaiting: set[int] = set()
        self.retry_at = np.zeros(n, dtype=np.int64)
        self.missed = np.zeros(n, dtype=np.int64)
        self.tx_history: list[list[tuple[int, int]]] = [[] for _ in range(n)]

        self._next_tx_id = 0
        self._next_grant_id = 0
        self.outcome_log = _OutcomeLog()
        self.tx_records: list[TxRecord] = []
        self.grant_events: list[GrantEvent] = []
        self.cbr_rows: list[tuple] = []
        self.controller_rows: list[tuple] = []
        self.collisions = CollisionTracker(
            sbsps.sensing_window, config.metrics.range_cap
        )
        self.meter_checks = 0
        self.meter_mismatches = 0

        self.env = simpy.Environment()

    # processes

    def _cam_process(self, source: CamSource):
        yield self.env.timeout(source.phase)
        while True:
            now = int(self.env.now)
            if enqueue(source.buffer, generate_cam(source, now)):
                source.displaced += 1
            if self.grants[source.vehicle] is None:
                self.awaiting.add(source.vehicle)
            yield self.env.timeout(source.period)

    def _control_process(self):
        period = self.config.controller.cbr_sample_period
        while True:
            yield self.env.timeout(period)
            now = int(self.env.now)
            cbr = self.cbr_meter.cbr
            for i, controller in enumerate(self.controllers):
                controller.on_cbr_sample(float(cbr[i]), now)

    def _sampling_process(self):
        metrics = self.config.metrics
        while True:
            yield self.env.timeout(metrics.sample_period)
            now = int(self.env.now)
            if now < self.scenario.warmup:
                continue
            cbr = self.cbr_meter.cbr
            if metrics.verify_meters:
                self.meter_checks += 1
                if not np.array_equal(cbr, self.cbr_meter.recount()):
                    self.meter_mismatches += 1
            for i in range(self.n):
                cr = self.cr_meters[i].value(now, self.grants[i])
                self.cbr_rows.append((now, i, float(cbr[i]), cr))
                if metrics.verify_meters:
                    expected = recount_cr(
                        self.tx_history[i], self.grants[i], now, self.n_sub
                    )
                    self.meter_checks += 1
                    if cr != expected:
                        self.meter_mismatches += 1
                if self.config.trace_channel:
                    state = self.controllers[i].state
                    self.controller_rows.append(
                        (
                            now,
                            i,
                            float(cbr[i]),
                            cr,
                            state.current_rri,
                            state.reactive_state.value,
                            state.adaptive_rate,
                            self.grants[i].rri if self.grants[i] is not None else None,
                        )
                    )

    def _subframe_process(self):
        # Yield once so CAM generators scheduled for t = 0 run first
        yield self.env.timeout(0)
        while True:
            self._step(int(self.env.now))
            yield self.env.timeout(1)

    # bookkeeping

    def _log(self, t: int, vehicle: int, grant: Grant, event: str, tx_id=None):
        self.grant_events.append(
            GrantEvent(
                time=t,
                vehicle=vehicle,
                grant_id=grant.grant_id,
                event=event,
                rri=grant.rri,
                rrc=grant.rrc,
                subchannel_start=grant.subchannel_start,
                subchannel_width=grant.subchannel_width,
                selection_context=grant.selection_context,
                tx_id=tx_id,
            )
        )

    def _set_grant(self, vehicle: int, grant: Grant | None):
        self.grants[vehicle] = grant
        self.next_opportunity[vehicle] = -1 if grant is None else grant.next_opportunity
        if grant is None and self.sources[vehicle].buffer.pending is not None:
            self.awaiting.add(vehicle)

    def _rri_for(self, vehicle: int) -> int:
        controller = self.controllers[vehicle]
        if controller.kind.is_rri_adaptive:
            return controller.state.current_rri
        return self.config.sbsps.default_rri

    def _select(self, vehicle: int, t: int) -> Grant | None:
        try:
            grant = select_resources(
                self.sensing.window_for(vehicle, t),
                self._rri_for(vehicle),
                t,
                self.rng,
                self.config.sbsps,
                self.n_sub,
                owner=vehicle,
                end=self.scenario.sim_duration,
            )
        except SchedulingError as e:
            logger.debug("Vehicle %d: %s", vehicle, e)
            return None
        grant.grant_id = self._next_grant_id
        self._next_grant_id += 1
        self._log(t, vehicle, grant, "create")
        return grant

    def _release(self, vehicle: int, t: int):
        """Commit the buffered packet to a fresh grant's first opportunity."""
        grant = self._select(vehicle, t)
        self.awaiting.discard(vehicle)
        if grant is None:
            return
        self.committed[vehicle] = True
        self._set_grant(vehicle, grant)

    def _serve_awaiting(self, t: int):
        for vehicle in sorted(self.awaiting):
            source = self.sources[vehicle]
            if self.grants[vehicle] is not None or source.buffer.pending is None:
                self.awaiting.discard(vehicle)
                continue
            if self.retry_at[vehicle] > t:
                continue
            cr = self.cr_meters[vehicle].value(t, None)
            decision = self.controllers[vehicle].gate(t, cr)
            if decision.action is GateAction.TRANSMIT:
                self._release(vehicle, t)
            elif decision.action is GateAction.DELAY:
                self.retry_at[vehicle] = decision.until
            else:
                source.buffer.pending = None
                source.gated_drops += 1
                self.awaiting.discard(vehicle)

    # one subframe

    def _step(self, t: int):
        transmissions: list[tuple[int, Grant, Sci]] = []
        reserved: list[Grant] = []

        for vehicle in np.flatnonzero(self.next_opportunity == t):
            vehicle = int(vehicle)
            grant = self.grants[vehicle]
            source = self.sources[vehicle]
            controller = self.controllers[vehicle]

            if self.committed[vehicle]:
                self.committed[vehicle] = False
                has_packet = source.buffer.pending is not None
            elif source.buffer.pending is None:
                has_packet = False
            else:
                cr = self.cr_meters[vehicle].value(t, grant)
                decision = controller.gate(t, cr)
                if decision.action is GateAction.DROP:
                    source.buffer.pending = None
                    source.gated_drops += 1
                has_packet = decision.action is GateAction.TRANSMIT
                last = self.last_release[vehicle]
                if (
                    has_packet
                    and self.gb.enabled
                    and last is not None
                    and grant_break_check(t - last, grant.rri)
                ):
                    self._log(t, vehicle, grant, "break")
                    self._set_grant(vehicle, None)
                    self._release(vehicle, t)
                    continue

            if has_packet and controller.kind.is_rri_adaptive:
                previous = grant.rri
                retune_rri(grant, controller.state.current_rri, t)
                if grant.rri != previous:
                    self._log(t, vehicle, grant, "retune")

            action = on_reserved_opportunity(grant, has_packet, self.gb, t)
            if action is GrantAction.BREAK:
                self._log(t, vehicle, grant, "break")
                self._set_grant(vehicle, None)
                continue

            reserved.append(grant)
            sci = None
            if action is GrantAction.MISSED:
                self.missed[vehicle] += 1
                self._log(t, vehicle, grant, "missed")
            else:
                self.last_release[vehicle] = t

            expired = False
            if grant.rrc <= 0:
                sbsps = self.config.sbsps
                expiry = on_rrc_expiry(grant, sbsps.keep_probability, self.rng, sbsps)
                expired = expiry is ExpiryAction.RESELECT
                if not expired:
                    self._log(t, vehicle, grant, "keep")

            if action is GrantAction.TRANSMIT:
                sci = Sci(
                    source=vehicle,
                    tx_id=self._next_tx_id,
                    sent_at=t,
                    announced_rri=grant.rri,
                    subchannel_start=grant.subchannel_start,
                    subchannel_width=grant.subchannel_width,
                    rrc_snapshot=0 if expired else grant.rrc,
                )
                self._next_tx_id += 1
                self._log(t, vehicle, grant, "transmit", tx_id=sci.tx_id)
                transmissions.append((vehicle, grant, sci))

            if expired:
                self._log(t, vehicle, grant, "expire")
                self._set_grant(vehicle, None)
            else:
                self.next_opportunity[vehicle] = grant.next_opportunity

        x = positions_at(self.start, self.direction, t, self.scenario)
        if len(reserved) > 1:
            self.collisions.observe(t, reserved, self._pair_distance(x))

        self._transmit(t, x, transmissions)
        self._serve_awaiting(t)

    def _pair_distance(self, x: np.ndarray):
        road_length = self.scenario.road_length

        def distance(a: int, b: int) -> float:
            dx = abs(x[a] - x[b])
            dx = min(dx, road_length - dx)
            return float(np.hypot(dx, self.lateral[a] - self.lateral[b]))

        return distance

    def _transmit(self, t: int, x: np.ndarray, transmissions):
        radio = self.config.radio
        transmitting = np.zeros(self.n, dtype=bool)
        if not transmissions:
            srssi_mw = self._idle_srssi
        else:
            senders = np.array([v for v, _, _ in transmissions])
            scis = [sci for _, _, sci in transmissions]
            starts = np.array([s.subchannel_start for s in scis])
            widths = np.array([s.subchannel_width for s in scis])
            shadow = (
                self.rng.normal(0.0, self.sigma, size=(len(senders), self.n))
                if self.sigma > 0
                else 0.0
            )
            reception = subframe_reception(
                senders,
                starts,
                widths,
                x,
                self.lateral,
                self.scenario.road_length,
                shadow,
                radio,
            )
            srssi_mw = reception.srssi_mw
            transmitting = reception.transmitting
            receivers = np.arange(self.n)
            range_cap = self.config.metrics.range_cap

            for k, (vehicle, grant, sci) in enumerate(transmissions):
                decoded = reception.decoded[k]
                heard_by = np.flatnonzero(decoded)
                self.sensing.record_sci(
                    heard_by, sci, reception.rx_dbm[k, heard_by], t
                )

                logged = (reception.distance[k] <= range_cap) & (receivers != vehicle)
                cause = np.zeros(self.n, dtype=np.int8)
                failed = logged & ~decoded
                noise_limited = reception.snr_db[k] < radio.sinr_threshold
                cause[failed] = 3
                cause[failed & noise_limited] = 1
                cause[failed & transmitting] = 2
                self.outcome_log.append(
                    sci.tx_id,
                    vehicle,
                    receivers[logged],
                    t,
                    reception.distance[k][logged],
                    decoded[logged],
                    cause[logged],
                )

                self.tx_records.append(
                    TxRecord(
                        tx_id=sci.tx_id,
                        source=vehicle,
                        subframe=t,
                        subchannel_start=sci.subchannel_start,
                        subchannel_width=sci.subchannel_width,
                        position=float(x[vehicle]),
                        lateral=float(self.lateral[vehicle]),
                        announced_rri=sci.announced_rri,
                    )
                )
                source = self.sources[vehicle]
                source.buffer.pending = None
                source.transmitted += 1
                self.controllers[vehicle].on_transmit(t)
                self.cr_meters[vehicle].record(t, sci.subchannel_width)
                if self.config.metrics.verify_meters:
                    self.tx_history[vehicle].append((t, sci.subchannel_width))

        busy = srssi_mw > self.busy_mw
        for vehicle, _, sci in transmissions:
            busy[vehicle, sci.subchannel_start : sci.subchannel_end] = True
        self.cbr_meter.update(busy)
        self.sensing.record_subframe(t, srssi_mw, transmitting)

    # results

    def _counters(self) -> pd.DataFrame:
        rows = []
        for i, source in enumerate(self.sources):
            pending = int(source.buffer.pending is not None)
            rows.append(
                {
                    "vehicle": i,
                    "generated": source.generated,
                    "transmitted": source.transmitted,
                    "pending": pending,
                    "displaced": source.displaced,
                    "gated_drops": source.gated_drops,
                    "app_drops": source.app_drops,
                    "missed_transmissions": int(self.missed[i]),
                }
            )
        return pd.DataFrame(rows)

    def run(self) -> SimulationResult:
        duration = self.scenario.sim_duration
        logger.info(
            "Simulating %s, seed %d: %d vehicles, %d ms",
            self.config.label,
            self.seed,
            self.n,
            duration,
        )
        for source in self.sources:
            self.env.process(self._cam_process(source))
        self.env.process(self._control_process())
        self.env.process(self._sampling_process())
        self.env.process(self._subframe_process())
        self.env.run(until=duration)

        controller_trace = None
        if self.config.trace_channel:
            controller_trace = pd.DataFrame(
                self.controller_rows,
                columns=[
                    "time_ms",
                    "vehicle",
                    "cbr",
                    "cr",
                    "controller_rri",
                    "reactive_state",
                    "adaptive_rate",
                    "grant_rri",
                ],
            )
        logger.info(
            "Seed %d done: %d transmissions, %d colliding grant pairs",
            self.seed,
            len(self.tx_records),
            len(self.collisions.events),
        )
        return SimulationResult(
            config=self.config,
            seed=self.seed,
            vehicles=self.vehicles,
            outcomes=self.outcome_log.frame(),
            cbr_samples=pd.DataFrame(
                self.cbr_rows, columns=["time_ms", "vehicle", "cbr", "cr"]
            ),
            tx_records=self.tx_records,
            grant_events=self.grant_events,
            collisions=self.collisions.events,
            counters=self._counters(),
            controller_trace=controller_trace,
            meter_checks=self.meter_checks,
            meter_mismatches=self.meter_mismatches,
            start=self.start,
            direction=self.direction,
            lateral=self.lateral,
        )


def simulate(config: RunConfig, seed: int) -> SimulationResult:
    return Simulation(config, seed).run()
