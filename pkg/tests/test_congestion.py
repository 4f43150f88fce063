import pytest

from cv2x_dcc.models.controller import (
    ControllerKind,
    ControllerState,
    GateAction,
    ReactiveState,
)
from cv2x_dcc.models.grant import Grant, GrantBreakingPolicy, SelectionContext
from cv2x_dcc.schemas.run_config import ControllerConfig, SbSpsConfig
from cv2x_dcc.services.congestion import (
    CongestionController,
    adaptive_update,
    gate_packet,
    hysteresis_step,
)
from cv2x_dcc.services.meters import CrMeter
from cv2x_dcc.services.scheduler import on_reserved_opportunity


def _state(kind=ControllerKind.RRI_CR_LIMIT, **kwargs) -> ControllerState:
    return ControllerState(kind=kind, **kwargs)


def test_increase_waits_for_up_delay():
    state = _state()

    assert hysteresis_step(state, 500, 0) == 100
    assert hysteresis_step(state, 500, 999) == 100
    assert hysteresis_step(state, 500, 1000) == 500
    assert state.over_threshold_since is None


def test_interrupted_demand_restarts_the_timer():
    state = _state()
    hysteresis_step(state, 500, 0)
    hysteresis_step(state, 100, 999)

    assert hysteresis_step(state, 500, 1000) == 100
    assert hysteresis_step(state, 500, 1999) == 100
    assert hysteresis_step(state, 500, 2000) == 500


def test_decrease_waits_for_down_delay():
    state = _state(current_rri=500)

    hysteresis_step(state, 100, 0)
    assert hysteresis_step(state, 100, 4999) == 500
    assert hysteresis_step(state, 100, 5000) == 100


def test_reversing_direction_disarms_other_timer():
    state = _state(current_rri=500)
    hysteresis_step(state, 100, 0)
    hysteresis_step(state, 800, 100)

    assert state.under_threshold_since is None
    assert state.over_threshold_since == 100


@pytest.mark.parametrize(
    "cbr, expected",
    [(0.68, 9.0), (0.9, 1.0), (0.2, 10.0), (0.6, 10.0)],
)
def test_adaptive_update_is_clamped(cbr, expected):
    state = _state(ControllerKind.ADAPTIVE, adaptive_rate=10.0)

    assert adaptive_update(state, cbr) == pytest.approx(expected)


def test_reactive_gate_delays_inside_t_off():
    state = _state(ControllerKind.REACTIVE, t_off=400, last_tx_time=1000)

    decision = gate_packet(state, 1200)

    assert decision.action is GateAction.DELAY
    assert decision.until == 1400
    assert gate_packet(state, 1400).action is GateAction.TRANSMIT


def test_first_packet_always_transmits():
    state = _state(ControllerKind.REACTIVE, t_off=1000)

    assert gate_packet(state, 0).action is GateAction.TRANSMIT


def test_adaptive_gate_rounds_release_up():
    state = _state(ControllerKind.ADAPTIVE, adaptive_rate=3.0, last_tx_time=1000)

    decision = gate_packet(state, 1100)

    assert decision.action is GateAction.DELAY
    assert decision.until == 1334


@pytest.mark.parametrize(
    "cr, action",
    [(0.002, GateAction.TRANSMIT), (0.0021, GateAction.DROP)],
)
def test_dropping_gate_compares_cr_with_limit(cr, action):
    state = _state(ControllerKind.DROP_3GPP)

    assert gate_packet(state, 500, cr=cr, limit=0.002).action is action


def test_dropping_gate_without_limit_transmits():
    state = _state(ControllerKind.DROP_ETSI)

    assert gate_packet(state, 500, cr=1.0, limit=None).action is GateAction.TRANSMIT


def test_reactive_controller_follows_cbr():
    controller = CongestionController(
        ControllerConfig(kind=ControllerKind.REACTIVE), SbSpsConfig()
    )

    controller.on_cbr_sample(0.45, 100)

    assert controller.state.reactive_state is ReactiveState.ACTIVE_2
    assert controller.state.t_off == 400


def test_adaptive_controller_updates_once_per_epoch():
    controller = CongestionController(
        ControllerConfig(kind=ControllerKind.ADAPTIVE), SbSpsConfig()
    )

    controller.on_cbr_sample(0.9, 0)
    assert controller.state.adaptive_rate == 1.0
    controller.on_cbr_sample(0.2, 100)
    assert controller.state.adaptive_rate == 1.0
    controller.on_cbr_sample(0.2, 200)
    assert controller.state.adaptive_rate == 10.0


def test_rri_cr_limit_controller_switches_after_a_second():
    controller = CongestionController(
        ControllerConfig(kind=ControllerKind.RRI_CR_LIMIT), SbSpsConfig()
    )

    for now in range(0, 1000, 100):
        controller.on_cbr_sample(0.71, now)
        assert controller.state.current_rri == 100
    controller.on_cbr_sample(0.71, 1000)

    # half the load is expected at 200 ms, which lifts the limit
    assert controller.state.current_rri == 200


def test_rri_cr_limit_controller_climbs_while_load_stays():
    controller = CongestionController(
        ControllerConfig(kind=ControllerKind.RRI_CR_LIMIT), SbSpsConfig()
    )

    for now in range(0, 8000, 100):
        controller.on_cbr_sample(0.71, now)

    assert controller.state.current_rri == 500


def test_rri_lookup_controller_targets_table_interval():
    controller = CongestionController(
        ControllerConfig(kind=ControllerKind.RRI_LOOKUP, hysteresis_up=0),
        SbSpsConfig(),
    )

    controller.on_cbr_sample(0.55, 0)

    assert controller.state.current_rri == 500


def test_only_dropping_variants_have_a_limit():
    etsi = CongestionController(
        ControllerConfig(kind=ControllerKind.DROP_ETSI), SbSpsConfig()
    )
    etsi.on_cbr_sample(0.7, 0)
    reactive = CongestionController(
        ControllerConfig(kind=ControllerKind.REACTIVE), SbSpsConfig()
    )
    reactive.on_cbr_sample(0.7, 0)

    assert etsi.current_limit() == 0.004
    assert reactive.current_limit() is None


def test_on_transmit_starts_t_off():
    controller = CongestionController(
        ControllerConfig(kind=ControllerKind.REACTIVE), SbSpsConfig()
    )
    controller.on_cbr_sample(0.35, 0)
    controller.on_transmit(100)

    assert controller.gate(250).action is GateAction.DELAY
    assert controller.gate(300).action is GateAction.TRANSMIT


@pytest.mark.parametrize(
    "kind, cbr",
    [(ControllerKind.DROP_3GPP, 0.9), (ControllerKind.DROP_AGGRESSIVE, 0.22)],
)
def test_dropping_brings_cr_under_limit_within_one_window(kind, cbr):
    controller = CongestionController(ControllerConfig(kind=kind), SbSpsConfig())
    meter = CrMeter(num_subchannels=3)
    grant = Grant(
        owner=0,
        subframe_offset=0,
        subchannel_start=0,
        subchannel_width=2,
        rri=100,
        rrc=5,
        created_at=-1000,
        selection_context=SelectionContext.HAD_FREE,
        next_opportunity=0,
    )
    controller.on_cbr_sample(0.1, -1000)
    for t in range(-1000, 0, 100):
        meter.record(t, 2)

    # the channel turns busy at t = 0
    controller.on_cbr_sample(cbr, 0)
    limit = controller.current_limit()
    sent = []
    for t in range(0, 4000, 100):
        cr = meter.value(t, grant)
        decision = controller.gate(t, cr)
        transmit = decision.action is GateAction.TRANSMIT
        if transmit:
            meter.record(t, 2)
            sent.append((t, cr))
        on_reserved_opportunity(grant, transmit, GrantBreakingPolicy(), t)
        if grant.rrc <= 0:
            grant.rrc = 5

    settled = [cr for t, cr in sent if t >= 1000]
    assert limit is not None
    assert settled
    assert max(settled) <= limit
    for t, _ in sent:
        if t >= 1000:
            recent = sum(2 for s, _ in sent if t - 500 <= s <= t)
            assert recent / 3000 <= limit
