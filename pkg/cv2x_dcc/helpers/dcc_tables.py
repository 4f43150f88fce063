import math

from cv2x_dcc.exceptions import ConfigurationError
from cv2x_dcc.models.controller import CrTable, ReactiveState
from cv2x_dcc.models.grant import ALLOWED_RRIS

# (upper bound exclusive, state, minimum gap between packets in ms)
REACTIVE_TABLE: tuple[tuple[float, ReactiveState, int], ...] = (
    (0.30, ReactiveState.RELAXED, 100),
    (0.40, ReactiveState.ACTIVE_1, 200),
    (0.50, ReactiveState.ACTIVE_2, 400),
    (0.60, ReactiveState.ACTIVE_3, 500),
    (math.inf, ReactiveState.RESTRICTIVE, 1000),
)

# (upper bound inclusive, CR limit per priority group); None is unlimited
ETSI_CR_TABLE: tuple[tuple[float, dict[str, float | None]], ...] = (
    (0.30, {"1-2": None, "3-5": None, "6-8": None}),
    (0.65, {"1-2": None, "3-5": 0.03, "6-8": 0.02}),
    (0.80, {"1-2": 0.02, "3-5": 0.006, "6-8": 0.004}),
    (math.inf, {"1-2": 0.002, "3-5": 0.003, "6-8": 0.002}),
)

# (upper bound inclusive, CR limit); the 0.775-0.8 row extends the one before it
GPP3_CR_TABLE: tuple[tuple[float, float | None], ...] = (
    (0.65, None),
    (0.675, 1.6e-3),
    (0.70, 1.5e-3),
    (0.725, 1.4e-3),
    (0.75, 1.3e-3),
    (0.80, 1.2e-3),
    (0.825, 1.1e-3),
    (0.85, 1.1e-3),
    (0.875, 1.0e-3),
    (math.inf, 0.8e-3),
)


def reactive_lookup(cbr: float) -> tuple[ReactiveState, int]:
    """Map a CBR reading to the reactive state and its T_off in ms.

    Rows are half-open [lo, hi): a reading on a boundary lands in the upper row.
    """
    for upper, state, t_off in REACTIVE_TABLE:
        if cbr < upper:
            return state, t_off
    return REACTIVE_TABLE[-1][1], REACTIVE_TABLE[-1][2]


def rri_lookup_target(cbr: float) -> int:
    return reactive_lookup(cbr)[1]


def _as_table(table: CrTable | str) -> CrTable:
    try:
        return CrTable(table)
    except ValueError as e:
        raise ConfigurationError(
            f"unknown CR table {table!r}", field="controller.table"
        ) from e


def cr_limit(
    table: CrTable | str,
    cbr: float,
    priority: str = "6-8",
    aggressive_shift: float = 0.45,
) -> float | None:
    """Maximum channel occupancy ratio allowed at a CBR reading.

    Rows are (lo, hi]. The aggressive table is the 3GPP table with every CBR
    threshold moved down by `aggressive_shift`.

    Returns:
        The limit, or None when the table imposes none.

    Raises:
        ConfigurationError: unknown table or ETSI priority group.
    """
    table = _as_table(table)
    if table is CrTable.ETSI:
        for upper, limits in ETSI_CR_TABLE:
            if cbr <= upper:
                if priority not in limits:
                    raise ConfigurationError(
                        f"unknown priority group {priority!r}",
                        field="controller.etsi_priority",
                    )
                return limits[priority]
    shift = aggressive_shift if table is CrTable.AGGRESSIVE else 0.0
    for upper, limit in GPP3_CR_TABLE:
        if cbr <= round(upper - shift, 10):
            return limit
    return GPP3_CR_TABLE[-1][1]


def steady_state_cr(subchannels_per_tx: int, num_subchannels: int, rri: int) -> float:
    """CR of a vehicle that transmits on every reserved opportunity."""
    return subchannels_per_tx * (1000.0 / rri) / (1000.0 * num_subchannels)


def rri_crlimit_target(
    cbr: float,
    subchannels_per_tx: int,
    num_subchannels: int,
    table: CrTable | str = CrTable.GPP3,
    priority: str = "6-8",
    aggressive_shift: float = 0.45,
    default_rri: int = 100,
) -> int:
    """Smallest allowed RRI whose steady-state CR respects the current limit."""
    limit = cr_limit(table, cbr, priority, aggressive_shift)
    if limit is None:
        return default_rri
    for rri in ALLOWED_RRIS:
        cr = steady_state_cr(subchannels_per_tx, num_subchannels, rri)
        if cr <= limit + 1e-12:
            return rri
    return ALLOWED_RRIS[-1]


def rri_crlimit_settle(
    cbr: float,
    current_rri: int,
    subchannels_per_tx: int,
    num_subchannels: int,
    table: CrTable | str = CrTable.GPP3,
    priority: str = "6-8",
    aggressive_shift: float = 0.45,
    default_rri: int = 100,
) -> int:
    """Smallest allowed RRI that still meets the CR limit once the load follows it.

    The channel load is taken to scale with the packet rate: at `rri` the CBR
    read under `current_rri` becomes cbr * current_rri / rri.
    """
    for rri in ALLOWED_RRIS:
        expected = min(1.0, cbr * current_rri / rri)
        target = rri_crlimit_target(
            expected,
            subchannels_per_tx,
            num_subchannels,
            table=table,
            priority=priority,
            aggressive_shift=aggressive_shift,
            default_rri=default_rri,
        )
        if target <= rri:
            return rri
    return ALLOWED_RRIS[-1]
