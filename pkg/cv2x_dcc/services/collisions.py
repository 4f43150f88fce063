import logging
from itertools import combinations
from typing import Callable, Iterable

from cv2x_dcc.models.grant import Grant, SelectionContext
from cv2x_dcc.models.records import CollidingGrantEvent, CollisionCause

logger = logging.getLogger(__name__)


def _selected_at(grant: Grant) -> int:
    """Latest time the grant's resource was chosen or re-timed."""
    if grant.retuned_at is None:
        return grant.created_at
    return max(grant.created_at, grant.retuned_at)


def _silenced_before(grant: Grant, other: Grant, window: int) -> bool:
    selected = _selected_at(other)
    return any(m < selected <= m + window for m in grant.missed_at)



def classify_collision(
    a: Grant, b: Grant, sensing_window: int = 1000
) -> CollisionCause:
    """Attribute a colliding pair of grants to its most likely cause.

    MT: one grant skipped a reservation (so sent no SCI) shortly before the
    other was selected. NF: otherwise, one of them was selected with no
    reservation-free candidate. TSim: the remaining, simultaneous selections.
    """
    if _silenced_before(a, b, sensing_window) or _silenced_before(b, a, sensing_window):
        return CollisionCause.MT
    if SelectionContext.NO_FREE in (a.selection_context, b.selection_context):
        return CollisionCause.NF
    return CollisionCause.TSIM


class CollisionTracker:
    """Detect colliding grant pairs and count each pair once per episode.

    An episode ends when the pair has not overlapped for longer than the larger
    of the two RRIs; a later overlap opens a new event.
    """

    def __init__(self, sensing_window: int = 1000, range_cap: float = 600.0):
        self.sensing_window = sensing_window
        self.range_cap = range_cap
        self.events: list[CollidingGrantEvent] = []
        self._open: dict[tuple[int, int], CollidingGrantEvent] = {}

    def observe(
        self,
        t: int,
        reserved: Iterable[Grant],
        distance: Callable[[int, int], float] | None = None,
    ) -> list[CollidingGrantEvent]:
        """Feed the grants whose reservation falls on subframe `t`.

        Returns:
            Events opened at `t`.
        """
        opened = []
        for a, b in combinations(reserved, 2):
            if a.owner == b.owner or not a.overlaps(b):
                continue
            if distance is not None and distance(a.owner, b.owner) > self.range_cap:
                continue
            if a.grant_id > b.grant_id:
                a, b = b, a
            key = (a.grant_id, b.grant_id)
            event = self._open.get(key)
            if event is not None and t - event.last_subframe <= max(a.rri, b.rri):
                event.last_subframe = t
                event.recurrences += 1
                continue
            event = CollidingGrantEvent(
                grant_a=a.grant_id,
                grant_b=b.grant_id,
                owner_a=a.owner,
                owner_b=b.owner,
                first_subframe=t,
                cause=classify_collision(a, b, self.sensing_window),
                last_subframe=t,
            )
            self._open[key] = event
            self.events.append(event)
            opened.append(event)
        return opened


def colliding_grant_totals(
    events: Iterable[CollidingGrantEvent],
) -> dict[str, int]:
    totals = {"gamma": 0, "gamma_mt": 0, "gamma_nf": 0, "gamma_tsim": 0}
    column = {
        CollisionCause.MT: "gamma_mt",
        CollisionCause.NF: "gamma_nf",
        CollisionCause.TSIM: "gamma_tsim",
    }
    for event in events:
        totals["gamma"] += 1
        totals[column[event.cause]] += 1
    return totals
