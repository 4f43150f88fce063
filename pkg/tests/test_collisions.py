import pytest

from cv2x_dcc.models.grant import Grant, SelectionContext
from cv2x_dcc.models.records import CollisionCause
from cv2x_dcc.services.collisions import (
    CollisionTracker,
    classify_collision,
    colliding_grant_totals,
)


def _grant(
    grant_id: int,
    owner: int,
    created_at: int = 0,
    start: int = 0,
    rri: int = 100,
    context: SelectionContext = SelectionContext.HAD_FREE,
    missed_at: list[int] | None = None,
) -> Grant:
    return Grant(
        owner=owner,
        subframe_offset=0,
        subchannel_start=start,
        subchannel_width=2,
        rri=rri,
        rrc=10,
        created_at=created_at,
        selection_context=context,
        next_opportunity=created_at + 10,
        grant_id=grant_id,
        missed_at=missed_at or [],
    )


def test_simultaneous_selection():
    a = _grant(1, 0)
    b = _grant(2, 1)

    assert classify_collision(a, b) is CollisionCause.TSIM


def test_no_free_candidates():
    a = _grant(1, 0)
    b = _grant(2, 1, context=SelectionContext.NO_FREE)

    assert classify_collision(a, b) is CollisionCause.NF


@pytest.mark.parametrize(
    "missed, cause",
    [(4000, CollisionCause.MT), (3999, CollisionCause.NF), (5000, CollisionCause.NF)],
)
def test_missed_transmission_before_selection(missed, cause):
    silent = _grant(1, 0, missed_at=[missed])
    late = _grant(2, 1, created_at=5000, context=SelectionContext.NO_FREE)

    assert classify_collision(silent, late) is cause
    assert classify_collision(late, silent) is cause


def test_missed_transmission_before_retune():
    silent = _grant(1, 0, missed_at=[4000])
    retuned = _grant(2, 1, created_at=0)
    retuned.retuned_at = 4500

    assert classify_collision(silent, retuned) is CollisionCause.MT


def test_missed_transmission_long_before_retune_is_not_counted():
    silent = _grant(1, 0, missed_at=[4000])
    retuned = _grant(2, 1, created_at=0)
    retuned.retuned_at = 6000

    assert classify_collision(silent, retuned) is CollisionCause.TSIM


def test_tracker_counts_an_episode_once():
    tracker = CollisionTracker()
    a = _grant(1, 0)
    b = _grant(2, 1, start=1)

    tracker.observe(10, [a, b])
    tracker.observe(110, [b, a])
    tracker.observe(210, [a, b])

    assert len(tracker.events) == 1
    event = tracker.events[0]
    assert (event.grant_a, event.grant_b) == (1, 2)
    assert event.first_subframe == 10
    assert event.last_subframe == 210
    assert event.recurrences == 3


def test_gap_longer_than_rri_opens_new_episode():
    tracker = CollisionTracker()
    a = _grant(1, 0)
    b = _grant(2, 1)

    tracker.observe(10, [a, b])
    opened = tracker.observe(211, [a, b])

    assert len(opened) == 1
    assert len(tracker.events) == 2


def test_disjoint_subchannels_do_not_collide():
    tracker = CollisionTracker()

    tracker.observe(10, [_grant(1, 0, start=0), _grant(2, 1, start=2)])

    assert tracker.events == []


def test_pairs_beyond_range_cap_are_ignored():
    tracker = CollisionTracker(range_cap=300.0)
    grants = [_grant(1, 0), _grant(2, 1), _grant(3, 2)]
    positions = {0: 0.0, 1: 100.0, 2: 500.0}

    tracker.observe(
        10, grants, distance=lambda i, j: abs(positions[i] - positions[j])
    )

    assert [(e.owner_a, e.owner_b) for e in tracker.events] == [(0, 1)]


def test_totals_by_cause():
    tracker = CollisionTracker()
    tracker.observe(10, [_grant(1, 0), _grant(2, 1)])
    tracker.observe(
        20,
        [_grant(3, 2), _grant(4, 3, context=SelectionContext.NO_FREE)],
    )

    assert colliding_grant_totals(tracker.events) == {
        "gamma": 2,
        "gamma_mt": 0,
        "gamma_nf": 1,
        "gamma_tsim": 1,
    }
