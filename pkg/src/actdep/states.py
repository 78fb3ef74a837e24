"""Activity life-cycle states and the legal transition relation.

An activity rests in ``inactive`` until it is requested, moves through
``dormant`` while its start is being decided, and then either runs or is
``aborted``. A running activity can pause (``hold``), finish, or be
``revoked`` by the engine; the terminal states decay back to ``inactive``
once post-conditions are settled, which is also what makes an activity
re-requestable.
"""

from __future__ import annotations

from enum import Enum

from .errors import IllegalTransition, UnknownState


class ActivityState(Enum):
    INACTIVE = "inactive"
    DORMANT = "dormant"
    ABORTED = "aborted"
    RUNNING = "running"
    HOLD = "hold"
    REVOKED = "revoked"
    FINISHED = "finished"

    def __str__(self) -> str:
        return self.value


def parse_state(token: object, where: str = "") -> ActivityState:
    """Map a serialized token to a state, or raise UnknownState."""
    if isinstance(token, ActivityState):
        return token
    try:
        return ActivityState(token)
    except ValueError:
        raise UnknownState(token, where) from None


# Successors in preference order. The order matters only when a compound
# move has several shortest decompositions: finished is preferred over
# revoked, so running -> inactive decomposes through finished.
_EDGES: dict[ActivityState, tuple[ActivityState, ...]] = {
    ActivityState.INACTIVE: (ActivityState.DORMANT,),
    ActivityState.DORMANT: (ActivityState.RUNNING, ActivityState.ABORTED),
    ActivityState.RUNNING: (
        ActivityState.FINISHED,
        ActivityState.REVOKED,
        ActivityState.HOLD,
    ),
    ActivityState.HOLD: (
        ActivityState.RUNNING,
        ActivityState.FINISHED,
        ActivityState.REVOKED,
    ),
    ActivityState.FINISHED: (ActivityState.INACTIVE,),
    ActivityState.REVOKED: (ActivityState.INACTIVE,),
    ActivityState.ABORTED: (ActivityState.INACTIVE,),
}


def successors(state: ActivityState) -> tuple[ActivityState, ...]:
    """Directly reachable states, excluding the trivial stay-put."""
    return _EDGES[state]


def valid_transition(current: ActivityState, to: ActivityState) -> bool:
    """True when an activity may move from ``current`` to ``to``.

    Staying in place is always legal; every real move must be one of the
    life-cycle edges.
    """
    return current == to or to in _EDGES[current]


def transition_path(
    current: ActivityState, target: ActivityState
) -> list[ActivityState]:
    """Shortest legal hop sequence from ``current`` to ``target``.

    Returns the full path including both endpoints; a same-state request
    yields the single-element path. BFS with the fixed successor order
    keeps the decomposition deterministic.
    """
    if current == target:
        return [current]
    parent: dict[ActivityState, ActivityState] = {}
    frontier = [current]
    while frontier:
        nxt: list[ActivityState] = []
        for node in frontier:
            for succ in _EDGES[node]:
                if succ in parent or succ == current:
                    continue
                parent[succ] = node
                if succ == target:
                    path = [succ]
                    while path[-1] != current:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return path
                nxt.append(succ)
        frontier = nxt
    # The life-cycle graph is strongly connected, so this is unreachable
    # unless the edge table is edited into a disconnected shape.
    raise IllegalTransition(current, target)
