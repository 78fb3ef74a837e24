"""Recursive dependency resolution with conflict flagging and locking.

The resolver walks dependency chains in two sweeps per unmet dependency:
an annotation sweep that records every demanded state and flags activities
demanded in two different states, then an update sweep that drives each
chain member to its demanded state, bottom-up. Flagged activities are
locked (binary semaphore) for the duration of the demanding parent's own
transition so a competing chain cannot interleave a contradictory write.

Update sweeps are generators: they yield at every check, state hop, and
lock wait, which is what lets a scheduler interleave several passes
deterministically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Generator, Optional

from .errors import CycleDetected, LockTimeout
from .model import DependencySpec, TransitionDependencyKey
from .policy import PolicyBundle
from .states import ActivityState, transition_path
from .store import StateStore

# A chain frame is identified by what it is trying to do, not just by the
# activity: the same activity may appear twice in a diamond with the same
# demand, which is fine, but re-entering an identical frame means the
# dependency data is cyclic.
_Frame = tuple[str, ActivityState, ActivityState]


@dataclass
class ResolutionPass:
    """Bookkeeping for one request evaluation.

    ``assigned`` holds the first state demanded of each activity during the
    current annotation scope; ``conflicted`` the activities later demanded
    in some other state. Both are scoped to one phase resolution and reset
    by the engine between phases.
    """

    pass_id: str
    ndc: int = 0
    ndu: int = 0
    assigned: dict[str, ActivityState] = field(default_factory=dict)
    conflicted: set[str] = field(default_factory=set)
    visited: set[_Frame] = field(default_factory=set)
    failure: Optional[str] = None

    def reset_annotation(self) -> None:
        self.assigned.clear()
        self.conflicted.clear()


class Resolver:
    def __init__(
        self,
        bundle: PolicyBundle,
        store: StateStore,
        *,
        deterministic: bool = False,
        lock_timeout_s: float = 30.0,
        lock_timeout_steps: int = 1_000_000,
    ):
        self.bundle = bundle
        self.store = store
        self.deterministic = deterministic
        self.lock_timeout_s = lock_timeout_s
        self.lock_timeout_steps = lock_timeout_steps

    # -- annotation sweep ---------------------------------------------------

    def detect_conflicting_desired_state(
        self, p: ResolutionPass, activity: str, desired: ActivityState
    ) -> bool:
        """Record a demanded state; flag the activity on a contradicting one.

        First demand wins the assignment and is not a conflict; any later,
        different demand marks the activity conflicted for the rest of the
        phase. Returns the flag.
        """
        if activity not in p.assigned:
            p.assigned[activity] = desired
        elif p.assigned[activity] != desired:
            p.conflicted.add(activity)
        rec = self.store.record(activity)
        rec.assigned_desired_state = p.assigned[activity]
        rec.has_conflicting_desired_state = activity in p.conflicted
        return activity in p.conflicted

    def annotate_chain(
        self,
        p: ResolutionPass,
        activity: str,
        current: ActivityState,
        desired: ActivityState,
        _stack: tuple[_Frame, ...] = (),
    ) -> None:
        """Walk one dependency chain recording all demanded states.

        Reads states but never writes them, so the whole sweep is atomic
        from the scheduler's point of view.
        """
        self.detect_conflicting_desired_state(p, activity, desired)
        frame = (activity, current, desired)
        if frame in _stack:
            raise CycleDetected([self._cycle_from(_stack, frame)])
        p.visited.add(frame)
        key = TransitionDependencyKey(activity, current, desired)
        for spec in self.bundle.get_dod(key):
            self.annotate_chain(
                p,
                spec.activity,
                self.store.current_state(spec.activity),
                spec.desired_state,
                _stack + (frame,),
            )

    # -- update sweep ---------------------------------------------------------

    def resolve_dependency(
        self, p: ResolutionPass, spec: DependencySpec
    ) -> Generator[None, None, None]:
        """Bring one top-level dependency to its desired state.

        Annotates the chain, resolves it bottom-up, applies the
        dependency's own transition, then releases any locks the chain
        acquired on this dependency's behalf.
        """
        current = self.store.current_state(spec.activity)
        self.annotate_chain(p, spec.activity, current, spec.desired_state)
        resolved, locks = yield from self.recursive_update(
            p, spec.activity, current, spec.desired_state
        )
        yield from self.drive_to(p, spec.activity, resolved)
        p.ndu += 1
        for name in locks:
            self.release_lock(p, name)

    def recursive_update(
        self,
        p: ResolutionPass,
        activity: str,
        current: ActivityState,
        desired: ActivityState,
        _stack: tuple[_Frame, ...] = (),
    ) -> Generator[None, None, tuple[ActivityState, list[str]]]:
        """Resolve everything ``activity`` needs before it may transition.

        Returns the state the caller should now drive ``activity`` to,
        plus the locks acquired here; their purpose ends when the caller
        has applied that transition, so the caller releases them.
        """
        frame = (activity, current, desired)
        if frame in _stack:
            raise CycleDetected([self._cycle_from(_stack, frame)])
        key = TransitionDependencyKey(activity, current, desired)
        acquired: list[str] = []
        for spec in self.bundle.get_dod(key):
            child = spec.activity
            child_current = self.store.current_state(child)
            p.ndc += 1
            self.store.emit_check(p.pass_id, child, child_current, spec.desired_state)
            yield
            if child_current == spec.desired_state:
                continue
            if child in p.conflicted:
                yield from self.acquire_lock(p, child)
                acquired.append(child)
            resolved, child_locks = yield from self.recursive_update(
                p, child, child_current, spec.desired_state, _stack + (frame,)
            )
            yield from self.drive_to(p, child, resolved)
            p.ndu += 1
            for name in child_locks:
                self.release_lock(p, name)
        return desired, acquired

    def drive_to(
        self, p: ResolutionPass, activity: str, target: ActivityState
    ) -> Generator[None, None, None]:
        """Apply life-cycle hops until ``activity`` reaches ``target``.

        The current state is re-read every iteration: while this pass
        waits on a lock, the owner may move the activity, invalidating any
        precomputed hop sequence.
        """
        waits = 0
        started = time.monotonic()
        while True:
            current = self.store.current_state(activity)
            if current == target:
                return
            hop = transition_path(current, target)[1]
            if self.store.apply_transition(activity, hop, p.pass_id):
                yield
            else:
                self.store.emit_wait(p.pass_id, activity)
                waits += 1
                self._check_wait_budget(activity, waits, started)
                yield

    # -- locking ----------------------------------------------------------

    def acquire_lock(
        self, p: ResolutionPass, activity: str
    ) -> Generator[None, None, None]:
        """Take the activity's semaphore, waiting out the current holder."""
        waits = 0
        started = time.monotonic()
        while not self.store.try_acquire(activity, p.pass_id):
            self.store.emit_wait(p.pass_id, activity)
            waits += 1
            self._check_wait_budget(activity, waits, started)
            yield

    def release_lock(self, p: ResolutionPass, activity: str) -> None:
        self.store.release(activity, p.pass_id)

    def release_all(self, p: ResolutionPass) -> None:
        """Drop every lock the pass still holds (failure cleanup)."""
        for name in self.store.held_by(p.pass_id):
            while self.store.lock_owner(name) == p.pass_id:
                self.store.release(name, p.pass_id)

    def _check_wait_budget(self, activity: str, waits: int, started: float) -> None:
        if self.deterministic:
            if waits > self.lock_timeout_steps:
                raise LockTimeout(activity, f"{waits} wait steps")
        elif time.monotonic() - started > self.lock_timeout_s:
            raise LockTimeout(activity, f"{self.lock_timeout_s:.0f}s")

    @staticmethod
    def _cycle_from(stack: tuple[_Frame, ...], frame: _Frame) -> list[str]:
        names = [f[0] for f in stack[stack.index(frame):]]
        return names
