"""Shared runtime state: activity records, binary locks, and the trace.

Every state mutation funnels through this module. A write to an activity
locked by another pass is refused (the caller waits and retries), so lock
ownership is enforced at the single choke point rather than by caller
discipline.
"""

from __future__ import annotations

from typing import Optional

from .errors import IllegalTransition, ImmutableActivity, UnknownActivity
from .model import ActivityRecord, TraceEvent
from .policy import PolicyBundle
from .states import ActivityState, valid_transition


class StateStore:
    def __init__(self, bundle: PolicyBundle):
        self._bundle = bundle
        self.records: dict[str, ActivityRecord] = {}
        self.trace: list[TraceEvent] = []
        self._lock_owner: dict[str, str] = {}
        self._lock_depth: dict[str, int] = {}
        self._active_passes: set[str] = set()
        self.reset()

    def reset(self) -> None:
        """Restore every record to its declared initial state, unlocked."""
        self.records = {
            name: ActivityRecord(id=name, current_state=decl.state, mutable=decl.mutable)
            for name, decl in self._bundle.activities.items()
        }
        self._lock_owner.clear()
        self._lock_depth.clear()

    def record(self, name: str) -> ActivityRecord:
        try:
            return self.records[name]
        except KeyError:
            raise UnknownActivity(name) from None

    def current_state(self, name: str) -> ActivityState:
        return self.record(name).current_state

    def snapshot(self) -> dict[str, ActivityState]:
        return {name: rec.current_state for name, rec in self.records.items()}

    # -- pass bookkeeping -------------------------------------------------

    def begin_pass(self, pass_id: str) -> None:
        # Conflict annotations are per-pass; the record fields are only a
        # mirror for observation. Wipe them when no other pass could be
        # mid-flight, so a fresh pass starts from a blank annotation.
        if not self._active_passes:
            for rec in self.records.values():
                rec.assigned_desired_state = None
                rec.has_conflicting_desired_state = False
        self._active_passes.add(pass_id)

    def end_pass(self, pass_id: str) -> None:
        self._active_passes.discard(pass_id)
        for name, owner in list(self._lock_owner.items()):
            if owner == pass_id:
                self._lock_owner.pop(name)
                self._lock_depth.pop(name, None)
                self.record(name).semaphore = 1
                self._emit(pass_id, "unlock", name)

    # -- locking ----------------------------------------------------------

    def lock_owner(self, name: str) -> Optional[str]:
        return self._lock_owner.get(name)

    def locked_by_other(self, name: str, pass_id: str) -> bool:
        owner = self._lock_owner.get(name)
        return owner is not None and owner != pass_id

    def try_acquire(self, name: str, pass_id: str) -> bool:
        """Take the binary semaphore; reentrant for the owning pass."""
        rec = self.record(name)
        owner = self._lock_owner.get(name)
        if owner == pass_id:
            self._lock_depth[name] += 1
            return True
        if owner is not None:
            return False
        rec.semaphore = 0
        self._lock_owner[name] = pass_id
        self._lock_depth[name] = 1
        self._emit(pass_id, "lock", name)
        return True

    def release(self, name: str, pass_id: str) -> None:
        owner = self._lock_owner.get(name)
        if owner != pass_id:
            raise RuntimeError(f"pass {pass_id} released {name!r} it does not hold")
        self._lock_depth[name] -= 1
        if self._lock_depth[name] == 0:
            del self._lock_owner[name]
            del self._lock_depth[name]
            self.record(name).semaphore = 1
            self._emit(pass_id, "unlock", name)

    def held_by(self, pass_id: str) -> list[str]:
        return [name for name, owner in self._lock_owner.items() if owner == pass_id]

    # -- state changes ----------------------------------------------------

    def apply_transition(self, name: str, to: ActivityState, pass_id: str) -> bool:
        """Apply one life-cycle hop.

        Returns False when the activity is locked by a different pass (the
        caller should wait and retry); raises on illegal moves or immutable
        targets. A same-state request is a silent no-op.
        """
        rec = self.record(name)
        if rec.current_state == to:
            return True
        if self.locked_by_other(name, pass_id):
            return False
        if not rec.mutable:
            raise ImmutableActivity(name)
        if not valid_transition(rec.current_state, to):
            raise IllegalTransition(rec.current_state, to)
        frm = rec.current_state
        rec.current_state = to
        self._emit(pass_id, "update", name, frm, to)
        return True

    # -- trace ------------------------------------------------------------

    def _emit(
        self,
        pass_id: str,
        kind: str,
        activity: str,
        frm: Optional[ActivityState] = None,
        to: Optional[ActivityState] = None,
    ) -> None:
        self.trace.append(
            TraceEvent(pass_id=pass_id, kind=kind, activity=activity, from_state=frm, to_state=to)
        )

    def emit_check(
        self, pass_id: str, activity: str, current: ActivityState, desired: ActivityState
    ) -> None:
        self._emit(pass_id, "check", activity, current, desired)

    def emit_wait(self, pass_id: str, activity: str) -> None:
        self._emit(pass_id, "wait", activity)

    def trace_for(self, pass_id: str) -> list[TraceEvent]:
        return [event for event in self.trace if event.pass_id == pass_id]
