"""Request life cycle: admission, ongoing supervision, and wind-down.

A request walks its activity through dormant -> running -> finished ->
inactive, gated at each step by that activity's dependency lists. The
evaluation of one request is a resolution pass, written as a generator so
several passes can interleave under a scheduler; the synchronous entry
points simply drain one pass to completion.

Each phase's update capability can be switched off independently, which
yields the check-only engine variants: a disabled phase turns a failed
check into a final answer instead of an update attempt.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Generator, Iterable, Optional, Sequence

from .errors import (
    ActivityControlError,
    CycleDetected,
    ImmutableActivity,
    LockTimeout,
    PolicyConflict,
)
from .graph import (
    DependencyGraph,
    analyze_bundle,
    conflict_warnings_for,
    cycles_reachable,
)
from .model import ActivityRequest, Decision, PhaseOutcome
from .policy import PolicyBundle
from .resolver import ResolutionPass, Resolver
from .states import ActivityState
from .store import StateStore


@dataclass
class EngineConfig:
    deterministic: bool = False
    seed: Optional[int] = None
    # How many supervision rounds a running activity gets before it is
    # assumed to have finished its work.
    ongoing_ticks: int = 1
    pre_updates: bool = True
    ongoing_updates: bool = True
    post_updates: bool = True
    lock_timeout_s: float = 30.0
    lock_timeout_steps: int = 1_000_000
    # Bound on admission retries when live interference invalidates a
    # just-satisfied pre phase; never hit without concurrent passes.
    admission_rounds: int = 8
    # Optional whole-request wall-clock budget; no default deadline.
    request_deadline_s: Optional[float] = None

    def updates_enabled(self, phase: str) -> bool:
        return {
            "pre": self.pre_updates,
            "ongoing": self.ongoing_updates,
            "post": self.post_updates,
        }[phase]


class Engine:
    def __init__(self, bundle: PolicyBundle, config: Optional[EngineConfig] = None):
        self.bundle = bundle
        self.config = config or EngineConfig()
        self.store = StateStore(bundle)
        self.resolver = Resolver(
            bundle,
            self.store,
            deterministic=self.config.deterministic,
            lock_timeout_s=self.config.lock_timeout_s,
            lock_timeout_steps=self.config.lock_timeout_steps,
        )
        self.graph = DependencyGraph.from_bundle(bundle)
        self.analysis = analyze_bundle(bundle)
        self._pass_ids = itertools.count(1)

    def reset_state(self) -> None:
        self.store.reset()

    # -- public, synchronous ------------------------------------------------

    def run_lifecycle(self, request: ActivityRequest) -> Decision:
        """Decide one request, driving its full life cycle to completion."""
        self.refuse_if_unresolvable(request.activity)
        pass_id = self._next_pass_id()
        return _drain(self.lifecycle_pass(request, pass_id))

    def phase_check(self, phase: str, activity: str, obj: Optional[str] = None) -> bool:
        """True when every dependency of the phase is in its desired state."""
        obj = obj if obj is not None else self.bundle.get_object(activity)
        p = self._open_pass()
        try:
            return _drain(self._phase_check(p, phase, activity, obj))
        finally:
            self.store.end_pass(p.pass_id)

    def phase_update(
        self, phase: str, activity: str, obj: Optional[str] = None
    ) -> PhaseOutcome:
        """Drive the phase's unmet dependencies to their desired states.

        Returns the counters for this sweep; outcome is "completed" when
        every dependency ended up where the policy wants it.
        """
        obj = obj if obj is not None else self.bundle.get_object(activity)
        if not self.config.updates_enabled(phase):
            return PhaseOutcome(outcome="disabled")
        p = self._open_pass()
        scratch = Decision(verdict="denied", request=ActivityRequest("", activity))
        try:
            ok = _drain(self._phase_update_pass(p, phase, activity, obj, scratch))
        finally:
            self.store.end_pass(p.pass_id)
        return PhaseOutcome(
            ndc=p.ndc, ndu=p.ndu, outcome="completed" if ok else "failed"
        )

    def stopped(self, activity: str, obj: Optional[str] = None) -> None:
        """Revoke a running activity (single legal hop to revoked)."""
        self._manual_hop(activity, ActivityState.REVOKED)

    def hold(self, activity: str) -> None:
        """Manual pause control; there is no policy-driven path to hold."""
        self._manual_hop(activity, ActivityState.HOLD)

    def resume(self, activity: str) -> None:
        self._manual_hop(activity, ActivityState.RUNNING)

    def simulate(
        self,
        requests: Optional[Sequence[ActivityRequest]] = None,
        repeat: int = 1,
    ) -> list[Decision]:
        """Run many requests as interleaved passes; decisions in input order.

        Round-robin stepping when the engine is deterministic, otherwise a
        schedule drawn from the configured seed.
        """
        batch = list(requests if requests is not None else self.bundle.requests) * repeat
        for request in batch:
            self.refuse_if_unresolvable(request.activity)
        passes = []
        for request in batch:
            pass_id = self._next_pass_id()
            passes.append((pass_id, self.lifecycle_pass(request, pass_id)))
        scheduler = Scheduler(
            round_robin=self.config.deterministic, seed=self.config.seed
        )
        results = scheduler.run(passes)
        return [results[pass_id] for pass_id, _ in passes]

    def refuse_if_unresolvable(self, activity: str) -> None:
        """Reject requests that static analysis proves cannot resolve."""
        cycles = cycles_reachable(self.graph, [activity])
        if cycles:
            raise CycleDetected(cycles)
        unsatisfiable = [
            w for w in conflict_warnings_for(self.bundle, activity) if not w.resolvable
        ]
        if unsatisfiable:
            raise PolicyConflict("; ".join(w.describe() for w in unsatisfiable))

    # -- the life-cycle pass ------------------------------------------------

    def lifecycle_pass(
        self, request: ActivityRequest, pass_id: str
    ) -> Generator[None, None, Decision]:
        p = ResolutionPass(pass_id=pass_id)
        self.store.begin_pass(pass_id)
        try:
            decision = yield from self._lifecycle(p, request)
        finally:
            self.store.end_pass(pass_id)
        decision.pass_id = pass_id
        decision.trace = self.store.trace_for(pass_id)
        return decision

    def _lifecycle(
        self, p: ResolutionPass, request: ActivityRequest
    ) -> Generator[None, None, Decision]:
        decision = Decision(verdict="denied", request=request)
        activity = request.activity
        try:
            obj = self.bundle.get_object(activity)
            operation = self.bundle.get_operation(activity, obj)
        except ActivityControlError as err:
            decision.reason = str(err)
            return decision
        decision.object = obj
        decision.operation = operation

        current = self.store.current_state(activity)
        if current == ActivityState.ABORTED:
            # A previously denied request parks in aborted; starting over
            # first returns it to inactive.
            yield from self.resolver.drive_to(p, activity, ActivityState.INACTIVE)
            current = self.store.current_state(activity)
        if current != ActivityState.INACTIVE:
            decision.reason = f"activity is {current.value}, not requestable"
            return decision

        yield from self.resolver.drive_to(p, activity, ActivityState.DORMANT)

        allowed = yield from self._resolve_phase(p, "pre", activity, obj, decision)
        if not allowed:
            yield from self.resolver.drive_to(p, activity, ActivityState.ABORTED)
            decision.phases["pre"].outcome = "denied"
            if not decision.reason:
                decision.reason = "pre dependencies not satisfied"
            return decision
        decision.phases["pre"].outcome = "allowed"
        decision.admit_snapshot = self.store.snapshot()
        yield from self.resolver.drive_to(p, activity, ActivityState.RUNNING)
        decision.verdict = "allowed"

        revoked = False
        for _tick in range(self.config.ongoing_ticks):
            ok = yield from self._resolve_phase(p, "ongoing", activity, obj, decision)
            if not ok:
                yield from self._stop(p, activity)
                decision.verdict = "revoked"
                decision.phases["ongoing"].outcome = "revoked"
                if not decision.reason:
                    decision.reason = "ongoing dependencies not satisfied"
                revoked = True
                break
            decision.phases["ongoing"].outcome = "continued"
            yield
        if not revoked:
            yield from self.resolver.drive_to(p, activity, ActivityState.FINISHED)

        post_ok = yield from self._resolve_phase(p, "post", activity, obj, decision)
        decision.phases["post"].outcome = "completed" if post_ok else "incomplete"
        yield from self.resolver.drive_to(p, activity, ActivityState.INACTIVE)
        return decision

    def _resolve_phase(
        self, p: ResolutionPass, phase: str, activity: str, obj: str, decision: Decision
    ) -> Generator[None, None, bool]:
        outcome = decision.phases.setdefault(phase, PhaseOutcome())
        started = time.perf_counter()
        ndc0, ndu0 = p.ndc, p.ndu
        try:
            ok = yield from self._check_then_update(p, phase, activity, obj, decision)
        finally:
            outcome.ndc += p.ndc - ndc0
            outcome.ndu += p.ndu - ndu0
            outcome.elapsed_ms += (time.perf_counter() - started) * 1000.0
        return ok

    def _check_then_update(
        self, p: ResolutionPass, phase: str, activity: str, obj: str, decision: Decision
    ) -> Generator[None, None, bool]:
        rounds = self.config.admission_rounds if phase == "pre" else 1
        for _round in range(max(1, rounds)):
            ok = yield from self._phase_check(p, phase, activity, obj)
            if not ok:
                if not self.config.updates_enabled(phase):
                    return False
                ok = yield from self._phase_update_pass(p, phase, activity, obj, decision)
                if not ok:
                    return False
            if phase != "pre":
                return True
            # Admission must hold at the instant it is granted. The check
            # and update sweeps yield between steps, so re-verify the whole
            # conjunction atomically; a concurrent pass may have moved a
            # dependency in the meantime. Not a dependency examination:
            # no counters, no events.
            if all(
                self.store.current_state(spec.activity) == spec.desired_state
                for spec in self.bundle.get_da(activity, obj, "pre")
            ):
                return True
        decision.reason = "pre dependencies kept moving under concurrent passes"
        return False

    def _phase_check(
        self, p: ResolutionPass, phase: str, activity: str, obj: str
    ) -> Generator[None, None, bool]:
        ok = True
        for spec in self.bundle.get_da(activity, obj, phase):
            current = self.store.current_state(spec.activity)
            p.ndc += 1
            self.store.emit_check(p.pass_id, spec.activity, current, spec.desired_state)
            yield
            if current != spec.desired_state:
                ok = False
        return ok

    def _phase_update_pass(
        self, p: ResolutionPass, phase: str, activity: str, obj: str, decision: Decision
    ) -> Generator[None, None, bool]:
        p.reset_annotation()
        try:
            for spec in self.bundle.get_da(activity, obj, phase):
                if self.store.current_state(spec.activity) == spec.desired_state:
                    continue
                yield from self.resolver.resolve_dependency(p, spec)
            return True
        except (ImmutableActivity, LockTimeout, CycleDetected) as err:
            # Updates already applied stay applied; only the locks go.
            decision.reason = str(err)
            p.failure = str(err)
            self.resolver.release_all(p)
            return False

    def _stop(self, p: ResolutionPass, activity: str) -> Generator[None, None, None]:
        while not self.store.apply_transition(activity, ActivityState.REVOKED, p.pass_id):
            self.store.emit_wait(p.pass_id, activity)
            yield

    # -- plumbing -----------------------------------------------------------

    def _manual_hop(self, activity: str, to: ActivityState) -> None:
        p = self._open_pass()
        try:
            # Synchronous entry point: any lock holder is a suspended pass
            # that cannot release while we spin, so fail instead of waiting.
            if not self.store.apply_transition(activity, to, p.pass_id):
                raise LockTimeout(activity, "held by a suspended pass")
        finally:
            self.store.end_pass(p.pass_id)

    def _next_pass_id(self) -> str:
        return f"p{next(self._pass_ids)}"

    def _open_pass(self) -> ResolutionPass:
        p = ResolutionPass(pass_id=self._next_pass_id())
        self.store.begin_pass(p.pass_id)
        return p


class Scheduler:
    """Steps a set of passes one micro-operation at a time.

    Round-robin rotates the runnable list after every step; the seeded
    mode picks the next pass uniformly at random, so one seed fixes one
    interleaving exactly.
    """

    def __init__(self, *, round_robin: bool = False, seed: Optional[int] = None):
        self.round_robin = round_robin
        self.rng = random.Random(seed)
        self.steps = 0

    def run(
        self, passes: Iterable[tuple[str, Generator[None, None, Decision]]]
    ) -> dict[str, Decision]:
        live = list(passes)
        results: dict[str, Decision] = {}
        while live:
            index = 0 if self.round_robin else self.rng.randrange(len(live))
            pass_id, gen = live[index]
            self.steps += 1
            try:
                next(gen)
            except StopIteration as stop:
                results[pass_id] = stop.value
                live.pop(index)
            else:
                if self.round_robin:
                    live.append(live.pop(0))
        return results


def _drain(gen: Generator[None, None, Decision]):
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value
