"""Core record types shared by the policy store, resolver, and engine."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .states import ActivityState

PHASES = ("pre", "ongoing", "post")

# Full verdict vocabulary. A finished decision carries allowed, denied, or
# revoked; continued and completed appear as per-phase outcomes (each
# surviving ongoing tick, and a post phase that ran).
VERDICTS = ("allowed", "denied", "continued", "revoked", "completed")

TRACE_KINDS = ("check", "update", "lock", "wait", "unlock")


@dataclass
class ActivityRecord:
    """Live state of one activity.

    ``semaphore`` is binary: 1 means unlocked, 0 means some resolution pass
    holds the activity. ``assigned_desired_state`` and
    ``has_conflicting_desired_state`` mirror the conflict annotation of the
    most recent pass that touched the record; the authoritative bookkeeping
    lives on the pass itself.
    """

    id: str
    current_state: ActivityState
    mutable: bool = True
    semaphore: int = 1
    assigned_desired_state: Optional[ActivityState] = None
    has_conflicting_desired_state: bool = False


@dataclass(frozen=True)
class ActivityRequest:
    source: str
    activity: str


@dataclass(frozen=True)
class DependencySpec:
    """One dependent activity and the state it must be in."""

    activity: str
    desired_state: ActivityState


@dataclass(frozen=True)
class PhaseDependencies:
    """Dependency lists for one (activity, object), split by phase.

    File order is preserved; the resolver walks these lists in order.
    """

    pre: tuple[DependencySpec, ...] = ()
    ongoing: tuple[DependencySpec, ...] = ()
    post: tuple[DependencySpec, ...] = ()

    def for_phase(self, phase: str) -> tuple[DependencySpec, ...]:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        return getattr(self, phase)


@dataclass(frozen=True)
class TransitionDependencyKey:
    """Keys the second-level dependency map: what ``activity`` needs before
    it may move from ``current`` to ``desired``."""

    activity: str
    current: ActivityState
    desired: ActivityState


@dataclass(frozen=True)
class TraceEvent:
    """One step of a resolution pass, suitable for line-delimited output."""

    pass_id: str
    kind: str  # one of TRACE_KINDS
    activity: str
    from_state: Optional[ActivityState] = None
    to_state: Optional[ActivityState] = None

    def to_record(self) -> dict:
        return {
            "pass": self.pass_id,
            "kind": self.kind,
            "activity": self.activity,
            "from": self.from_state.value if self.from_state else None,
            "to": self.to_state.value if self.to_state else None,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))


@dataclass
class PhaseOutcome:
    """Counters and result for one phase of one decision."""

    ndc: int = 0
    ndu: int = 0
    outcome: str = ""
    elapsed_ms: float = 0.0


@dataclass
class Decision:
    """The engine's answer to one activity request."""

    verdict: str
    request: ActivityRequest
    object: Optional[str] = None
    operation: Optional[str] = None
    phases: dict[str, PhaseOutcome] = field(default_factory=dict)
    reason: Optional[str] = None
    pass_id: str = ""
    trace: list[TraceEvent] = field(default_factory=list)
    # States observed at the instant the verdict turned allowed; lets a
    # caller re-evaluate the admission condition on a frozen snapshot.
    admit_snapshot: dict[str, ActivityState] = field(default_factory=dict)

    @property
    def ndc(self) -> int:
        return sum(p.ndc for p in self.phases.values())

    @property
    def ndu(self) -> int:
        return sum(p.ndu for p in self.phases.values())

    def to_record(self, include_elapsed: bool = True) -> dict:
        phases = {}
        for name in PHASES:
            if name not in self.phases:
                continue
            p = self.phases[name]
            row = {"ndc": p.ndc, "ndu": p.ndu, "outcome": p.outcome}
            if include_elapsed:
                row["elapsed_ms"] = round(p.elapsed_ms, 3)
            phases[name] = row
        record = {
            "verdict": self.verdict,
            "source": self.request.source,
            "activity": self.request.activity,
            "object": self.object,
            "operation": self.operation,
            "phases": phases,
        }
        if self.reason:
            record["reason"] = self.reason
        return record


@dataclass
class BenchRow:
    """Aggregate counters for one batch of identical requests."""

    request_count: int
    phases: dict[str, PhaseOutcome]

    def to_record(self) -> dict:
        return {
            "request_count": self.request_count,
            "phases": {
                name: {
                    "ndc": p.ndc,
                    "ndu": p.ndu,
                    "elapsed_ms": round(p.elapsed_ms, 3),
                }
                for name, p in self.phases.items()
            },
        }


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
