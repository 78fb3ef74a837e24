"""Dependency-aware decision engine for long-lived device activities.

Decides whether an activity may start, keep running, and wind down by
checking and, where policy allows, adjusting the states of the activities
it depends on, recursively through their own dependency chains.
"""

from .engine import Engine, EngineConfig, Scheduler
from .errors import (
    ActivityControlError,
    CycleDetected,
    DanglingReference,
    DuplicateKey,
    IllegalTransition,
    ImmutableActivity,
    LockTimeout,
    NoObjectForActivity,
    NoOperationForPair,
    ParseError,
    PolicyConflict,
    PolicyError,
    UnknownActivity,
    UnknownState,
)
from .graph import (
    DependencyGraph,
    ValidationReport,
    analyze_bundle,
    detect_cycles,
    detect_policy_conflicts,
)
from .model import (
    ActivityRecord,
    ActivityRequest,
    Decision,
    DependencySpec,
    PhaseDependencies,
    TransitionDependencyKey,
)
from .policy import PolicyBundle, load_bundle, load_bundle_dir
from .resolver import ResolutionPass, Resolver
from .states import ActivityState, transition_path, valid_transition
from .store import StateStore

__all__ = [
    "ActivityControlError",
    "ActivityRecord",
    "ActivityRequest",
    "ActivityState",
    "CycleDetected",
    "DanglingReference",
    "Decision",
    "DependencyGraph",
    "DependencySpec",
    "DuplicateKey",
    "Engine",
    "EngineConfig",
    "IllegalTransition",
    "ImmutableActivity",
    "LockTimeout",
    "NoObjectForActivity",
    "NoOperationForPair",
    "ParseError",
    "PhaseDependencies",
    "PolicyBundle",
    "PolicyConflict",
    "PolicyError",
    "ResolutionPass",
    "Resolver",
    "Scheduler",
    "StateStore",
    "TransitionDependencyKey",
    "UnknownActivity",
    "UnknownState",
    "ValidationReport",
    "analyze_bundle",
    "detect_cycles",
    "detect_policy_conflicts",
    "load_bundle",
    "load_bundle_dir",
    "transition_path",
    "valid_transition",
]
