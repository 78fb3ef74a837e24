"""Static analysis of a policy bundle's dependency structure.

Builds the directed graph induced by the dependency files, enumerates the
cycles a request could wander into, and classifies activities that are
demanded in more than one state. Both analyses are read-only and run
before any request is admitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .model import PHASES, TransitionDependencyKey
from .policy import PolicyBundle
from .states import ActivityState, transition_path


@dataclass(frozen=True)
class GraphEdge:
    """parent needs child in ``desired`` state; ``via`` names the trigger,
    either a phase or a parent transition written current->desired."""

    parent: str
    child: str
    via: str
    desired: ActivityState


@dataclass
class DependencyGraph:
    # The node set covers what requests can reach plus everything the
    # transition-conditioned records mention; declared-but-unreferenced
    # activities stay out. The adjacency keeps every edge so reachability
    # can be asked for arbitrary roots, not only the listed requests.
    nodes: list[str]
    adjacency: dict[str, list[str]]
    edges: list[GraphEdge]
    roots: list[str]

    @classmethod
    def from_bundle(cls, bundle: PolicyBundle) -> "DependencyGraph":
        edges: list[GraphEdge] = []
        for (activity, _obj), phases in bundle.dependencies.items():
            for phase in PHASES:
                for spec in phases.for_phase(phase):
                    edges.append(GraphEdge(activity, spec.activity, phase, spec.desired_state))
        for key, specs in bundle.dod.items():
            via = f"{key.current.value}->{key.desired.value}"
            for spec in specs:
                edges.append(GraphEdge(key.activity, spec.activity, via, spec.desired_state))

        adjacency: dict[str, list[str]] = {}
        for edge in edges:
            children = adjacency.setdefault(edge.parent, [])
            if edge.child not in children:
                children.append(edge.child)

        roots: list[str] = []
        for request in bundle.requests:
            if request.activity not in roots:
                roots.append(request.activity)

        seeds = list(roots)
        for key, specs in bundle.dod.items():
            seeds.append(key.activity)
            seeds.extend(spec.activity for spec in specs)
        return cls(
            nodes=sorted(reachable_from(adjacency, seeds)),
            adjacency=adjacency,
            edges=edges,
            roots=roots,
        )


def reachable_from(adjacency: Mapping[str, list[str]], seeds: Iterable[str]) -> set[str]:
    seen: set[str] = set()
    stack = list(seeds)
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency.get(node, ()))
    return seen


def elementary_cycles(adjacency: Mapping[str, list[str]]) -> list[list[str]]:
    """All elementary cycles, each once, smallest node first, sorted.

    Every cycle is discovered from its lexicographically smallest node by
    refusing to descend below the start node, so each comes out already in
    canonical rotation.
    """
    everything = set(adjacency)
    for children in adjacency.values():
        everything.update(children)
    order = {name: i for i, name in enumerate(sorted(everything))}
    cycles: list[list[str]] = []

    def dfs(start: str, node: str, path: list[str], on_path: set[str]) -> None:
        for child in adjacency.get(node, ()):
            if order[child] < order[start]:
                continue
            if child == start:
                cycles.append(path.copy())
            elif child not in on_path:
                path.append(child)
                on_path.add(child)
                dfs(start, child, path, on_path)
                on_path.remove(child)
                path.pop()

    for start in sorted(everything):
        dfs(start, start, [start], {start})
    return sorted(cycles)


def detect_cycles(graph: DependencyGraph) -> list[list[str]]:
    """Elementary cycles reachable from any request root."""
    return cycles_reachable(graph, graph.roots)


def _resolution_adjacency(graph: DependencyGraph, root: str) -> dict[str, list[str]]:
    # Resolving a request walks the root's own phase lists and then only
    # transition-conditioned records; a dependent's phase lists are never
    # consulted. Phase edges therefore act only from the root at hand,
    # which keeps mutually pre/post-referencing requests from reading as
    # deadlocks while a chain that circles back to its root still does.
    adjacency: dict[str, list[str]] = {}
    for edge in graph.edges:
        if edge.via in PHASES and edge.parent != root:
            continue
        children = adjacency.setdefault(edge.parent, [])
        if edge.child not in children:
            children.append(edge.child)
    return adjacency


def cycles_reachable(graph: DependencyGraph, roots: Iterable[str]) -> list[list[str]]:
    found: list[list[str]] = []
    for root in roots:
        adjacency = _resolution_adjacency(graph, root)
        reach = reachable_from(adjacency, [root])
        for cycle in elementary_cycles(adjacency):
            # Reaching any one node of a cycle reaches the whole cycle.
            if any(n in reach for n in cycle) and cycle not in found:
                found.append(cycle)
    return sorted(found)


@dataclass(frozen=True)
class ConflictWarning:
    """An activity demanded in more than one state while resolving a root."""

    root: str
    phase: str
    activity: str
    demanded: tuple[ActivityState, ...]
    resolvable: bool

    def describe(self) -> str:
        kind = "resolvable" if self.resolvable else "unsatisfiable"
        states = ", ".join(s.value for s in self.demanded)
        return (
            f"conflict ({kind}): {self.activity} demanded {states} "
            f"during {self.phase} of {self.root}"
        )


def conflict_warnings_for(bundle: PolicyBundle, root: str) -> list[ConflictWarning]:
    """Classify multi-state demands arising from one request root.

    Walks the root's dependency lists in resolution order (file order,
    depth-first through transition-conditioned records keyed by declared
    initial states) and collects the demand sequence per activity. A
    conflict is resolvable when every hand-over from one demanded state to
    the next has a legal path avoiding dormant, i.e. the holder can let go
    without the activity being re-initiated; needing re-initiation while
    held is unsatisfiable. Initial states make this an approximation that
    can over-warn, never under-warn on the declared configuration.
    """
    obj = bundle.objects.get(root)
    if obj is None:
        return []
    warnings: list[ConflictWarning] = []
    for phase in PHASES:
        demands: dict[str, list[ActivityState]] = {}

        def collect(activity: str, desired: ActivityState, stack: tuple) -> None:
            demands.setdefault(activity, []).append(desired)
            current = bundle.initial_state(activity)
            frame = (activity, current, desired)
            if frame in stack:
                return  # cycles are reported by detect_cycles
            key = TransitionDependencyKey(activity, current, desired)
            for spec in bundle.get_dod(key):
                collect(spec.activity, spec.desired_state, stack + (frame,))

        for spec in bundle.get_da(root, obj, phase):
            collect(spec.activity, spec.desired_state, ())

        for activity, sequence in demands.items():
            distinct: list[ActivityState] = []
            for state in sequence:
                if state not in distinct:
                    distinct.append(state)
            if len(distinct) < 2:
                continue
            resolvable = True
            for prev, nxt in zip(sequence, sequence[1:]):
                if prev == nxt:
                    continue
                if ActivityState.DORMANT in transition_path(prev, nxt)[1:]:
                    resolvable = False
                    break
            warnings.append(
                ConflictWarning(
                    root=root,
                    phase=phase,
                    activity=activity,
                    demanded=tuple(distinct),
                    resolvable=resolvable,
                )
            )
    return warnings


def detect_policy_conflicts(bundle: PolicyBundle) -> list[ConflictWarning]:
    """Conflict warnings across all request roots, in request order."""
    warnings: list[ConflictWarning] = []
    seen: set[str] = set()
    for request in bundle.requests:
        if request.activity in seen:
            continue
        seen.add(request.activity)
        warnings.extend(conflict_warnings_for(bundle, request.activity))
    return warnings


@dataclass
class ValidationReport:
    cycles: list[list[str]] = field(default_factory=list)
    warnings: list[ConflictWarning] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Clean means no reachable cycle and no unsatisfiable conflict.

        Resolvable conflicts are the locking mechanism's normal workload
        and only warn.
        """
        return not self.cycles and all(w.resolvable for w in self.warnings)

    def describe(self) -> list[str]:
        lines = []
        for cycle in self.cycles:
            lines.append("cycle: " + " -> ".join(cycle))
        for warning in self.warnings:
            lines.append(warning.describe())
        return lines

    def to_record(self) -> dict:
        return {
            "ok": self.ok,
            "cycles": [list(c) for c in self.cycles],
            "conflicts": [
                {
                    "root": w.root,
                    "phase": w.phase,
                    "activity": w.activity,
                    "demanded": [s.value for s in w.demanded],
                    "resolvable": w.resolvable,
                }
                for w in self.warnings
            ],
        }


def analyze_bundle(bundle: PolicyBundle) -> ValidationReport:
    graph = DependencyGraph.from_bundle(bundle)
    return ValidationReport(
        cycles=detect_cycles(graph),
        warnings=detect_policy_conflicts(bundle),
    )
