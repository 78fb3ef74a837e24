"""Loading and indexing of the six-file JSON policy bundle.

A bundle directory holds:

    request.json                    activity requests to replay
    activity.json                   declared activities: initial state, mutability
    object.json                     activity -> object it operates on
    operation.json                  (activity, object) -> operation name
    activityDependencies.json       per (activity, object): pre/ongoing/post lists
    dependenciesOfdependencies.json transition-conditioned second-level lists

Activities are the only identifiers with a declaring file, so reference
checking is: every activity named anywhere must appear in activity.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import (
    DanglingReference,
    DuplicateKey,
    NoObjectForActivity,
    NoOperationForPair,
    ParseError,
    UnknownActivity,
)
from .model import (
    ActivityRequest,
    DependencySpec,
    PhaseDependencies,
    TransitionDependencyKey,
)
from .states import ActivityState, parse_state

FILE_NAMES = {
    "request": "request.json",
    "activity": "activity.json",
    "object": "object.json",
    "operation": "operation.json",
    "dependencies": "activityDependencies.json",
    "dod": "dependenciesOfdependencies.json",
}


@dataclass(frozen=True)
class ActivityDecl:
    """Initial state and mutability as declared in activity.json."""

    state: ActivityState
    mutable: bool


@dataclass
class PolicyBundle:
    """Indexed, validated view of one policy directory."""

    activities: dict[str, ActivityDecl]
    objects: dict[str, str]
    operations: dict[tuple[str, str], str]
    dependencies: dict[tuple[str, str], PhaseDependencies]
    dod: dict[TransitionDependencyKey, tuple[DependencySpec, ...]]
    requests: list[ActivityRequest]
    root: Path | None = field(default=None, compare=False)

    def get_object(self, activity: str) -> str:
        if activity not in self.activities:
            raise UnknownActivity(activity)
        try:
            return self.objects[activity]
        except KeyError:
            raise NoObjectForActivity(activity) from None

    def get_operation(self, activity: str, obj: str) -> str:
        try:
            return self.operations[(activity, obj)]
        except KeyError:
            raise NoOperationForPair(activity, obj) from None

    def get_da(self, activity: str, obj: str, phase: str) -> tuple[DependencySpec, ...]:
        """Dependent activities for one phase; empty when none declared."""
        deps = self.dependencies.get((activity, obj))
        return deps.for_phase(phase) if deps else ()

    def get_dod(
        self, key: TransitionDependencyKey
    ) -> tuple[DependencySpec, ...]:
        """Dependencies-of-dependency for one transition; empty when none."""
        return self.dod.get(key, ())

    def initial_state(self, activity: str) -> ActivityState:
        try:
            return self.activities[activity].state
        except KeyError:
            raise UnknownActivity(activity) from None


def bundle_paths(root: Path | str) -> dict[str, Path]:
    root = Path(root)
    return {key: root / name for key, name in FILE_NAMES.items()}


def _read_json(path: Path, filename: str):
    # Duplicate keys inside JSON objects would silently collapse; catch them.
    def pairs_hook(pairs):
        seen = set()
        for key, _ in pairs:
            if key in seen:
                raise DuplicateKey(filename, key)
            seen.add(key)
        return dict(pairs)

    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text, object_pairs_hook=pairs_hook)
    except json.JSONDecodeError as err:
        raise ParseError(filename, f"invalid JSON at line {err.lineno}: {err.msg}") from None


def _require(cond: bool, filename: str, detail: str) -> None:
    if not cond:
        raise ParseError(filename, detail)


def _dep_list(raw, filename: str, where: str) -> tuple[DependencySpec, ...]:
    _require(isinstance(raw, list), filename, f"{where}: expected a list")
    specs = []
    for item in raw:
        _require(
            isinstance(item, dict) and set(item) == {"activity", "desiredState"},
            filename,
            f"{where}: each entry needs exactly activity and desiredState",
        )
        specs.append(
            DependencySpec(
                activity=item["activity"],
                desired_state=parse_state(item["desiredState"], where),
            )
        )
    return tuple(specs)


def load_bundle(paths: Mapping[str, Path]) -> PolicyBundle:
    """Parse and cross-check the six policy files.

    Raises ParseError / DuplicateKey / UnknownState for malformed content
    and DanglingReference for activities never declared. OSError from
    unreadable files propagates to the caller.
    """
    raw = {key: _read_json(Path(paths[key]), FILE_NAMES[key]) for key in FILE_NAMES}

    fname = FILE_NAMES["activity"]
    _require(isinstance(raw["activity"], dict), fname, "expected an object")
    activities: dict[str, ActivityDecl] = {}
    for name, decl in raw["activity"].items():
        _require(
            isinstance(decl, dict) and set(decl) == {"state", "mutable"},
            fname,
            f"{name}: each activity needs exactly state and mutable",
        )
        _require(isinstance(decl["mutable"], bool), fname, f"{name}: mutable must be a boolean")
        activities[name] = ActivityDecl(
            state=parse_state(decl["state"], name), mutable=decl["mutable"]
        )

    def known(kind: str, name: str) -> str:
        if name not in activities:
            raise DanglingReference(kind, name)
        return name

    fname = FILE_NAMES["object"]
    _require(isinstance(raw["object"], dict), fname, "expected an object")
    objects: dict[str, str] = {}
    for name, obj in raw["object"].items():
        _require(isinstance(obj, str) and obj != "", fname, f"{name}: object must be a name")
        objects[known("object map", name)] = obj

    fname = FILE_NAMES["operation"]
    _require(isinstance(raw["operation"], list), fname, "expected a list")
    operations: dict[tuple[str, str], str] = {}
    for item in raw["operation"]:
        _require(
            isinstance(item, dict) and set(item) == {"activity", "object", "operation"},
            fname,
            "each entry needs exactly activity, object, operation",
        )
        key = (known("operation", item["activity"]), item["object"])
        if key in operations:
            raise DuplicateKey(fname, f"({key[0]}, {key[1]})")
        operations[key] = item["operation"]

    fname = FILE_NAMES["dependencies"]
    _require(isinstance(raw["dependencies"], list), fname, "expected a list")
    dependencies: dict[tuple[str, str], PhaseDependencies] = {}
    for item in raw["dependencies"]:
        _require(
            isinstance(item, dict)
            and set(item) == {"activity", "object", "pre", "ongoing", "post"},
            fname,
            "each entry needs exactly activity, object, pre, ongoing, post",
        )
        act = known("dependency record", item["activity"])
        key = (act, item["object"])
        if key in dependencies:
            raise DuplicateKey(fname, f"({key[0]}, {key[1]})")
        if act not in objects:
            # The engine reaches dependencies through the object map, so a
            # record for an unmapped activity could never fire.
            raise DanglingReference("dependency record without object mapping", act)
        phases = {
            phase: _dep_list(item[phase], fname, f"{act}/{phase}")
            for phase in ("pre", "ongoing", "post")
        }
        for specs in phases.values():
            for spec in specs:
                known("dependency", spec.activity)
        dependencies[key] = PhaseDependencies(**phases)

    fname = FILE_NAMES["dod"]
    _require(isinstance(raw["dod"], list), fname, "expected a list")
    dod: dict[TransitionDependencyKey, tuple[DependencySpec, ...]] = {}
    for item in raw["dod"]:
        _require(
            isinstance(item, dict)
            and set(item) == {"activity", "currentState", "desiredState", "dependencies"},
            fname,
            "each entry needs exactly activity, currentState, desiredState, dependencies",
        )
        act = known("transition dependency", item["activity"])
        key = TransitionDependencyKey(
            activity=act,
            current=parse_state(item["currentState"], act),
            desired=parse_state(item["desiredState"], act),
        )
        _require(
            key.current != key.desired,
            fname,
            f"{act}: currentState and desiredState must differ",
        )
        if key in dod:
            raise DuplicateKey(fname, f"({act}, {key.current}, {key.desired})")
        specs = _dep_list(item["dependencies"], fname, act)
        for spec in specs:
            known("transition dependency", spec.activity)
        dod[key] = specs

    fname = FILE_NAMES["request"]
    _require(isinstance(raw["request"], list), fname, "expected a list")
    requests = []
    for item in raw["request"]:
        _require(
            isinstance(item, dict) and set(item) == {"source", "activity"},
            fname,
            "each entry needs exactly source and activity",
        )
        requests.append(
            ActivityRequest(source=item["source"], activity=known("request", item["activity"]))
        )

    root = Path(next(iter(paths.values()))).parent
    return PolicyBundle(
        activities=activities,
        objects=objects,
        operations=operations,
        dependencies=dependencies,
        dod=dod,
        requests=requests,
        root=root,
    )


def load_bundle_dir(root: Path | str) -> PolicyBundle:
    return load_bundle(bundle_paths(root))
