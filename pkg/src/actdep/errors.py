"""Exception taxonomy for policy loading, resolution, and enforcement."""

from __future__ import annotations


class ActivityControlError(Exception):
    """Base class for every error this package raises on purpose."""


class PolicyError(ActivityControlError):
    """A policy bundle could not be loaded or fails structural validation."""


class ParseError(PolicyError):
    """A policy file is unreadable as the shape its schema requires."""

    def __init__(self, filename: str, detail: str):
        self.filename = filename
        self.detail = detail
        super().__init__(f"{filename}: {detail}")


class DuplicateKey(PolicyError):
    """The same key is declared twice within one policy file."""

    def __init__(self, filename: str, key: str):
        self.filename = filename
        self.key = key
        super().__init__(f"{filename}: duplicate key {key!r}")


class UnknownState(PolicyError):
    """A state token is not one of the seven activity states."""

    def __init__(self, token: object, where: str = ""):
        self.token = token
        suffix = f" in {where}" if where else ""
        super().__init__(f"unknown state token {token!r}{suffix}")


class DanglingReference(PolicyError):
    """A policy record references an activity that is never declared."""

    def __init__(self, kind: str, name: str):
        self.kind = kind
        self.name = name
        super().__init__(f"{kind} references undeclared activity {name!r}")


class UnknownActivity(ActivityControlError):
    """Lookup of an activity that is not in the bundle."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown activity {name!r}")


class NoObjectForActivity(ActivityControlError):
    """The object map has no entry for the requested activity."""

    def __init__(self, activity: str):
        self.activity = activity
        super().__init__(f"no object mapped for activity {activity!r}")


class NoOperationForPair(ActivityControlError):
    """No operation is declared for an (activity, object) pair."""

    def __init__(self, activity: str, obj: str):
        self.activity = activity
        self.object = obj
        super().__init__(f"no operation for ({activity!r}, {obj!r})")


class IllegalTransition(ActivityControlError):
    """A state change not permitted by the activity life cycle."""

    def __init__(self, from_state, to_state):
        self.from_state = from_state
        self.to_state = to_state
        super().__init__(f"illegal transition {from_state} -> {to_state}")


class ImmutableActivity(ActivityControlError):
    """Attempt to change the state of an activity marked immutable."""

    def __init__(self, activity: str):
        self.activity = activity
        super().__init__(f"activity {activity!r} is immutable")


class CycleDetected(ActivityControlError):
    """A dependency cycle makes the affected requests unresolvable."""

    def __init__(self, cycles):
        self.cycles = [list(c) for c in cycles]
        shown = "; ".join(" -> ".join(c) for c in self.cycles)
        super().__init__(f"dependency cycle: {shown}")


class PolicyConflict(ActivityControlError):
    """Conflicting desired states that no update ordering can satisfy."""

    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(detail)


class LockTimeout(ActivityControlError):
    """Waited too long for another pass to release an activity."""

    def __init__(self, activity: str, waited: str):
        self.activity = activity
        super().__init__(f"timed out waiting for {activity!r} ({waited})")
