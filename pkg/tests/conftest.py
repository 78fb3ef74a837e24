import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

from actdep import Engine, EngineConfig, load_bundle_dir  # noqa: E402
from actdep.model import (  # noqa: E402
    ActivityRequest,
    DependencySpec,
    PhaseDependencies,
    TransitionDependencyKey,
)
from actdep.policy import ActivityDecl, PolicyBundle  # noqa: E402
from actdep.states import ActivityState  # noqa: E402


def drain(gen):
    """Run a resolution generator to completion, returning its result."""
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value


def make_bundle(activities, dod=(), requests=(), objects=None, dependencies=None):
    """Assemble a bundle in memory for synthetic dependency shapes.

    ``activities`` maps name -> initial state token (all mutable);
    ``dod`` entries are (activity, current, desired, [(child, desired)]).
    State tokens may be given as plain strings throughout.
    """

    def norm(spec: DependencySpec) -> DependencySpec:
        desired = spec.desired_state
        if isinstance(desired, str):
            desired = ActivityState(desired)
        return DependencySpec(spec.activity, desired)

    return PolicyBundle(
        activities={
            name: ActivityDecl(state=ActivityState(token), mutable=True)
            for name, token in activities.items()
        },
        objects=dict(objects or {}),
        operations={},
        dependencies={
            key: PhaseDependencies(
                pre=tuple(norm(s) for s in phases.pre),
                ongoing=tuple(norm(s) for s in phases.ongoing),
                post=tuple(norm(s) for s in phases.post),
            )
            for key, phases in (dependencies or {}).items()
        },
        dod={
            TransitionDependencyKey(
                act, ActivityState(cur), ActivityState(des)
            ): tuple(DependencySpec(c, ActivityState(d)) for c, d in children)
            for act, cur, des, children in dod
        },
        requests=[ActivityRequest(*pair) for pair in requests],
    )


def fixture_dir(name: str) -> Path:
    return FIXTURES / name


def load_fixture(name: str):
    return load_bundle_dir(fixture_dir(name))


def make_engine(name: str, **config) -> Engine:
    return Engine(load_fixture(name), EngineConfig(**config) if config else None)


@pytest.fixture
def farm_bundle():
    return load_fixture("smart-farming")


@pytest.fixture
def bundle_copy(tmp_path):
    """Copy a fixture bundle into tmp_path so tests can corrupt files."""

    def copy(name: str) -> Path:
        dest = tmp_path / name
        shutil.copytree(fixture_dir(name), dest)
        return dest

    return copy
