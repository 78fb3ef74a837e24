"""Acceptance gate: seven behaviour guarantees, one verdict line each.

Each test covers one guarantee and prints ``ACCEPTANCE n PASS/FAIL`` when
it finishes. Run ``pytest tests/test_acceptance.py -v -s`` to see the
verdict lines interleaved with pytest's own report.
"""

import contextlib
import io
import json
import random
import time

import pytest

from actdep import Engine, EngineConfig, cli
from actdep.errors import CycleDetected
from actdep.graph import DependencyGraph, analyze_bundle, detect_cycles
from actdep.model import ActivityRequest, DependencySpec, PhaseDependencies
from actdep.model import TransitionDependencyKey
from actdep.resolver import ResolutionPass, Resolver
from actdep.states import ActivityState, valid_transition
from actdep.store import StateStore

from conftest import fixture_dir, load_fixture, make_bundle, make_engine

S = ActivityState


@contextlib.contextmanager
def verdict(number, title):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {number} FAIL {title}")
        raise
    print(f"\nACCEPTANCE {number} PASS {title} ({time.perf_counter() - started:.2f}s)")


def run_cli(*argv):
    """Invoke the CLI in process, independent of pytest's capture mode."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


# -- 1: reference lifecycles ----------------------------------------------

GOLDEN = [
    ("force-generation", "robot", "forceGeneration", "allowed",
     {"forceGeneration": S.INACTIVE, "vibrationMonitoring": S.RUNNING}),
    ("news-playback", "houseOwner", "playingNews", "allowed",
     {"playingNews": S.INACTIVE, "playingSong": S.INACTIVE}),
    ("hydrotreating", "productionWorker", "hydrotreating", "allowed",
     {"hydrotreating": S.INACTIVE, "oilPumping": S.RUNNING}),
    ("cooling-revocation", "farmManager", "cooling", "revoked",
     {"cooling": S.INACTIVE, "thermalImaging": S.INACTIVE}),
    ("greenhouse-cooling", "farmManager", "cooling", "allowed",
     {"cooling": S.INACTIVE, "humidifying": S.RUNNING}),
    ("floor-cleaning", "floorWorker", "floorCleaning", "allowed",
     {"floorCleaning": S.INACTIVE, "movingObjects": S.INACTIVE}),
]


def test_criterion_1_reference_lifecycles():
    with verdict(1, "six reference lifecycles reach the documented verdicts"):
        started = time.perf_counter()
        for fixture, source, activity, want, final in GOLDEN:
            engine = make_engine(fixture)
            decision = engine.run_lifecycle(ActivityRequest(source, activity))
            assert decision.verdict == want, fixture
            for name, state in final.items():
                assert engine.store.current_state(name) == state, (fixture, name)
        assert time.perf_counter() - started < 1.0, "budget: under a second"


# -- 2: counter accounting and determinism ---------------------------------


def test_criterion_2_counters_and_determinism():
    with verdict(2, "chain counters are exact, deterministic runs byte-stable, scaling linear"):
        engine = make_engine("smart-farming")
        decision = engine.run_lifecycle(ActivityRequest("fieldWorker", "sprayingWeedKiller"))
        counters = {
            phase: (outcome.ndc, outcome.ndu)
            for phase, outcome in decision.phases.items()
        }
        assert counters == {"pre": (4, 3), "ongoing": (2, 1), "post": (3, 2)}

        argv = ("decide", "--policy", str(fixture_dir("smart-farming")),
                "--source", "fieldWorker", "--activity", "sprayingWeedKiller",
                "--deterministic")
        assert run_cli(*argv) == run_cli(*argv)
        code, out, _ = run_cli(*argv)
        assert code == 0 and json.loads(out)["verdict"] == "allowed"

        code, out, _ = run_cli(
            "bench", "--policy", str(fixture_dir("smart-farming")),
            "--batches", "10,20,30,40", "--reset-state", "--deterministic")
        assert code == 0
        rows = [json.loads(line) for line in out.partition("\n\n")[2].splitlines()]
        assert [row["request_count"] for row in rows] == [10, 20, 30, 40]
        for row in rows:
            n = row["request_count"]
            for phase, (ndc, ndu) in {"pre": (4, 3), "ongoing": (2, 1), "post": (3, 2)}.items():
                assert row["phases"][phase]["ndc"] == ndc * n, (n, phase)
                assert row["phases"][phase]["ndu"] == ndu * n, (n, phase)


# -- 3: static analysis -----------------------------------------------------


def test_criterion_3_static_analysis():
    with verdict(3, "the cyclic policy is named exactly and the farm policy is clean"):
        cyclic = load_fixture("cyclic-policy")
        assert detect_cycles(DependencyGraph.from_bundle(cyclic)) == [["act1", "act2", "act3"]]
        with pytest.raises(CycleDetected) as err:
            make_engine("cyclic-policy").run_lifecycle(ActivityRequest("operator", "act1"))
        assert err.value.cycles == [["act1", "act2", "act3"]]
        report = analyze_bundle(load_fixture("smart-farming"))
        assert report.ok and report.cycles == [] and report.warnings == []


# -- 4: interleaving safety ---------------------------------------------------

RACE_FINAL = {
    "act1": S.INACTIVE, "act2": S.RUNNING, "act3": S.RUNNING, "act6": S.INACTIVE,
    "act7": S.INACTIVE, "act8": S.RUNNING, "act9": S.RUNNING,
}


def replay_ownership(events):
    """Re-derive lock ownership from the trace; collect violations."""
    owner = {}
    violations = []
    for event in events:
        activity, holder = event.activity, event.pass_id
        if event.kind == "lock":
            if owner.get(activity) is not None:
                violations.append(("second lock while held", activity, holder))
            owner[activity] = holder
        elif event.kind == "unlock":
            if owner.get(activity) != holder:
                violations.append(("unlock by non-owner", activity, holder))
            owner[activity] = None
        elif event.kind == "update":
            if owner.get(activity) not in (None, holder):
                violations.append(("write to foreign-locked activity", activity, holder))
    leftover = sorted(a for a, holder in owner.items() if holder is not None)
    return violations, leftover


def test_criterion_4_contended_runs_converge():
    with verdict(4, "1000 random interleavings: no lock violations, one final state"):
        started = time.perf_counter()
        finals = set()
        for seed in range(1000):
            engine = make_engine("shared-dependency-race", seed=seed)
            decisions = engine.simulate()
            assert all(d.verdict == "allowed" for d in decisions), seed
            violations, leftover = replay_ownership(engine.store.trace)
            assert not violations, (seed, violations[:3])
            assert not leftover, (seed, leftover)
            finals.add(tuple(sorted(engine.store.snapshot().items())))
        assert len(finals) == 1, f"{len(finals)} distinct outcomes"
        assert dict(finals.pop()) == RACE_FINAL
        assert time.perf_counter() - started < 60.0, "budget: under a minute"


# -- 5: transition discipline -------------------------------------------------

LEGAL_PAIRS = frozenset(
    {(s.value, s.value) for s in S}
    | {
        ("inactive", "dormant"),
        ("dormant", "running"), ("dormant", "aborted"),
        ("running", "hold"), ("running", "finished"), ("running", "revoked"),
        ("hold", "running"), ("hold", "finished"), ("hold", "revoked"),
        ("finished", "inactive"), ("revoked", "inactive"), ("aborted", "inactive"),
    }
)

RUNNABLE_FIXTURES = [
    "smart-farming", "force-generation", "news-playback", "hydrotreating",
    "cooling-revocation", "greenhouse-cooling", "floor-cleaning",
    "shared-dependency-resolvable", "independent-paths", "shared-dependency-race",
]


def test_criterion_5_transition_discipline():
    with verdict(5, "every recorded hop is one of the 19 legal pairs, immutables untouched"):
        table = {
            (a.value, b.value) for a in S for b in S if valid_transition(a, b)
        }
        assert table == LEGAL_PAIRS
        assert len(LEGAL_PAIRS) == 19

        for fixture in RUNNABLE_FIXTURES:
            bundle = load_fixture(fixture)
            engine = Engine(bundle, EngineConfig(deterministic=True))
            for request in bundle.requests:
                engine.run_lifecycle(request)
            previous = {name: decl.state for name, decl in bundle.activities.items()}
            for event in engine.store.trace:
                if event.kind != "update":
                    continue
                where = (fixture, event.activity)
                assert bundle.activities[event.activity].mutable, where
                assert event.from_state == previous[event.activity], where
                assert event.from_state != event.to_state, where
                assert valid_transition(event.from_state, event.to_state), where
                previous[event.activity] = event.to_state


# -- 6: conflict flagging oracle ----------------------------------------------


def random_acyclic_bundle(rng):
    """A request root plus random fan-out where children only point upward."""
    tokens = [s.value for s in S]
    n = rng.randint(3, 10)
    names = [f"act{i}" for i in range(n)]
    activities = {name: rng.choice(tokens) for name in names}
    activities[names[0]] = "inactive"

    targets = rng.sample(names[1:], rng.randint(1, min(3, n - 1)))
    pre = tuple(DependencySpec(t, S(rng.choice(tokens))) for t in targets)

    dod = []
    for i in range(1, n - 1):
        name = names[i]
        for desired in rng.sample(tokens, rng.randint(0, 2)):
            if desired == activities[name]:
                continue
            children = rng.sample(names[i + 1:], rng.randint(1, min(2, n - i - 1)))
            dod.append((name, activities[name], desired,
                        [(child, rng.choice(tokens)) for child in children]))

    bundle = make_bundle(
        activities,
        dod=dod,
        requests=[("op", names[0])],
        objects={names[0]: "dev"},
        dependencies={(names[0], "dev"): PhaseDependencies(pre=pre)},
    )
    return bundle, pre


def brute_demands(bundle, specs):
    """Oracle: collect every state demanded per activity, iteratively."""
    per = {}
    stack = [(spec.activity, spec.desired_state) for spec in specs]
    while stack:
        activity, desired = stack.pop()
        per.setdefault(activity, set()).add(desired)
        key = TransitionDependencyKey(activity, bundle.initial_state(activity), desired)
        stack.extend((s.activity, s.desired_state) for s in bundle.get_dod(key))
    return per


def test_criterion_6_conflict_flags_match_demand_sets():
    with verdict(6, "200 random policies: flagged iff two distinct states demanded"):
        started = time.perf_counter()
        rng = random.Random(46013)
        flagged_total = 0
        for round_no in range(200):
            bundle, pre = random_acyclic_bundle(rng)
            resolver = Resolver(bundle, StateStore(bundle))
            p = ResolutionPass(f"oracle-{round_no}")
            for spec in pre:
                resolver.annotate_chain(
                    p, spec.activity,
                    resolver.store.current_state(spec.activity),
                    spec.desired_state,
                )
            expected = {
                activity
                for activity, demanded in brute_demands(bundle, pre).items()
                if len(demanded) >= 2
            }
            assert p.conflicted == expected, round_no
            flagged_total += len(expected)
        assert flagged_total > 0, "generator never produced a conflict; oracle is vacuous"
        assert time.perf_counter() - started < 30.0, "budget: under thirty seconds"


# -- 7: idempotent re-resolution ------------------------------------------------


def test_criterion_7_second_sweep_changes_nothing():
    with verdict(7, "re-running resolution after a lifecycle performs zero updates"):
        engine = make_engine("smart-farming")
        decision = engine.run_lifecycle(ActivityRequest("fieldWorker", "sprayingWeedKiller"))
        assert decision.verdict == "allowed"
        for phase in ("pre", "ongoing", "post"):
            outcome = engine.phase_update(phase, "sprayingWeedKiller")
            assert outcome.outcome == "completed", phase
            assert outcome.ndu == 0, phase

        engine = make_engine("news-playback")
        first = engine.phase_update("pre", "playingNews")
        second = engine.phase_update("pre", "playingNews")
        assert first.ndu == 1 and second.ndu == 0
