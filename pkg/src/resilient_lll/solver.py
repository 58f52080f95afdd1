"""The staged randomized first phase plus end-to-end solve.

Parts of the event partition are processed in order. In iteration i the
not-yet-deferred events of part i draw first-row values for their owned
variables; any event whose vulnerability (conditioned on all currently
committed values) crosses the danger threshold forces the just-sampled
events within one hop to revert all their owned values, and everything
within two hops in later parts to sit the rest of the phase out. Whatever
is left unfixed afterwards is handed to the component solver.

Round accounting uses a fixed five-round schedule per iteration (sample;
share values one hop; danger flags one hop; revert flags one hop; defer
flags two hops counted as two) plus a two-round tail to publish final
values and assemble residual components. Any constant-round schedule
realizing the same information flow would do; this one is pinned so round
counts are comparable across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .config import ThresholdConfig
from .errors import ContractViolation, InputError
from .graph import Partition
from .model import LllInstance, check_assignment
from .probability import VulnerabilityOracle, vulnerability_probability
from .randomness import RandomnessTable
from .seeds import derive_seed
from . import shattering

ROUNDS_PER_ITERATION = 5
ROUNDS_TAIL = 2

UNSAMPLED = "unsampled"
FIXED = "fixed"
REVERTED = "reverted"
DEFERRED = "deferred"


@dataclass
class RunState:
    """Mutable bookkeeping for one staged run."""

    status: list
    fixed: set
    reverted: set
    deferred: set
    history: list           # (F, R, D) frozensets after each iteration; [0] is initial
    sampled_row1: dict      # var id -> committed first-row value
    round_counter: int
    table: RandomnessTable

    def fate(self, a: int) -> str:
        return self.status[a]


@dataclass
class StageReport:
    rounds_used: int
    dangerous_events: tuple
    residual_events: tuple
    residual_component_sizes: tuple
    per_event_fate: dict    # event id -> (status, iteration index)
    fixed_count: int
    reverted_count: int
    deferred_count: int
    residual_variable_count: int
    danger_estimate_modes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rounds_used": self.rounds_used,
            "dangerous_events": list(self.dangerous_events),
            "residual_events": list(self.residual_events),
            "residual_component_sizes": list(self.residual_component_sizes),
            "per_event_fate": {str(k): list(v) for k, v in self.per_event_fate.items()},
            "fixed": self.fixed_count,
            "reverted": self.reverted_count,
            "deferred": self.deferred_count,
            "residual_variables": self.residual_variable_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def run_first_stage(inst: LllInstance, part: Partition, cfg: ThresholdConfig,
                    seed: int, debug: bool = False):
    """Execute the staged phase; deterministic given (inst, part, cfg, seed).

    Returns (RunState, StageReport). A CapacityError from the vulnerability
    oracle aborts the run, naming the offending event and iteration.
    """
    if part.size != inst.event_count:
        raise InputError("partition must cover every event")
    n = inst.event_count
    table = RandomnessTable(inst.variables, derive_seed(seed, "table"))
    oracle = VulnerabilityOracle(inst, part, cfg, seed=derive_seed(seed, "danger"))
    danger_thr = cfg.danger_threshold(inst.d)
    dep = inst.dep_graph

    status = [UNSAMPLED] * n
    F, R, D = set(), set(), set()
    history = [(frozenset(), frozenset(), frozenset())]
    sampled = {}
    fate_iteration = {}
    ever_dangerous = set()
    last_projection = {}
    last_verdict = {}
    estimate_modes = {"exact": 0, "sampled": 0}

    parts = part.parts()
    for i, members in enumerate(parts):
        active = [a for a in members if a not in D]
        for a in active:
            for v in inst.allocated[a]:
                sampled[v] = table.row1(v)
        # Conditioning: committed values of fixed events plus this part's
        # fresh samples. Reverted events' values stay materialized in the
        # table for analysis but are never conditioned on again.
        committed = {}
        for a in F:
            for v in inst.allocated[a]:
                committed[v] = sampled[v]
        for a in active:
            for v in inst.allocated[a]:
                committed[v] = sampled[v]

        dangerous = set()
        for a in range(n):
            deps = inst.events[a].dependent_vars
            projection = tuple((v, committed[v]) for v in deps if v in committed)
            if last_projection.get(a) != projection:
                try:
                    est = oracle.probability(a, dict(projection))
                except Exception as exc:
                    exc.args = (
                        f"danger test failed for event {a} in iteration {i}: "
                        + (str(exc.args[0]) if exc.args else ""),
                    )
                    raise
                # One-sided conservative: sampled estimates get a 2-sigma
                # bump before the comparison, so noise errs toward danger.
                verdict = est.upper(2.0) >= danger_thr
                estimate_modes["exact" if est.exact else "sampled"] += 1
                last_projection[a] = projection
                last_verdict[a] = verdict
            if last_verdict[a]:
                dangerous.add(a)
        ever_dangerous |= dangerous

        newly_reverted = []
        for a in active:
            if a in dangerous or any(b in dangerous for b in dep.neighbors(a)):
                newly_reverted.append(a)
                R.add(a)
                status[a] = REVERTED
                fate_iteration[a] = i
            else:
                F.add(a)
                status[a] = FIXED
                fate_iteration[a] = i
        for a in newly_reverted:
            for b in dep.two_hop(a):
                if part.part_of(b) > i and b not in D:
                    D.add(b)
                    status[b] = DEFERRED
                    fate_iteration[b] = i
        history.append((frozenset(F), frozenset(R), frozenset(D)))
        if debug:
            _assert_local_decisions(inst, part, cfg, i, active, committed,
                                    dangerous, set(newly_reverted), seed)

    state = RunState(
        status=status,
        fixed=F,
        reverted=R,
        deferred=D,
        history=history,
        sampled_row1=sampled,
        round_counter=ROUNDS_PER_ITERATION * part.part_count + ROUNDS_TAIL,
        table=table,
    )
    _validate_state(inst, part, state)

    free_vars = _free_vars(inst, state)
    residual_events = tuple(
        sorted(a for a in range(n)
               if any(v in free_vars for v in inst.events[a].dependent_vars))
    )
    component_sizes = _component_sizes(inst, residual_events, free_vars)
    report = StageReport(
        rounds_used=state.round_counter,
        dangerous_events=tuple(sorted(ever_dangerous)),
        residual_events=residual_events,
        residual_component_sizes=component_sizes,
        per_event_fate={a: (status[a], fate_iteration.get(a, -1)) for a in range(n)},
        fixed_count=len(F),
        reverted_count=len(R),
        deferred_count=len(D),
        residual_variable_count=len(free_vars),
        danger_estimate_modes=estimate_modes,
    )
    return state, report


def _free_vars(inst, state):
    free = set()
    for a in state.reverted | state.deferred:
        free.update(inst.allocated[a])
    return free


def _component_sizes(inst, residual_events, free_vars):
    if not residual_events:
        return ()
    parent = {a: a for a in residual_events}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    var_owner_event = {}
    for a in residual_events:
        for v in inst.events[a].dependent_vars:
            if v in free_vars:
                if v in var_owner_event:
                    ra, rb = find(var_owner_event[v]), find(a)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
                else:
                    var_owner_event[v] = a
    sizes = {}
    for a in residual_events:
        r = find(a)
        sizes[r] = sizes.get(r, 0) + 1
    return tuple(sorted(sizes.values(), reverse=True))


def _validate_state(inst, part, state):
    F, R, D = state.fixed, state.reverted, state.deferred
    if F & R or F & D or R & D:
        raise ContractViolation("fixed/reverted/deferred sets overlap")
    if len(F) + len(R) + len(D) != inst.event_count:
        raise ContractViolation("some event has no terminal fate")
    for prev, cur in zip(state.history, state.history[1:]):
        if not (prev[0] <= cur[0] and prev[1] <= cur[1] and prev[2] <= cur[2]):
            raise ContractViolation("fate sets shrank between iterations")
    expected_sampled = set()
    for a in F | R:
        expected_sampled.update(inst.allocated[a])
    if expected_sampled != set(state.sampled_row1):
        raise ContractViolation(
            "materialized first-row values do not match fixed+reverted owners"
        )


def _assert_local_decisions(inst, part, cfg, iteration, active, committed,
                            dangerous, reverted_now, seed):
    """Debug layer: re-derive each decision from the event's bounded view
    with a fresh oracle, confirming nothing leaked beyond the declared
    radius. Exact-mode verdicts must reproduce bit-for-bit."""
    dep = inst.dep_graph
    for a in active:
        deps = inst.events[a].dependent_vars
        projection = {v: committed[v] for v in deps if v in committed}
        est = vulnerability_probability(
            inst, a, part, projection, cfg, seed=derive_seed(seed, "debug", iteration)
        )
        if est.exact:
            locally_dangerous = est.value >= cfg.danger_threshold(inst.d)
            if locally_dangerous != (a in dangerous):
                raise ContractViolation(
                    f"debug: danger verdict for event {a} not reproducible from "
                    f"its own dependency view at iteration {iteration}"
                )
        should_revert = a in dangerous or any(
            b in dangerous for b in dep.neighbors(a)
        )
        if should_revert != (a in reverted_now):
            raise ContractViolation(
                f"debug: revert decision for event {a} inconsistent with "
                f"1-hop danger view at iteration {iteration}"
            )


@dataclass(frozen=True)
class Residual:
    """The conditioned sub-instance left for the component solver."""

    instance: LllInstance
    fixed_values: dict
    free_vars: frozenset
    live_events: tuple
    satisfied_fixed: tuple
    dropped_events: tuple


def residual_instance(inst: LllInstance, state: RunState,
                      cfg: ThresholdConfig) -> Residual:
    """Restrict to unfixed variables, conditioning events on committed values.

    Fully-decided events that are unsatisfied are dropped; fully-decided
    satisfied events break the stage's guarantee — fatal at guarantee-grade
    constants, recorded otherwise.
    """
    free = frozenset(_free_vars(inst, state))
    fixed_values = {
        v: state.sampled_row1[v]
        for a in state.fixed
        for v in inst.allocated[a]
    }
    live, satisfied_fixed, dropped = [], [], []
    for ev in inst.events:
        if any(v in free for v in ev.dependent_vars):
            live.append(ev.event_id)
        elif ev.evaluate(fixed_values):
            satisfied_fixed.append(ev.event_id)
        else:
            dropped.append(ev.event_id)
    if satisfied_fixed and cfg.guarantee_grade:
        raise ContractViolation(
            f"events {satisfied_fixed} are fully committed yet satisfied; "
            "the staged phase must prevent this at guarantee-grade constants"
        )
    return Residual(
        instance=inst,
        fixed_values=fixed_values,
        free_vars=free,
        live_events=tuple(live),
        satisfied_fixed=tuple(satisfied_fixed),
        dropped_events=tuple(dropped),
    )


@dataclass
class SolveResult:
    assignment: dict
    stage: StageReport
    components: list
    rounds_used: int
    post_resamplings: int

    def to_dict(self) -> dict:
        return {
            "assignment": {str(k): v for k, v in sorted(self.assignment.items())},
            "stage": self.stage.to_dict(),
            "components": self.components,
            "rounds_used": self.rounds_used,
            "post_resamplings": self.post_resamplings,
        }


def solve(inst: LllInstance, part: Partition, cfg: ThresholdConfig,
          seed: int) -> SolveResult:
    """Staged phase, then component solve on the residual.

    The returned assignment always passes check_assignment; failures raise
    (component cap exhausted, or a stage guarantee broke) rather than ever
    returning an invalid assignment.
    """
    state, report = run_first_stage(inst, part, cfg, seed)
    residual = residual_instance(inst, state, cfg)
    if residual.satisfied_fixed:
        raise ContractViolation(
            f"run failed: events {list(residual.satisfied_fixed)} were "
            "committed in a satisfied state"
        )
    try:
        free_assignment, comp_stats = shattering.solve_residual(
            residual, cfg, derive_seed(seed, "post")
        )
    except Exception as exc:
        exc.args = (
            (str(exc.args[0]) if exc.args else "")
            + f" [stage: rounds={report.rounds_used}, "
            f"residual_components={list(report.residual_component_sizes)}, "
            f"reverted={report.reverted_count}, deferred={report.deferred_count}]",
        )
        raise
    assignment = dict(residual.fixed_values)
    assignment.update(free_assignment)
    verdict = check_assignment(inst, assignment)
    if not verdict.valid:
        raise ContractViolation(
            f"solver produced an invalid assignment; violated events "
            f"{verdict.violated_events}"
        )
    return SolveResult(
        assignment=assignment,
        stage=report,
        components=comp_stats,
        rounds_used=report.rounds_used,
        post_resamplings=sum(s.get("resamplings", 0) for s in comp_stats),
    )
