"""Solve the residual instance left by the staged first phase.

The residual splits into connected components over shared free variables;
each component is solved independently, by exhaustive search when its free
assignment space is small and otherwise by resampling: draw all free
variables, then repeatedly pick the lowest-id satisfied event and redraw
its free variables, up to a cap.

This stands in for the deterministic decomposition machinery the round
bounds assume; the checkable contract (a valid assignment per component)
is preserved, round-accounting for this phase is reported as resampling
iterations, not communication rounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import CapacityError, ComponentFailure
from .probability import EXACT_ENUM_CAP, conditional_event_probability
from .seeds import derive_seed, rng_for

EXHAUSTIVE_CAP = 1 << 16


@dataclass(frozen=True)
class ComponentJob:
    """A maximal set of residual events connected through shared free
    variables, plus the frozen first-row values on its boundary."""

    events: tuple
    free_vars: tuple
    conditioning: dict


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def extract_components(residual) -> list:
    """Partition live residual events into free-variable-connected
    components, ordered by smallest member event id."""
    live = residual.live_events
    if not live:
        return []
    uf = _UnionFind(live)
    var_seen = {}
    free = residual.free_vars
    for a in live:
        for v in residual.instance.events[a].dependent_vars:
            if v in free:
                if v in var_seen:
                    uf.union(var_seen[v], a)
                else:
                    var_seen[v] = a
    groups = {}
    for a in live:
        groups.setdefault(uf.find(a), []).append(a)
    jobs = []
    for root in sorted(groups):
        events = tuple(sorted(groups[root]))
        job_free = sorted(
            {v for a in events for v in residual.instance.events[a].dependent_vars
             if v in free}
        )
        conditioning = {
            v: residual.fixed_values[v]
            for a in events
            for v in residual.instance.events[a].dependent_vars
            if v not in free
        }
        jobs.append(ComponentJob(events, tuple(job_free), conditioning))
    return jobs


def _component_criterion(residual, job):
    """e * max conditional event probability * (component degree + 1);
    None when exact conditional enumeration is infeasible."""
    inst = residual.instance
    free = set(job.free_vars)
    p_max = 0.0
    for a in job.events:
        deps = inst.events[a].dependent_vars
        if inst.support([v for v in deps if v in free]) > EXACT_ENUM_CAP:
            return None, None
        est = conditional_event_probability(
            inst, a, row1_fixed=job.conditioning
        )
        p_max = max(p_max, est.value)
    event_set = set(job.events)
    deg = 0
    for a in job.events:
        shared = sum(
            1 for b in inst.dep_graph.neighbors(a)
            if b in event_set and _share_free_var(inst, free, a, b)
        )
        deg = max(deg, shared)
    return math.e * p_max * (deg + 1), p_max


def _share_free_var(inst, free, a, b):
    deps_b = set(inst.events[b].dependent_vars)
    return any(v in deps_b and v in free for v in inst.events[a].dependent_vars)


def solve_component(residual, job: ComponentJob, cfg, seed: int,
                    method: str = "auto"):
    """Assign the component's free variables so no component event holds.

    Returns (assignment over free vars, stats dict). Raises
    ComponentFailure when the resampling cap is exhausted (callers may
    retry under a new seed).
    """
    inst = residual.instance
    support = inst.support(job.free_vars)
    if method == "auto":
        method = "exhaustive" if support <= EXHAUSTIVE_CAP else "resample"
    stats = {
        "size": len(job.events),
        "free_vars": len(job.free_vars),
        "method": method,
        "resamplings": 0,
    }
    criterion, p_max = _component_criterion(residual, job)
    stats["criterion"] = criterion
    stats["max_conditional_p"] = p_max

    values = dict(job.conditioning)
    events = [inst.events[a] for a in job.events]

    if method == "exhaustive":
        if support > EXHAUSTIVE_CAP:
            raise CapacityError(
                f"component at event {job.events[0]}: support {support} too "
                "large for exhaustive search"
            )
        specs = [inst.variables[v] for v in job.free_vars]
        for combo in itertools.product(*(range(s.domain_size) for s in specs)):
            for v, val in zip(job.free_vars, combo):
                values[v] = val
            if not any(ev.evaluate(values) for ev in events):
                return {v: values[v] for v in job.free_vars}, stats
        raise ComponentFailure(
            f"component at event {job.events[0]} has no valid assignment"
        )

    if method != "resample":
        raise CapacityError(f"unknown component method {method!r}")
    rng = rng_for(seed, "component", job.events[0])
    free_of = {
        ev.event_id: [v for v in ev.dependent_vars if v in set(job.free_vars)]
        for ev in events
    }
    for v in job.free_vars:
        values[v] = inst.variables[v].sample(rng)
    cap = cfg.resample_cap_factor * max(len(job.events), 1)
    per_event = dict.fromkeys(job.events, 0)
    while True:
        bad = next((ev for ev in events if ev.evaluate(values)), None)
        if bad is None:
            stats["per_event_resamplings"] = per_event
            return {v: values[v] for v in job.free_vars}, stats
        if stats["resamplings"] >= cap:
            raise ComponentFailure(
                f"component at event {job.events[0]}: resample cap {cap} exhausted"
            )
        for v in free_of[bad.event_id]:
            values[v] = inst.variables[v].sample(rng)
        stats["resamplings"] += 1
        per_event[bad.event_id] += 1


def solve_residual(residual, cfg, seed: int):
    """Solve every component; returns (free-var assignment, per-component
    stats). Components are independent, so any execution order gives the
    same global validity; per-component seeds derive from the component's
    smallest event id."""
    assignment = {}
    all_stats = []
    for job in extract_components(residual):
        part, stats = solve_component(
            residual, job, cfg, derive_seed(seed, "comp", job.events[0])
        )
        assignment.update(part)
        all_stats.append(stats)
    return assignment, all_stats
