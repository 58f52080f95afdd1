import itertools
import math
import random

import pytest

from resilient_lll.errors import CapacityError, InputError
from resilient_lll.model import (
    CountThreshold,
    EventSpec,
    MaxPartLoad,
    TruthTable,
    VariableSpec,
    brute_force_solve,
    build_instance,
    check_assignment,
    instance_from_dict,
    instance_to_dict,
)


def fair_bits(n):
    return [VariableSpec.fair_bit(i) for i in range(n)]


def all_ones_event(event_id, var_ids):
    return EventSpec(
        event_id,
        tuple(var_ids),
        CountThreshold(groups=(tuple(var_ids),), threshold=len(var_ids), ref_value=1),
    )


def random_instance(n_events, n_vars, arity, seed):
    rng = random.Random(seed)
    events = []
    for a in range(n_events):
        deps = tuple(sorted(rng.sample(range(n_vars), arity)))
        rows = frozenset(
            combo for combo in itertools.product((0, 1), repeat=arity)
            if rng.random() < 0.3
        )
        events.append(EventSpec(a, deps, TruthTable(rows)))
    return build_instance(fair_bits(n_vars), events)


def test_two_events_sharing_a_variable():
    vs = fair_bits(3)
    e0 = all_ones_event(0, [0, 1])
    e1 = all_ones_event(1, [1, 2])
    inst = build_instance(vs, [e0, e1])
    assert inst.dep_graph.edge_count() == 1
    assert inst.d == 1


def test_dep_graph_matches_intersection_oracle():
    inst = random_instance(20, 12, 3, seed=4)
    for a in range(20):
        for b in range(a + 1, 20):
            expected = bool(
                set(inst.events[a].dependent_vars)
                & set(inst.events[b].dependent_vars)
            )
            assert (b in inst.dep_graph.adjacency[a]) == expected


def test_default_allocation_is_lowest_id_dependent_event():
    inst = random_instance(10, 8, 3, seed=1)
    for v in range(inst.var_count):
        dependents = [
            ev.event_id for ev in inst.events if v in ev.dependent_vars
        ]
        assert inst.owner[v] == min(dependents)


def test_degree_relation_invariant():
    for seed in range(6):
        inst = random_instance(15, 10, 3, seed=seed)
        assert inst.d_vars <= inst.d
        if inst.d > 0:
            assert inst.d < 2 * inst.d_vars ** 2


def test_allocation_must_be_dependent():
    vs = fair_bits(2)
    events = [all_ones_event(0, [0]), all_ones_event(1, [1])]
    with pytest.raises(InputError):
        build_instance(vs, events, allocation={0: 1, 1: 0})


def test_dangling_variable_rejected():
    vs = fair_bits(3)
    with pytest.raises(InputError):
        build_instance(vs, [all_ones_event(0, [0, 1])])  # var 2 unowned


def test_predicate_reference_outside_deps_rejected():
    with pytest.raises(InputError):
        EventSpec(0, (0,), CountThreshold(groups=((0, 1),), threshold=1, ref_value=1))


def test_check_assignment_trivia():
    vs = fair_bits(2)
    never = EventSpec(0, (0, 1), TruthTable(frozenset()))
    always = EventSpec(1, (0, 1), TruthTable(frozenset(itertools.product((0, 1), repeat=2))))
    inst = build_instance(vs, [never, always])
    report = check_assignment(inst, {0: 0, 1: 1})
    assert report.violated_events == [1]
    with pytest.raises(InputError):
        check_assignment(inst, {0: 0})


def test_check_assignment_matches_reevaluation():
    inst = random_instance(12, 9, 3, seed=8)
    rng = random.Random(2)
    assignment = {v: rng.randrange(2) for v in range(inst.var_count)}
    report = check_assignment(inst, assignment)
    expected = [
        ev.event_id for ev in inst.events
        if tuple(assignment[v] for v in ev.dependent_vars) in ev.predicate.rows
    ]
    assert report.violated_events == expected


def test_brute_force_trivial_cases():
    vs = fair_bits(2)
    never = EventSpec(0, (0, 1), TruthTable(frozenset()))
    inst = build_instance(vs, [never])
    assert brute_force_solve(inst) == {0: 0, 1: 0}

    always = EventSpec(0, (0, 1), TruthTable(frozenset(itertools.product((0, 1), repeat=2))))
    inst2 = build_instance(vs, [always])
    assert brute_force_solve(inst2) is None


def test_brute_force_on_guaranteed_solvable_instance():
    # e*p*d <= 1 forces existence; validity is checked directly.
    vs = fair_bits(12)
    events = [
        all_ones_event(0, [0, 1, 2, 3]),
        all_ones_event(1, [3, 4, 5, 6]),
        all_ones_event(2, [6, 7, 8, 9]),
        all_ones_event(3, [9, 10, 11, 0]),
    ]
    inst = build_instance(vs, events)
    p = 2 ** -4
    assert math.e * p * inst.d <= 1
    solution = brute_force_solve(inst)
    assert solution is not None
    assert check_assignment(inst, solution).valid


def test_brute_force_capacity_guard():
    vs = fair_bits(30)
    events = [all_ones_event(0, list(range(30)))]
    inst = build_instance(vs, events)
    with pytest.raises(CapacityError):
        brute_force_solve(inst)


def test_max_part_load_and_count_threshold_eval():
    vs = [VariableSpec.uniform(i, 3) for i in range(4)]
    ev = EventSpec(0, (0, 1, 2, 3), MaxPartLoad(counted=(0, 1, 2, 3), threshold=3))
    inst = build_instance(vs, [ev])
    assert inst.events[0].evaluate({0: 1, 1: 1, 2: 1, 3: 0})
    assert not inst.events[0].evaluate({0: 1, 1: 1, 2: 0, 3: 2})

    two_group = EventSpec(
        0,
        (0, 1, 2, 3),
        CountThreshold(groups=((0, 1), (2, 3)), threshold=2, ref_var=0),
    )
    assert two_group.evaluate({0: 2, 1: 2, 2: 0, 3: 1})   # first group fires
    assert two_group.evaluate({0: 2, 1: 0, 2: 2, 3: 2})   # second group fires
    assert not two_group.evaluate({0: 2, 1: 0, 2: 2, 3: 1})


def test_structurally_false_detection():
    ev = EventSpec(0, (0, 1), MaxPartLoad(counted=(0, 1), threshold=5))
    assert ev.structurally_false()
    ev2 = EventSpec(0, (0, 1), CountThreshold(groups=((0, 1),), threshold=3, ref_value=1))
    assert ev2.structurally_false()
    ev3 = EventSpec(0, (0, 1), TruthTable(frozenset({(0, 0)})))
    assert not ev3.structurally_false()


def test_weight_validation():
    with pytest.raises(InputError):
        VariableSpec(0, 2, (0.5, 0.6))
    with pytest.raises(InputError):
        VariableSpec(0, 2, (1.2, -0.2))
    VariableSpec(0, 3, (0.2, 0.3, 0.5))  # ok


def test_serialization_roundtrip():
    inst = random_instance(8, 6, 3, seed=5)
    data = instance_to_dict(inst)
    back = instance_from_dict(data)
    assert back.var_count == inst.var_count
    assert back.owner == inst.owner
    assert back.dep_graph.adjacency == inst.dep_graph.adjacency
    for a, b in zip(inst.events, back.events):
        assert a.dependent_vars == b.dependent_vars
        assert a.predicate == b.predicate

    # Parametric predicates survive too.
    vs = fair_bits(3)
    ev = EventSpec(
        0, (0, 1, 2),
        CountThreshold(groups=((0, 1), (1, 2)), threshold=1.5, ref_var=0),
    )
    ev2 = EventSpec(1, (0, 2), MaxPartLoad(counted=(0, 2), threshold=2))
    inst2 = build_instance(vs, [ev, ev2])
    back2 = instance_from_dict(instance_to_dict(inst2))
    assert back2.events[0].predicate == ev.predicate
    assert back2.events[1].predicate == ev2.predicate
