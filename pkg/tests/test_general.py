import math
import random

import pytest

from _families import fair_bits, never_event, ring_instance
from resilient_lll.config import relaxed_config
from resilient_lll.errors import InputError
from resilient_lll.graph import Partition
from resilient_lll.general import (
    choose_parts,
    criterion_check,
    max_parts,
    preset_parts,
    resilience_certificate,
    solve_general,
)
from resilient_lll.model import (
    brute_force_solve,
    build_instance,
    check_assignment,
)
from resilient_lll.probability import event_probability
from resilient_lll.seeds import derive_seed
from resilient_lll import solver


def test_criterion_zero_probability_instance():
    vs = fair_bits(4)
    inst = build_instance(vs, [never_event(i, (i, (i + 1) % 4)) for i in range(4)])
    report = criterion_check(inst, 1, c=1.0)
    assert report.ok and report.margin == math.inf and report.exact


def test_criterion_boundary_is_inclusive():
    # ring events have p = 2^-3 with no private bits; with c*d_vars/r = 3
    # the bound is exactly p.
    inst = ring_instance(6, privates=0)
    assert inst.d_vars == 2
    report = criterion_check(inst, 1, c=1.5)
    assert report.p == pytest.approx(2 ** -3)
    assert report.bound == pytest.approx(2 ** -3)
    assert report.ok


def test_criterion_p_matches_per_event_maximum():
    inst = ring_instance(10, privates=2)
    report = criterion_check(inst, 1, c=0.5)
    brute_max = max(
        event_probability(inst, a).value for a in range(inst.event_count)
    )
    assert report.p == pytest.approx(brute_max)


def test_criterion_r_range_validated():
    inst = ring_instance(8, privates=1)
    with pytest.raises(InputError):
        criterion_check(inst, 0, c=1.0)
    with pytest.raises(InputError):
        criterion_check(inst, max_parts(inst.d_vars) + 1, c=1.0)


def test_part_helpers():
    assert max_parts(1) == 1
    assert max_parts(16) == 4
    assert choose_parts(16, 0.0, 1.0) == 1
    assert choose_parts(16, 2 ** -8, 1.0) == 2
    assert preset_parts(16, "max-parts") == 4
    assert preset_parts(16, "log-parts") == 4
    assert preset_parts(64, "log-parts") == 6


def test_certificate_zero_probability_passes():
    vs = fair_bits(4)
    inst = build_instance(vs, [never_event(i, (i, (i + 1) % 4)) for i in range(4)])
    cert = resilience_certificate(inst, Partition.singleton(4), relaxed_config())
    assert cert.value == 0.0 and cert.passes


def subset_count_oracle(inst, part, cfg, p_by_event):
    """Re-derive the certificate by literally enumerating the distinct swap
    sets: every nonempty same-part subset of the inclusive allocation
    neighborhood, plus the empty set once."""
    amp = max(inst.d, 1) ** cfg.c3
    best = 0.0
    for ev in inst.events:
        hood = {ev.event_id, *inst.alloc_graph.neighbors(ev.event_id)}
        distinct_swaps = 1  # the empty set, shared by every part
        for i in range(part.part_count):
            members = [b for b in hood if part.part_of(b) == i]
            for mask in range(1, 1 << len(members)):
                distinct_swaps += 1
        best = max(best, distinct_swaps * p_by_event[ev.event_id] * amp)
    return best


def test_certificate_matches_subset_count_oracle():
    inst = ring_instance(10, privates=3)
    cfg = relaxed_config()
    rng = random.Random(5)
    part = Partition(3, tuple(rng.randrange(3) for _ in range(10)))
    p_by_event = {
        a: event_probability(inst, a).value for a in range(inst.event_count)
    }
    cert = resilience_certificate(inst, part, cfg, keep_per_event=True)
    oracle = subset_count_oracle(inst, part, cfg, p_by_event)
    assert cert.value == pytest.approx(oracle, rel=1e-12)


def test_certificate_below_uniform_envelope():
    # Whenever per-part loads respect the gamma bound (trivially true at
    # gamma = 99 on small instances) the exact certificate is dominated.
    inst = ring_instance(12, privates=2)
    cfg = relaxed_config()
    rng = random.Random(7)
    for r in (1, 2, 3):
        part = Partition(r, tuple(rng.randrange(r) for _ in range(12)))
        cert = resilience_certificate(inst, part, cfg)
        assert cert.value <= cert.uniform_bound + 1e-12


def refine_partition(part, rng):
    """Split one nonempty part in two at random."""
    parts = part.parts()
    splittable = [i for i, members in enumerate(parts) if len(members) >= 2]
    if not splittable:
        return None
    target = rng.choice(splittable)
    assignment = list(part.assignment)
    new_index = part.part_count
    members = parts[target]
    chosen = rng.sample(members, len(members) // 2)
    for m in chosen:
        assignment[m] = new_index
    return Partition(part.part_count + 1, tuple(assignment))


def test_certificate_monotone_under_refinement():
    inst = ring_instance(12, privates=2)
    cfg = relaxed_config()
    rng = random.Random(11)
    part = Partition.singleton(12)
    for _ in range(6):
        refined = refine_partition(part, rng)
        if refined is None:
            break
        before = resilience_certificate(inst, part, cfg).value
        after = resilience_certificate(inst, refined, cfg).value
        assert after <= before + 1e-12
        part = refined


def test_solve_general_r1_equals_trivial_partition_solve():
    inst = ring_instance(10, privates=4)
    cfg = relaxed_config()
    seed = 31
    res = solve_general(inst, 1, cfg, seed)
    direct = solver.solve(
        inst, Partition.singleton(inst.event_count), cfg, derive_seed(seed, "solve")
    )
    assert res.assignment == direct.assignment
    assert res.partition.part_count == 1


def test_solve_general_small_instance_brute_checked():
    inst = ring_instance(4, privates=2)  # 12 bits total
    assert brute_force_solve(inst) is not None
    cfg = relaxed_config()
    res = solve_general(inst, 1, cfg, seed=3)
    assert check_assignment(inst, res.assignment).valid


def test_solve_general_strict_mode_rejects_weak_criterion():
    inst = ring_instance(8, privates=0)  # p = 1/8, far above strict bound
    cfg = relaxed_config()
    with pytest.raises(InputError):
        solve_general(inst, 1, cfg, seed=0, mode="strict", c=40.0)


def test_solve_general_relaxed_mode_records_warnings():
    inst = ring_instance(8, privates=0)
    cfg = relaxed_config()
    res = solve_general(inst, 1, cfg, seed=1, c=40.0)
    assert res.warnings
    assert check_assignment(inst, res.assignment).valid


def test_solve_general_output_always_validates():
    cfg = relaxed_config()
    for seed in range(6):
        inst = ring_instance(20, privates=4)
        res = solve_general(inst, 2, cfg, seed=seed)
        assert check_assignment(inst, res.assignment).valid
        assert res.rounds_used == 5 * res.partition.part_count + 2
