"""Defective vertex and edge colorings by iterated two-way splitting.

A (x, q)-defective coloring uses max_degree/x colors with every vertex
seeing fewer than x + x/q same-color neighbors (vertex kind) or fewer than
x + x/q incident edges of any one color (edge kind). One split halves the
degree-ish quantity; iterating lg(max_degree) - lg(q^2 * lg(q)^4) times
lands at class degree Theta(q^2 * lg(q)^4) while the per-iteration
inductive bound delta/2^i + delta*i/(2^i*q*lg(delta)) is checked after
every iteration.

Each split is produced either by the constraint-avoidance route (build the
two-coloring instance whose bad events are overloaded vertices and run the
general driver) or by deterministic balanced splitting: local-max-cut for
vertices (same-color degree at most floor(deg/2)) and alternating walk
coloring for edges (per-color incident count at most ceil(deg/2), with a
local repair pass for the odd-walk seam). The constraint route's own
preconditions only hold at degrees far beyond desk scale, so the balanced
route is the default whenever they fail or the instance would exceed the
enumeration caps; the split contract is identical either way.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .config import ThresholdConfig, lg
from .errors import ContractViolation, InputError
from .graph import Graph
from .model import CountThreshold, EventSpec, VariableSpec, build_instance
from .seeds import derive_seed, rng_for
from . import general

VERTEX = "vertex"
EDGE = "edge"


# --- parameter arithmetic ---------------------------------------------------

def _lg_clamped(x: float) -> float:
    return max(lg(x), 1.0) if x > 0 else 1.0


def split_threshold(delta: float, q: float) -> float:
    """Bad-event load: delta/2 + delta/(4*q*lg(delta))."""
    if delta <= 0 or q <= 0:
        raise InputError("need positive degree and q")
    return delta / 2 + delta / (4 * q * _lg_clamped(delta))


def split_precondition_ok(delta: float, q: float, log_exponent: int = 3) -> bool:
    """Hardened admissibility: q <= sqrt(delta / lg(delta)^exponent)."""
    if delta < 2:
        return False
    return q <= math.sqrt(delta / lg(delta) ** log_exponent)


def iteration_floor(q: float) -> float:
    """q^2 * lg(q)^4, with lg(q) clamped to 1 below q = 2 so the iteration
    arithmetic stays defined for small q."""
    if q < 1:
        raise InputError("q must be at least 1")
    return q * q * _lg_clamped(q) ** 4


def halving_iterations(delta: int, q: float) -> int:
    """Number of splits: floor(lg(delta) - lg(q^2 lg(q)^4)), at least 0."""
    if delta < 2:
        return 0
    return max(0, math.floor(lg(delta) - lg(iteration_floor(q))))


def inductive_degree(delta: int, q: float, i: int) -> float:
    """Class degree bound entering iteration i (1-based)."""
    L = _lg_clamped(delta)
    return delta / 2 ** (i - 1) + delta * (i - 1) / (2 ** (i - 1) * q * L)


def inductive_bound(delta: int, q: float, i: int) -> float:
    """Class degree bound after iteration i."""
    L = _lg_clamped(delta)
    return delta / 2 ** i + delta * i / (2 ** i * q * L)


def vertex_split_p_bound(delta: float, q: float) -> float:
    """Tail bound on one vertex collecting threshold many same-color
    neighbors under a uniform two-way split."""
    return math.exp(-delta / (24 * (q * _lg_clamped(delta)) ** 2))


def edge_split_p_bound(delta: float, q: float) -> float:
    return 2 * math.exp(-delta / (38 * (q * _lg_clamped(delta)) ** 2))


# --- result type ------------------------------------------------------------

@dataclass
class DefectiveColoring:
    kind: str
    colors: tuple          # per object (vertex id, or index into edges)
    color_count: int
    x: float
    q: float
    defect_bound: float    # strict upper bound: counts must stay below it
    edges: tuple = ()      # object order for edge kind
    history: tuple = ()    # per-iteration measurements

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "color_count": self.color_count,
            "x": self.x,
            "q": self.q,
            "defect_bound": self.defect_bound,
            "colors": list(self.colors),
        }
        if self.kind == EDGE:
            out["edges"] = [list(e) for e in self.edges]
        return out


def defect_violations(g: Graph, coloring: DefectiveColoring) -> list:
    """Objects whose same-color load reaches the defect bound."""
    bad = []
    if coloring.kind == VERTEX:
        for v in range(g.node_count):
            same = sum(
                1 for w in g.neighbors(v)
                if coloring.colors[w] == coloring.colors[v]
            )
            if same >= coloring.defect_bound:
                bad.append({"vertex": v, "count": same})
    else:
        counts = {}
        for (u, v), c in zip(coloring.edges, coloring.colors):
            counts[(u, c)] = counts.get((u, c), 0) + 1
            counts[(v, c)] = counts.get((v, c), 0) + 1
        for (v, c), count in sorted(counts.items()):
            if count >= coloring.defect_bound:
                bad.append({"vertex": v, "color": c, "count": count})
    return bad


# --- deterministic balanced splits -----------------------------------------

def balanced_vertex_split(adjacency, seed: int):
    """Two-color vertices so every vertex has at most floor(deg/2) neighbors
    of its own color: start uniformly, then flip any vertex with a same-color
    majority (each flip grows the bichromatic cut, so this terminates)."""
    n = len(adjacency)
    rng = rng_for(seed, "vsplit")
    bits = [rng.randrange(2) for _ in range(n)]
    same = [
        sum(1 for w in adjacency[v] if bits[w] == bits[v])
        for v in range(n)
    ]
    pending = deque(v for v in range(n) if 2 * same[v] > len(adjacency[v]))
    queued = set(pending)
    while pending:
        v = pending.popleft()
        queued.discard(v)
        deg = len(adjacency[v])
        if 2 * same[v] <= deg:
            continue
        bits[v] ^= 1
        same[v] = deg - same[v]
        for w in adjacency[v]:
            if bits[w] == bits[v]:
                same[w] += 1
                if 2 * same[w] > len(adjacency[w]) and w not in queued:
                    pending.append(w)
                    queued.add(w)
            else:
                same[w] -= 1
    return bits


def balanced_edge_split(n: int, edges, seed: int):
    """Two-color edges so every vertex has at most ceil(deg/2) incident
    edges per color.

    Walk each component along an alternating-color trail: odd-degree
    vertices are tied to a virtual hub so every real vertex is balanced by
    the in/out pairing, and the odd-trail seam lands on the hub whenever one
    exists (otherwise a repair pass shifts the stray unit to a neighbor with
    slack)."""
    m = len(edges)
    degree = [0] * n
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    odd = [v for v in range(n) if degree[v] % 2 == 1]
    hub = n
    all_edges = list(edges) + [(hub, v) for v in odd]
    adjacency = [[] for _ in range(n + 1)]
    for idx, (u, v) in enumerate(all_edges):
        adjacency[u].append((idx, v))
        adjacency[v].append((idx, u))

    used = [False] * len(all_edges)
    pointer = [0] * (n + 1)
    bits = [0] * len(all_edges)

    def walk(start):
        """Hierholzer circuit from start; returns edge ids in circuit order
        (reversed traversal, which preserves consecutive adjacency)."""
        stack = [(start, None)]
        trail = []
        while stack:
            v, entry = stack[-1]
            advanced = False
            while pointer[v] < len(adjacency[v]):
                eid, w = adjacency[v][pointer[v]]
                pointer[v] += 1
                if not used[eid]:
                    used[eid] = True
                    stack.append((w, eid))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if entry is not None:
                    trail.append(entry)
        return trail

    # The hub first, so odd components wrap their seam there; even-degree
    # components start at a minimum-degree vertex, which absorbs any seam
    # with the least damage.
    order = ([hub] if odd else []) + sorted(
        range(n), key=lambda v: (degree[v], v)
    )
    for start in order:
        trail = walk(start)
        for pos, eid in enumerate(trail):
            bits[eid] = pos % 2

    colors = bits[:m]
    _repair_edge_split(n, edges, degree, colors)
    return colors


def _repair_edge_split(n, edges, degree, colors, passes: int = 4):
    counts = {}
    incident = [[] for _ in range(n)]
    for idx, (u, v) in enumerate(edges):
        incident[u].append(idx)
        incident[v].append(idx)
        c = colors[idx]
        counts[(u, c)] = counts.get((u, c), 0) + 1
        counts[(v, c)] = counts.get((v, c), 0) + 1

    def cap(v):
        return (degree[v] + 1) // 2

    for _ in range(passes):
        dirty = False
        for v in range(n):
            for c in (0, 1):
                while counts.get((v, c), 0) > cap(v):
                    moved = False
                    for idx in incident[v]:
                        if colors[idx] != c:
                            continue
                        u, w = edges[idx]
                        other = w if u == v else u
                        if counts.get((other, 1 - c), 0) + 1 <= cap(other):
                            colors[idx] = 1 - c
                            counts[(v, c)] -= 1
                            counts[(v, 1 - c)] = counts.get((v, 1 - c), 0) + 1
                            counts[(other, c)] -= 1
                            counts[(other, 1 - c)] = counts.get((other, 1 - c), 0) + 1
                            moved = True
                            dirty = True
                            break
                    if not moved:
                        break
        if not dirty:
            break


# --- the two-coloring instance ---------------------------------------------

def build_split_instance(g: Graph, kind: str, q: float,
                         delta_current: float | None = None):
    """The instance whose valid assignments are admissible two-way splits.

    One fair bit per object, allocated to the object's own event; the bad
    event fires when some endpoint collects threshold many same-color
    objects. q below 1 is rejected; the asymptotic admissibility window is
    checked by split_precondition_ok and enforced only on strict paths,
    since it excludes every degree reachable in tests.
    """
    if kind not in (VERTEX, EDGE):
        raise InputError(f"kind must be vertex or edge, got {kind!r}")
    if q < 1:
        raise InputError("q must be at least 1")
    delta = delta_current if delta_current is not None else g.max_degree
    if delta < 2:
        raise InputError("degree below 2: splitting is vacuous")
    threshold = split_threshold(delta, q)
    if kind == VERTEX:
        variables = [VariableSpec.fair_bit(v) for v in range(g.node_count)]
        events = []
        allocation = {}
        for v in range(g.node_count):
            deps = tuple(sorted({v, *g.neighbors(v)}))
            groups = (tuple(g.neighbors(v)),) if g.degree(v) else ((v,),)
            thr = threshold if g.degree(v) else g.node_count + 1
            events.append(
                EventSpec(v, deps, CountThreshold(groups=groups, threshold=thr,
                                                  ref_var=v))
            )
            allocation[v] = v
        return build_instance(variables, events, allocation)

    edges = tuple(g.edges())
    index = {e: i for i, e in enumerate(edges)}
    incident = [[] for _ in range(g.node_count)]
    for (u, v), i in index.items():
        incident[u].append(i)
        incident[v].append(i)
    variables = [VariableSpec.fair_bit(i) for i in range(len(edges))]
    events = []
    allocation = {}
    for i, (u, v) in enumerate(edges):
        deps = tuple(sorted(set(incident[u]) | set(incident[v])))
        groups = (tuple(incident[u]), tuple(incident[v]))
        events.append(
            EventSpec(i, deps, CountThreshold(groups=groups, threshold=threshold,
                                              ref_var=i))
        )
        allocation[i] = i
    return build_instance(variables, events, allocation)


# --- splitting dispatch -----------------------------------------------------

def _lll_route_viable(delta: int, q: float, cfg: ThresholdConfig, kind: str) -> bool:
    if delta < 5:
        return False
    swap_hood = delta + 1 if kind == VERTEX else 2 * delta
    return swap_hood <= cfg.subset_cap and split_precondition_ok(delta, q)


def _split_vertex_class(adjacency, q, cfg, seed, method):
    delta = max((len(a) for a in adjacency), default=0)
    if method == "auto":
        method = "lll" if _lll_route_viable(delta, q, cfg, VERTEX) else "balanced"
    if method == "balanced" or delta <= 1:
        return balanced_vertex_split(adjacency, seed), "balanced"
    edges = [
        (v, w) for v in range(len(adjacency)) for w in adjacency[v] if v < w
    ]
    sub = Graph(len(adjacency), edges)
    inst = build_split_instance(sub, VERTEX, q)
    p_bound = min(vertex_split_p_bound(delta, q), 1.0)
    r = general.choose_parts(inst.d_vars, p_bound, cfg.criterion_c)
    res = general.solve_general(inst, r, cfg, seed, p_bound=p_bound, mode="relaxed")
    return [res.assignment[v] for v in range(len(adjacency))], "lll"


def _split_edge_class(n, edges, q, cfg, seed, method):
    degree = [0] * n
    for u, v in edges:
        degree[u] += 1
        degree[v] += 1
    delta = max(degree, default=0)
    if method == "auto":
        method = "lll" if _lll_route_viable(delta, q, cfg, EDGE) else "balanced"
    if method == "balanced" or delta <= 1:
        return balanced_edge_split(n, edges, seed), "balanced"
    sub = Graph(n, edges)
    inst = build_split_instance(sub, EDGE, q)
    order = {e: i for i, e in enumerate(sub.edges())}
    p_bound = min(edge_split_p_bound(delta, q), 1.0)
    r = general.choose_parts(inst.d_vars, p_bound, cfg.criterion_c)
    res = general.solve_general(inst, r, cfg, seed, p_bound=p_bound, mode="relaxed")
    return [res.assignment[order[e]] for e in edges], "lll"


def split_once(g: Graph, kind: str, q: float, cfg: ThresholdConfig, seed: int,
               method: str = "auto") -> DefectiveColoring:
    """One two-way split of the whole graph; every object's same-color load
    stays below delta/2 + delta/(4*q*lg(delta)) whenever that bound is
    achievable at this degree."""
    delta = g.max_degree
    if delta < 1:
        kind_len = g.node_count if kind == VERTEX else 0
        return DefectiveColoring(kind, tuple([0] * kind_len), 2, 0.5, q, 1.0,
                                 edges=tuple(g.edges()))
    threshold = split_threshold(max(delta, 2), q)
    if kind == VERTEX:
        bits, used = _split_vertex_class(
            [list(g.neighbors(v)) for v in range(g.node_count)],
            q, cfg, derive_seed(seed, "vertex_split"), method,
        )
        edges = ()
    else:
        edges = tuple(g.edges())
        bits, used = _split_edge_class(
            g.node_count, edges, q, cfg, derive_seed(seed, "edge_split"), method
        )
    coloring = DefectiveColoring(
        kind=kind,
        colors=tuple(bits),
        color_count=2,
        x=delta / 2,
        q=2 * q * _lg_clamped(delta),
        defect_bound=threshold,
        edges=edges,
        history=(({"method": used, "delta": delta}),),
    )
    achievable = threshold > (delta // 2 if kind == VERTEX else (delta + 1) // 2)
    violations = defect_violations(g, coloring)
    if violations and achievable:
        raise ContractViolation(
            f"two-way split exceeded its load bound: {violations[:3]}"
        )
    return coloring


def iterate_halving(g: Graph, kind: str, q: float, cfg: ThresholdConfig,
                    seed: int, method: str = "auto") -> DefectiveColoring:
    """Repeatedly split every color class in two, asserting the inductive
    class-degree bound after each iteration; classes within an iteration are
    disjoint and solved independently under class-keyed seeds."""
    if kind not in (VERTEX, EDGE):
        raise InputError(f"kind must be vertex or edge, got {kind!r}")
    if q < 1:
        raise InputError("q must be at least 1")
    delta = g.max_degree
    edges = tuple(g.edges()) if kind == EDGE else ()
    n_objects = g.node_count if kind == VERTEX else len(edges)
    k = halving_iterations(delta, q)
    if cfg.guarantee_grade and not split_precondition_ok(delta, q, log_exponent=4):
        raise InputError(
            f"q = {q} outside the admissible window for degree {delta} on the "
            "strict path"
        )
    if k < 1:
        bound = float(delta + 1)
        return DefectiveColoring(kind, tuple([0] * n_objects), 1,
                                 float(max(delta, 1)), q, bound + 1, edges=edges)
    floor_val = iteration_floor(q)
    for i in range(1, k + 1):
        if inductive_degree(delta, q, i) < 2 * floor_val:
            raise ContractViolation(
                f"iteration arithmetic broke at i={i}: class degree bound "
                f"{inductive_degree(delta, q, i):.2f} below {2 * floor_val:.2f}"
            )

    labels = [0] * n_objects
    history = []
    for i in range(1, k + 1):
        classes = {}
        for obj, label in enumerate(labels):
            classes.setdefault(label, []).append(obj)
        seen = sum(len(v) for v in classes.values())
        if seen != n_objects:
            raise ContractViolation("classes must partition the objects")
        methods_used = set()
        for label in sorted(classes):
            objs = classes[label]
            class_seed = derive_seed(seed, "halve", i, label)
            if kind == VERTEX:
                local = {v: li for li, v in enumerate(objs)}
                adjacency = [
                    [local[w] for w in g.neighbors(v) if w in local]
                    for v in objs
                ]
                bits, used = _split_vertex_class(adjacency, q, cfg, class_seed,
                                                 method)
            else:
                class_edges = [edges[e] for e in objs]
                bits, used = _split_edge_class(g.node_count, class_edges, q,
                                               cfg, class_seed, method)
            methods_used.add(used)
            for obj, bit in zip(objs, bits):
                labels[obj] = labels[obj] * 2 + bit
        measured = _max_class_degree(g, kind, labels, edges)
        bound = inductive_bound(delta, q, i)
        if measured > bound:
            raise ContractViolation(
                f"iteration {i}: measured class degree {measured} exceeds "
                f"inductive bound {bound:.3f}"
            )
        history.append({
            "iteration": i,
            "classes": len(classes),
            "max_class_degree": measured,
            "bound": bound,
            "methods": sorted(methods_used),
        })

    x = delta / 2 ** k
    L = _lg_clamped(delta)
    q_out = q * L / k
    return DefectiveColoring(
        kind=kind,
        colors=tuple(labels),
        color_count=2 ** k,
        x=x,
        q=q_out,
        defect_bound=x + x / q_out,
        edges=edges,
        history=tuple(history),
    )


def _max_class_degree(g: Graph, kind: str, labels, edges) -> int:
    worst = 0
    if kind == VERTEX:
        for v in range(g.node_count):
            same = sum(1 for w in g.neighbors(v) if labels[w] == labels[v])
            worst = max(worst, same)
    else:
        counts = {}
        for (u, v), label in zip(edges, labels):
            for end in (u, v):
                key = (end, label)
                counts[key] = counts.get(key, 0) + 1
                worst = max(worst, counts[key])
    return worst
