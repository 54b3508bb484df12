"""Optimal base trajectory planners over an admissible spacetime.

``mobocontp`` runs backward value iteration, connecting stages and computing
cost-to-go in a single pass.  ``dijkstra_baseline`` builds the explicit
multistage graph first and searches it; ``brute_force_plan`` enumerates every
admissible sequence and exists to check the other two.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .spacetime import (AdmissibleControlSet, Control, Event, GridSpec, Infeasible,
                        control_between, step_cost, total_cost)
from .world import AdmissibleSpacetime

BRUTE_FORCE_GUARD = 10 ** 7
# candidate edges evaluated per chunk; bounds peak memory of the dense relax step
_CHUNK_EDGES = 1 << 21


class OracleGuardExceeded(ValueError):
    pass


@dataclass
class StageValues:
    nodes: np.ndarray          # K^i, lexicographically sorted
    cost_to_go: np.ndarray     # G on K^i
    next_index: np.ndarray | None  # row of the optimal successor in K^{i+1}


@dataclass
class ValueTable:
    stages: list[StageValues]
    spec: GridSpec

    def lookup(self, e: Event) -> tuple[float, tuple[int, int, int] | None]:
        sv = self.stages[e.stage]
        hit = np.nonzero((sv.nodes == np.array(e.index)).all(axis=1))[0]
        if not len(hit):
            raise KeyError(e)
        k = hit[0]
        if sv.next_index is None:
            return float(sv.cost_to_go[k]), None
        nxt = self.stages[e.stage + 1].nodes[sv.next_index[k]]
        return float(sv.cost_to_go[k]), tuple(int(v) for v in nxt)


@dataclass
class PlanResult:
    events: list[Event]
    cost: float
    cost_to_go: list[float]
    stage_sizes: list[int]
    feasible_sizes: list[int]
    relaxations: int
    wall_time: float
    planner: str
    spec: GridSpec = field(repr=False, default=None)
    table: ValueTable | None = field(default=None, repr=False)

    @property
    def controls(self) -> list[Control]:
        return [control_between(a, b, self.spec) for a, b in zip(self.events, self.events[1:])]


def _suffix_costs(events: list[Event], spec: GridSpec) -> list[float]:
    """Cost-to-go along a trajectory, accumulated backward like the planners."""
    g = [0.0] * len(events)
    for i in range(len(events) - 2, -1, -1):
        a, b = events[i], events[i + 1]
        g[i] = step_cost(control_between(a, b, spec), spec) + g[i + 1]
    return g


def _finish(name: str, events: list[Event], g: list[float], xa: AdmissibleSpacetime,
            ua: AdmissibleControlSet, spec: GridSpec, feasible: list[int],
            relax: int, t0: float, table=None) -> PlanResult:
    wall = time.perf_counter() - t0
    return PlanResult(events, total_cost(events, spec, ua), g, xa.stage_sizes,
                      feasible, relax, wall, name, spec, table)


class _Lookup:
    """Dense index box mapping grid nodes of one stage to their row, or -1."""

    def __init__(self, nodes: np.ndarray, n_phi: int):
        self.n_phi = n_phi
        if len(nodes) == 0:
            self.lo = np.zeros(2, dtype=np.int64)
            self.table = np.full((1, 1, n_phi), -1, dtype=np.int64)
            return
        self.lo = nodes[:, :2].min(axis=0)
        hi = nodes[:, :2].max(axis=0)
        shape = tuple((hi - self.lo + 1).tolist()) + (n_phi,)
        self.table = np.full(shape, -1, dtype=np.int64)
        self.table[nodes[:, 0] - self.lo[0], nodes[:, 1] - self.lo[1], nodes[:, 2]] = np.arange(len(nodes))

    def query(self, X: np.ndarray, steps: np.ndarray) -> np.ndarray:
        """Row of ``x + u`` for every pair, shape ``(len(X), len(steps))``."""
        cx = X[:, 0, None] + steps[None, :, 0] - self.lo[0]
        cy = X[:, 1, None] + steps[None, :, 1] - self.lo[1]
        cp = (X[:, 2, None] + steps[None, :, 2]) % self.n_phi
        nx, ny, _ = self.table.shape
        inb = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
        out = self.table[np.where(inb, cx, 0), np.where(inb, cy, 0), cp]
        return np.where(inb, out, -1)


def _relax_block(X, lookup, G_next, steps, costs):
    idx = lookup.query(X, steps)
    valid = idx >= 0
    cand = np.where(valid, costs[None, :] + G_next[np.where(valid, idx, 0)], np.inf)
    best = cand.min(axis=1)
    tie = valid & (cand == best[:, None])
    # among equal costs keep the lexicographically smallest successor (lowest row)
    nxt = np.where(tie, idx, np.iinfo(np.int64).max).min(axis=1)
    nxt[~np.isfinite(best)] = -1
    return best, nxt, int(valid.sum())


def _relax_stage(X, lookup, G_next, ua, workers=1):
    m = len(X)
    rows = max(1, _CHUNK_EDGES // max(len(ua), 1))
    if workers > 1:
        rows = min(rows, max(1, math.ceil(m / workers)))
    args = [(X[lo:lo + rows], lookup, G_next, ua.steps, ua.costs) for lo in range(0, m, rows)]
    if workers > 1 and len(args) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _relax_block(*a), args))
    else:
        parts = [_relax_block(*a) for a in args]
    if not parts:
        return np.zeros(0), np.zeros(0, dtype=np.int64), 0
    best = np.concatenate([p[0] for p in parts])
    nxt = np.concatenate([p[1] for p in parts])
    return best, nxt, sum(p[2] for p in parts)


def mobocontp(xa: AdmissibleSpacetime, ua: AdmissibleControlSet,
              spec: GridSpec | None = None, workers: int = 1,
              keep_table: bool = False) -> PlanResult:
    """Backward value iteration with memoized optimal successors.

    Raises :class:`Infeasible` at the first (backward) stage whose feasible
    set is empty.  Ties go to the lexicographically smallest successor and,
    at stage 0, to the smallest start node.
    """
    spec = spec or xa.spec
    t0 = time.perf_counter()
    N = xa.n_stages
    n_phi = spec.n_phi
    K = xa.nodes(N)
    if len(K) == 0:
        raise Infeasible(N)
    G = np.zeros(len(K))
    stages: list[StageValues] = [None] * (N + 1)
    stages[N] = StageValues(K, G, None)
    relax = 0
    for i in range(N - 1, -1, -1):
        X = xa.nodes(i)
        best, nxt, r = _relax_stage(X, _Lookup(K, n_phi), G, ua, workers)
        relax += r
        keep = nxt >= 0
        if not keep.any():
            raise Infeasible(i)
        K, G = X[keep], best[keep]
        stages[i] = StageValues(K, G, nxt[keep])
    start = int(np.argmin(stages[0].cost_to_go))
    rows = [start]
    for i in range(N):
        rows.append(int(stages[i].next_index[rows[-1]]))
    events = [spec.event(i, *stages[i].nodes[r].tolist()) for i, r in enumerate(rows)]
    g = [float(stages[i].cost_to_go[r]) for i, r in enumerate(rows)]
    table = ValueTable(stages, spec) if keep_table else None
    return _finish("mobocontp", events, g, xa, ua, spec,
                   [len(s.nodes) for s in stages], relax, t0, table)


def dijkstra_baseline(xa: AdmissibleSpacetime, ua: AdmissibleControlSet,
                      spec: GridSpec | None = None) -> PlanResult:
    """Explicit multistage graph with a virtual source and sink, then Dijkstra."""
    spec = spec or xa.spec
    t0 = time.perf_counter()
    N = xa.n_stages
    n_phi = spec.n_phi
    sizes = xa.stage_sizes
    offs = np.concatenate([[1], 1 + np.cumsum(sizes)])
    sink = int(offs[-1])
    src, dst, wts = [], [], []
    src.append(np.zeros(sizes[0], dtype=np.int64))
    dst.append(offs[0] + np.arange(sizes[0]))
    wts.append(np.zeros(sizes[0]))
    for i in range(N):
        X, Y = xa.nodes(i), xa.nodes(i + 1)
        idx = _Lookup(Y, n_phi).query(X, ua.steps)
        r, c = np.nonzero(idx >= 0)
        src.append(offs[i] + r)
        dst.append(offs[i + 1] + idx[r, c])
        wts.append(ua.costs[c])
    src.append(offs[N] + np.arange(sizes[N]))
    dst.append(np.full(sizes[N], sink, dtype=np.int64))
    wts.append(np.zeros(sizes[N]))
    src, dst, wts = (np.concatenate(a) for a in (src, dst, wts))
    # csr construction sums duplicate entries; keep the cheapest parallel edge
    order = np.lexsort((wts, dst, src))
    src, dst, wts = src[order], dst[order], wts[order]
    first = np.ones(len(src), dtype=bool)
    first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
    src, dst, wts = src[first], dst[first], wts[first]
    graph = csr_matrix((wts, (src, dst)), shape=(sink + 1, sink + 1))
    dist, pred = dijkstra(graph, directed=True, indices=0, return_predecessors=True)
    edges = int(len(wts))
    if not np.isfinite(dist[sink]):
        reach = [np.isfinite(dist[offs[i]:offs[i + 1]]).any() for i in range(N + 1)]
        raise Infeasible(reach.index(False) if False in reach else N)
    path = []
    v = int(pred[sink])
    while v != 0:
        path.append(v)
        v = int(pred[v])
    path.reverse()
    events = []
    for i, v in enumerate(path):
        row = xa.nodes(i)[v - offs[i]]
        events.append(spec.event(i, *row.tolist()))
    g = _suffix_costs(events, spec)
    return _finish("dijkstra", events, g, xa, ua, spec, list(sizes), edges, t0)


def brute_force_plan(xa: AdmissibleSpacetime, ua: AdmissibleControlSet,
                     spec: GridSpec | None = None) -> PlanResult:
    """Exhaustive search over all admissible event sequences (test oracle)."""
    spec = spec or xa.spec
    t0 = time.perf_counter()
    sizes = xa.stage_sizes
    if math.prod(sizes) > BRUTE_FORCE_GUARD:
        raise OracleGuardExceeded(f"product of stage sizes {math.prod(sizes)} exceeds guard")
    N = xa.n_stages
    n_phi = spec.n_phi
    stage_sets = [set(map(tuple, xa.nodes(i).tolist())) for i in range(N + 1)]
    controls = [(u, step_cost(u, spec)) for u in ua]
    best_cost = math.inf
    best_path = None
    count = 0

    def extend(path, cost):
        nonlocal best_cost, best_path, count
        i = len(path) - 1
        if i == N:
            if cost < best_cost:
                best_cost, best_path = cost, list(path)
            return
        jx, jy, jp = path[-1]
        succ = []
        for u, l in controls:
            nxt = (jx + u.kx, jy + u.ky, (jp + u.kphi) % n_phi)
            count += 1
            if nxt in stage_sets[i + 1]:
                succ.append((nxt, l))
        # same successor reachable by several controls: keep the cheapest
        seen = {}
        for nxt, l in succ:
            if nxt not in seen or l < seen[nxt]:
                seen[nxt] = l
        for nxt in sorted(seen):
            path.append(nxt)
            extend(path, cost + seen[nxt])
            path.pop()

    for start in sorted(stage_sets[0]):
        extend([start], 0.0)
    if best_path is None:
        raise Infeasible(0, "no admissible sequence exists")
    events = [spec.event(i, *n) for i, n in enumerate(best_path)]
    g = _suffix_costs(events, spec)
    return _finish("brute", events, g, xa, ua, spec, list(sizes), count, t0)


PLANNERS = {
    "mobocontp": mobocontp,
    "dijkstra": dijkstra_baseline,
    "brute": brute_force_plan,
}
