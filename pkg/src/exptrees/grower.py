"""Discrete growth of recursive trees with fitness, plus empirical statistics.

Each step samples an existing node with probability proportional to
``f(outdeg, weight)`` and attaches a fresh node with an i.i.d. weight.
Replicas are single-owner mutable; share nothing across threads.

Randomness protocol: ``grow_to`` consumes the generator in blocks -- per
block of B steps it draws B uniforms, then B weights.  The numba kernel
and the pure-Python stepping loop replay the same draws identically, so a
seed fully determines the tree on either path.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import _kernels
from .errors import DegenerateFitnessError
from .model import (
    FitnessSpec,
    LogStretchedDegree,
    PolyLogDegree,
    PowerLawDegree,
    TableDegree,
    WeightDistribution,
)
from .sampler import FenwickSampler

BLOCK = 1 << 16  # also the Fenwick rebuild cadence

__all__ = [
    "TreeState",
    "HubHistory",
    "Anchor",
    "grow_step",
    "grow_to",
    "hub_history",
    "census",
    "dump_tree_csv",
    "enumerate_shape_distribution",
]


@dataclass
class HubRecord:
    step: int
    node: int
    degree: int


class HubHistory:
    """Argmax-degree trajectory; ties broken toward the smallest index."""

    def __init__(self, records: list[HubRecord]):
        self.records = records

    @property
    def final_node(self) -> int:
        return self.records[-1].node

    def node_at(self, step: int) -> int:
        node = self.records[0].node
        for rec in self.records:
            if rec.step > step:
                break
            node = rec.node
        return node

    def __len__(self):
        return len(self.records)


class Anchor(enum.Enum):
    ALL_NODES = "all"
    CHILDREN_OF_MAX_DEGREE = "hub"


def _degree_codes(degree):
    if isinstance(degree, PowerLawDegree):
        return _kernels.S_POWER, degree.p, np.zeros(1), 2.0, 1.0
    if isinstance(degree, LogStretchedDegree):
        return _kernels.S_LOGSTRETCHED, degree.beta, np.zeros(1), 2.0, 1.0
    if isinstance(degree, PolyLogDegree):
        return _kernels.S_POLYLOG, degree.sigma, np.zeros(1), 2.0, 1.0
    if isinstance(degree, TableDegree):
        return (_kernels.S_TABLE, 0.0, np.asarray(degree.values, dtype=float),
                degree.tail_p, degree.tail_coeff)
    return None


class TreeState:
    """Growing rooted tree: parents, weights, degrees, rates, sampler."""

    def __init__(self, spec: FitnessSpec, dist: WeightDistribution,
                 root_weight: float, capacity: int = 1024):
        self.spec = spec
        self.dist = dist
        self.n = 1
        self._alloc(capacity)
        self.weight[0] = root_weight
        self.gfit[0] = float(spec.weights.g(root_weight))
        self.hfit[0] = float(spec.weights.h(root_weight))
        f0 = self.gfit[0] * float(spec.degree.value(0)) + self.hfit[0]
        self.fitness[0] = f0
        self.sampler = FenwickSampler(capacity)
        self.sampler.add(0, f0)
        self.total_fitness = f0
        self.hub_node = 0
        self.hub_deg = 0
        self.hub_records = [HubRecord(1, 0, 0)]
        self._children_built_at = 0
        self._children: list[list[int]] = []

    @classmethod
    def root(cls, spec: FitnessSpec, dist: WeightDistribution,
             rng: np.random.Generator, capacity: int = 1024) -> "TreeState":
        return cls(spec, dist, float(dist.sample(rng)), capacity)

    def _alloc(self, capacity: int):
        self.capacity = capacity
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.weight = np.zeros(capacity, dtype=np.float64)
        self.outdeg = np.zeros(capacity, dtype=np.int64)
        self.fitness = np.zeros(capacity, dtype=np.float64)
        self.gfit = np.zeros(capacity, dtype=np.float64)
        self.hfit = np.zeros(capacity, dtype=np.float64)

    def ensure_capacity(self, n: int):
        if n <= self.capacity:
            return
        cap = self.capacity
        while cap < n:
            cap *= 2
        old_n = self.n
        for name in ("parent", "weight", "outdeg", "fitness", "gfit", "hfit"):
            old = getattr(self, name)
            fresh = np.full(cap, -1, dtype=np.int64) if name == "parent" else \
                np.zeros(cap, dtype=old.dtype)
            fresh[:old_n] = old[:old_n]
            setattr(self, name, fresh)
        self.capacity = cap
        self.sampler = self.sampler.grown(cap, self.fitness[:old_n])

    # -- sampling ----------------------------------------------------------

    def sample_target(self, u: float) -> int:
        """Attachment target for a uniform draw ``u`` (no mutation)."""
        idx = self.sampler.find(u * self.total_fitness)
        return idx if idx < self.n else self.n - 1

    def refresh_total(self):
        self.total_fitness = float(np.sum(self.fitness[:self.n]))
        self.sampler.rebuild(self.fitness[:self.n])

    # -- derived views -----------------------------------------------------

    def children_lists(self) -> list[list[int]]:
        """Birth-ordered child lists (cached until the tree grows)."""
        if self._children_built_at != self.n:
            children: list[list[int]] = [[] for _ in range(self.n)]
            par = self.parent
            for v in range(1, self.n):
                children[par[v]].append(v)
            self._children = children
            self._children_built_at = self.n
        return self._children

    def argmax_degree_node(self) -> int:
        return int(np.argmax(self.outdeg[:self.n]))

    def parent_tuple(self) -> tuple:
        return tuple(int(p) for p in self.parent[1:self.n])

    def depth_of(self, v: int) -> int:
        d = 0
        while v > 0:
            v = int(self.parent[v])
            d += 1
        return d


def _apply_steps_python(state: TreeState, us: np.ndarray, new_g: np.ndarray,
                        new_h: np.ndarray, new_w: np.ndarray, s0: float,
                        hooks: Optional[Iterable[Callable]] = None):
    """Reference stepping loop; mirrors the kernel operation for operation."""
    spec = state.spec
    sampler = state.sampler
    tree = sampler.tree
    size = sampler.size
    total = state.total_fitness
    hub_node = state.hub_node
    hub_deg = state.hub_deg
    for k in range(len(us)):
        m = state.n
        x = us[k] * total
        idx = 0
        bit = size
        while bit:
            nxt = idx + bit
            if nxt <= size and tree[nxt] <= x:
                x -= tree[nxt]
                idx = nxt
            bit >>= 1
        j = idx if idx < m else m - 1
        d = state.outdeg[j] + 1
        state.outdeg[j] = d
        newf = state.gfit[j] * float(spec.degree.value(d)) + state.hfit[j]
        delta = newf - state.fitness[j]
        state.fitness[j] = newf
        i = j + 1
        while i <= size:
            tree[i] += delta
            i += i & (-i)
        state.parent[m] = j
        state.weight[m] = new_w[k]
        state.gfit[m] = new_g[k]
        state.hfit[m] = new_h[k]
        f_new = new_g[k] * s0 + new_h[k]
        state.fitness[m] = f_new
        i = m + 1
        while i <= size:
            tree[i] += f_new
            i += i & (-i)
        total += delta + f_new
        state.n = m + 1
        if d > hub_deg or (d == hub_deg and j < hub_node):
            hub_deg = d
            if j != hub_node:
                hub_node = j
                state.hub_records.append(HubRecord(m + 1, j, d))
        if hooks:
            state.total_fitness = total
            state.hub_node, state.hub_deg = hub_node, hub_deg
            for hook in hooks:
                hook(state, m + 1, j)
            total = state.total_fitness
    state.total_fitness = total
    state.hub_node = hub_node
    state.hub_deg = hub_deg


def grow_step(state: TreeState, spec: FitnessSpec, dist: WeightDistribution,
              rng: np.random.Generator) -> int:
    """One attachment step; returns the sampled target index."""
    if state.total_fitness <= 0 or not np.isfinite(state.total_fitness):
        raise DegenerateFitnessError(f"total fitness {state.total_fitness!r}")
    state.ensure_capacity(state.n + 1)
    us = rng.random(1)
    w = np.atleast_1d(np.asarray(dist.sample(rng, 1), dtype=float))
    new_g = np.asarray(spec.weights.g(w), dtype=float)
    new_h = np.asarray(spec.weights.h(w), dtype=float)
    s0 = float(spec.degree.value(0))
    _apply_steps_python(state, us, new_g, new_h, w, s0)
    return int(state.parent[state.n - 1])


def grow_to(state: TreeState, spec: FitnessSpec, dist: WeightDistribution,
            n: int, rng: np.random.Generator,
            hooks: Optional[Iterable[Callable]] = None,
            use_kernel: Optional[bool] = None) -> TreeState:
    """Grow to exactly ``n`` nodes; deterministic given the generator state.

    ``hooks`` are per-step observers ``hook(state, step, target)``; supplying
    any forces the pure-Python path.
    """
    if n < state.n:
        raise ValueError(f"target size {n} below current size {state.n}")
    if n == state.n:
        return state
    state.ensure_capacity(n)
    if use_kernel is None:
        use_kernel = _kernels.HAVE_NUMBA and not hooks
    codes = _degree_codes(spec.degree)
    if codes is None:
        use_kernel = False
    s0 = float(spec.degree.value(0))
    while state.n < n:
        count = min(BLOCK, n - state.n)
        if state.total_fitness <= 0 or not np.isfinite(state.total_fitness):
            raise DegenerateFitnessError(f"total fitness {state.total_fitness!r}")
        us = rng.random(count)
        w = np.atleast_1d(np.asarray(dist.sample(rng, count), dtype=float))
        new_g = np.asarray(spec.weights.g(w), dtype=float)
        new_h = np.asarray(spec.weights.h(w), dtype=float)
        if use_kernel:
            s_kind, s_par, s_table, s_tail_p, s_tail_c = codes
            hub_steps = np.empty(count, dtype=np.int64)
            hub_nodes = np.empty(count, dtype=np.int64)
            hub_degs = np.empty(count, dtype=np.int64)
            start = state.n
            total, hub_node, hub_deg, nrec = _kernels.grow_block(
                state.sampler.tree, state.sampler.size, state.fitness,
                state.outdeg, state.parent, state.gfit, state.hfit,
                s_kind, s_par, s_table, s_tail_p, s_tail_c, s0,
                us, new_g, new_h, start, state.total_fitness,
                state.hub_node, state.hub_deg, hub_steps, hub_nodes, hub_degs)
            state.weight[start:start + count] = w
            state.n = start + count
            state.total_fitness = total
            state.hub_node = int(hub_node)
            state.hub_deg = int(hub_deg)
            for r in range(nrec):
                state.hub_records.append(
                    HubRecord(int(hub_steps[r]), int(hub_nodes[r]), int(hub_degs[r])))
        else:
            _apply_steps_python(state, us, new_g, new_h, w, s0, hooks)
        # Periodic rebuild bounds float drift between the scalar total and
        # the Fenwick tree (super-linear rates span many orders of magnitude).
        state.refresh_total()
    return state


def hub_history(state: TreeState) -> HubHistory:
    return HubHistory(list(state.hub_records))


# ---------------------------------------------------------------------------
# Sub-tree census
# ---------------------------------------------------------------------------


def _embeds(children: list[list[int]], outdeg: np.ndarray, u: int, nested) -> bool:
    # nested = tuple of child sub-structures; child i of the pattern maps to
    # the i-th born child of u.
    need = len(nested)
    if outdeg[u] < need:
        return False
    ch = children[u]
    for i in range(need):
        if not _embeds(children, outdeg, ch[i], nested[i]):
            return False
    return True


def census(state: TreeState, tree_spec, anchor: Anchor = Anchor.ALL_NODES) -> int:
    """Number of anchored nodes at which the pattern tree embeds.

    The pattern's child ``i`` must map to the i-th born child, which is the
    Ulam-Harris containment for sibling-closed patterns.
    """
    nested = tree_spec.nested()
    children = state.children_lists()
    outdeg = state.outdeg
    if anchor is Anchor.ALL_NODES:
        candidates = range(state.n)
    else:
        candidates = children[state.argmax_degree_node()]
    return sum(1 for u in candidates if _embeds(children, outdeg, u, nested))


# ---------------------------------------------------------------------------
# I/O and small oracles
# ---------------------------------------------------------------------------


def dump_tree_csv(state: TreeState, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "parent_id", "weight", "outdeg"])
        for v in range(state.n):
            writer.writerow([v, int(state.parent[v]), repr(float(state.weight[v])),
                             int(state.outdeg[v])])


def hub_history_csv(history: HubHistory, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "node", "degree"])
        for rec in history.records:
            writer.writerow([rec.step, rec.node, rec.degree])


def enumerate_shape_distribution(rate_of_degree: Callable[[int], float], n: int) -> dict:
    """Exact law of the labeled shape (parent tuple) for constant weights.

    Brute-force product of attachment probabilities over every attachment
    sequence; exponential in ``n``, intended as a test oracle for small n.
    """
    shapes: dict[tuple, float] = {}

    def rec(parents: tuple, degs: tuple, prob: float):
        if len(parents) == n - 1:
            shapes[parents] = shapes.get(parents, 0.0) + prob
            return
        rates = [rate_of_degree(d) for d in degs]
        total = sum(rates)
        for j, r in enumerate(rates):
            nd = list(degs)
            nd[j] += 1
            rec(parents + (j,), tuple(nd) + (0,), prob * r / total)

    rec((), (0,), 1.0)
    return shapes
