"""Sibling-closed pattern trees: validation, orderings, census statistics.

Nodes are Ulam-Harris tuples (the root is the empty tuple); a valid pattern
is ancestor-closed and sibling-closed (with any child index, all smaller
sibling indices are present).  An ordering is an admissible birth order:
a linear extension of the precedence generated by ancestry and
earlier-sibling relations.  Each prefix of an ordering is itself a valid
pattern, which is what makes the embedding probabilities factorize.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CapExceededError,
    InvalidParametersError,
    InvalidSubtreeError,
    NotInStarPhaseError,
    UnsupportedVariantError,
)
from .model import Constant, FitnessSpec, WeightDistribution, mu_exact

__all__ = [
    "SubtreeSpec",
    "validate",
    "orderings",
    "g1_g2",
    "tree_series_term",
    "subtree_phase",
    "INFINITELY_OFTEN",
    "FINITELY_OFTEN",
    "BOUNDARY",
]

INFINITELY_OFTEN = "InfinitelyOften"
FINITELY_OFTEN = "FinitelyOften"
BOUNDARY = "Boundary"

Node = tuple


@dataclass(frozen=True)
class SubtreeSpec:
    """Finite tree of Ulam-Harris tuples, root included."""

    nodes: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(set(map(tuple, self.nodes)))))

    # -- constructors -------------------------------------------------------

    @classmethod
    def star(cls, k: int) -> "SubtreeSpec":
        """Root with k children (size k+1)."""
        return cls(((),) + tuple((i,) for i in range(1, k + 1)))

    @classmethod
    def chain(cls, k: int) -> "SubtreeSpec":
        """Path with k edges (size k+1)."""
        return cls(tuple((1,) * d for d in range(k + 1)))

    @classmethod
    def mary(cls, m: int, l: int) -> "SubtreeSpec":
        """m-ary tree with l internal nodes (size m*l + 1).

        Internal nodes form the leftmost chain: root, (1), (1,1), ...
        """
        if m < 1 or l < 1:
            raise InvalidParametersError("mary needs m >= 1 and l >= 1")
        nodes = {()}
        for depth in range(l):
            stem = (1,) * depth
            for i in range(1, m + 1):
                nodes.add(stem + (i,))
        return cls(tuple(nodes))

    @classmethod
    def from_text(cls, text: str) -> "SubtreeSpec":
        """One node per line, dot-separated child indices, root as '-'."""
        nodes = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line == "-":
                nodes.append(())
            else:
                nodes.append(tuple(int(p) for p in line.split(".")))
        return cls(tuple(nodes))

    def to_text(self) -> str:
        lines = ["-" if not n else ".".join(str(i) for i in n) for n in self.nodes]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_string(cls, text: str) -> "SubtreeSpec":
        """Builder shorthand: 'star:k', 'chain:k', 'mary:m,l' or '@file'."""
        text = text.strip()
        if text.startswith("@"):
            with open(text[1:]) as fh:
                return cls.from_text(fh.read())
        kind, _, rest = text.partition(":")
        kind = kind.lower()
        if kind == "star":
            return cls.star(int(rest))
        if kind == "chain":
            return cls.chain(int(rest))
        if kind == "mary":
            m, l = rest.split(",")
            return cls.mary(int(m), int(l))
        raise InvalidParametersError(f"unknown tree spec {text!r}")

    # -- basic structure -----------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def k(self) -> int:
        return self.size - 1

    def outdeg(self, v: Node) -> int:
        d = 0
        while (v + (d + 1,)) in self._node_set():
            d += 1
        return d

    def _node_set(self):
        return set(self.nodes)

    def outdeg_map(self) -> dict:
        nodes = self._node_set()
        degs = {v: 0 for v in nodes}
        for v in nodes:
            if v:
                degs[v[:-1]] += 1
        return degs

    def nested(self):
        """Nested tuple form: node -> tuple of child substructures."""
        degs = self.outdeg_map()

        def build(v):
            return tuple(build(v + (i,)) for i in range(1, degs[v] + 1))

        return build(())

    def contains(self, other: "SubtreeSpec") -> bool:
        return set(other.nodes) <= self._node_set()


def validate(t: SubtreeSpec):
    """Check ancestor and sibling closure; returns (ok, offender, reason)."""
    nodes = set(t.nodes)
    if () not in nodes:
        return False, (), "missing root"
    for v in t.nodes:
        if v and v[:-1] not in nodes:
            return False, v, f"missing ancestor {v[:-1]!r}"
        if v and v[-1] > 1 and (v[:-1] + (v[-1] - 1,)) not in nodes:
            return False, v, f"missing sibling {v[:-1] + (v[-1] - 1,)!r}"
        if v and v[-1] < 1:
            return False, v, "child indices start at 1"
    return True, None, "ok"


def _require_valid(t: SubtreeSpec):
    ok, node, reason = validate(t)
    if not ok:
        raise InvalidSubtreeError(node, reason)


def orderings(t: SubtreeSpec, cap: int = 12) -> list[tuple]:
    """All admissible birth orders of the pattern's nodes.

    Linear extensions of (ancestor union earlier-sibling) precedence,
    enumerated by backtracking over the currently placeable nodes.
    """
    _require_valid(t)
    if t.size > cap:
        raise CapExceededError(f"|T|={t.size} exceeds ordering cap {cap}")
    nodes = set(t.nodes)
    out: list[tuple] = []
    placed: list[Node] = [()]
    placed_set = {()}

    def available():
        avail = []
        for v in nodes:
            if v in placed_set or not v:
                continue
            if v[:-1] not in placed_set:
                continue
            if v[-1] > 1 and (v[:-1] + (v[-1] - 1,)) not in placed_set:
                continue
            avail.append(v)
        return avail

    def rec():
        if len(placed) == len(nodes):
            out.append(tuple(placed))
            return
        for v in available():
            placed.append(v)
            placed_set.add(v)
            rec()
            placed.pop()
            placed_set.remove(v)

    rec()
    return out


def orderings_bruteforce(t: SubtreeSpec) -> list[tuple]:
    """Permutation-filter oracle (factorial; test use only)."""
    _require_valid(t)
    out = []
    for perm in itertools.permutations(t.nodes):
        pos = {v: i for i, v in enumerate(perm)}
        ok = True
        for v in t.nodes:
            if v and pos[v[:-1]] > pos[v]:
                ok = False
                break
            if v and v[-1] > 1 and pos[v[:-1] + (v[-1] - 1,)] > pos[v]:
                ok = False
                break
        if ok:
            out.append(perm)
    return out


def g1_g2(t: SubtreeSpec, z: float):
    """Census statistics of out-degrees above the threshold z."""
    if z <= 0:
        raise InvalidParametersError("z must be positive")
    _require_valid(t)
    degs = t.outdeg_map().values()
    g1 = sum(d for d in degs if d > z)
    g2 = sum(1 for d in degs if d > z)
    return g1, g2


# ---------------------------------------------------------------------------
# Summability term of the sub-tree criterion
# ---------------------------------------------------------------------------


def _transition_steps(t: SubtreeSpec, order: tuple, column: dict):
    """Per transition j = 0..k-1: (weight columns, prefix degrees) of the
    placed nodes that still miss children in T (the active clocks)."""
    degs_T = t.outdeg_map()
    pos = {v: i for i, v in enumerate(order)}
    prefix_deg = [0] * len(order)
    steps = []
    for j in range(len(order) - 1):
        cols, degs = [], []
        for i in range(j + 1):
            v = order[i]
            if prefix_deg[i] < degs_T[v]:
                cols.append(column[v])
                degs.append(prefix_deg[i])
        steps.append((cols, degs))
        parent = order[j + 1][:-1]
        prefix_deg[pos[parent]] += 1
    return steps


def tree_series_term(spec: FitnessSpec, dist: WeightDistribution, t: SubtreeSpec,
                     n: int, mc_samples: int = 10000,
                     rng: np.random.Generator | None = None,
                     cap: int = 12, mu_n: float | None = None):
    """Monte Carlo estimate of the summability term at index n.

    For i.i.d. weights (W_v, v in T) the term is

        E sum_{O} prod_{j=0}^{k-1} f(outdeg(parent_j, O|_j), W_{parent_j})
                                  / (rate_j(O) + 1/mu_n),

    with ``rate_j`` the total rate of the placed nodes still missing
    children in T -- k transition factors, one per arriving node, matching
    the step-by-step attachment probabilities.  The numerator telescopes
    to prod_{v in T} prod_{l < outdeg(v,T)} f(l, W_v).  Returns
    ``(estimate, stderr)``; constant weights are exact with stderr 0.
    """
    _require_valid(t)
    k = t.k
    if mu_n is None:
        mu_n = mu_exact(spec, n, 0.0, tol=1e-9 * max(1.0, _rough_mu(spec, n)))
    inv_mu = 1.0 / mu_n
    orders = orderings(t, cap=cap)
    column = {v: i for i, v in enumerate(t.nodes)}
    if isinstance(dist, Constant):
        w = np.full((1, k + 1), dist.w0)
    else:
        if rng is None:
            raise InvalidParametersError("rng required for Monte Carlo over weights")
        w = np.asarray(dist.sample(rng, (mc_samples, k + 1)), dtype=float)
    degs_T = t.outdeg_map()
    numer = np.ones(w.shape[0])
    for v, col in column.items():
        for level in range(degs_T[v]):
            numer = numer * spec.fitness(level, w[:, col])
    totals = np.zeros(w.shape[0])
    for order in orders:
        denom = np.ones(w.shape[0])
        for cols, degs in _transition_steps(t, order, column):
            rate = np.zeros(w.shape[0])
            for col, d in zip(cols, degs):
                rate += spec.fitness(int(d), w[:, col])
            denom *= rate + inv_mu
        totals += numer / denom
    est = float(np.mean(totals))
    se = 0.0 if w.shape[0] == 1 else float(np.std(totals, ddof=1) / math.sqrt(w.shape[0]))
    return est, se


def _rough_mu(spec: FitnessSpec, n: int) -> float:
    from .model import mu_tail_bounds, _table_start

    return mu_tail_bounds(spec, max(n, _table_start(spec)), 0.0)[1]


# ---------------------------------------------------------------------------
# Closed-form phase predicate
# ---------------------------------------------------------------------------


def subtree_phase(t: SubtreeSpec, model) -> str:
    """Whether the pattern appears infinitely often below the infinite-degree node.

    Requires a model classified as Star.  Super-linear degree with power-law
    weights: compare p against 1 + 1/(k - (G1 - z G2)) at z = (alpha-1)/(gamma v 1);
    the theorem's inequalities are strict, so equality reports Boundary.
    All-moments weights reduce to summability of mu_n^k, which diverges iff
    k(p-1) <= 1 (the harmonic boundary case diverges).  Barely super-linear
    degree: every finite pattern appears infinitely often.
    """
    from . import phase as phase_mod

    _require_valid(t)
    verdict = phase_mod.classify(model)
    if verdict.verdict != phase_mod.STAR:
        raise NotInStarPhaseError(
            f"model classifies as {verdict.verdict}; sub-tree predicates need Star")
    k = t.k
    if k == 0:
        return INFINITELY_OFTEN
    if model.degree_kind in ("log-stretched", "poly-log"):
        return INFINITELY_OFTEN
    p = model.p
    tail = model.weight_tail
    if tail.all_moments:
        exponent = k * (p - 1.0)
        return INFINITELY_OFTEN if exponent <= 1.0 else FINITELY_OFTEN
    if isinstance(tail, phase_mod.PowerTail):
        gamma = 1.0 if model.fitness_kind == "additive" else model.gamma
        z = (tail.alpha - 1.0) / max(gamma, 1.0)
        g1, g2 = g1_g2(t, z)
        threshold = 1.0 + 1.0 / (k - (g1 - z * g2))
        if p < threshold:
            return INFINITELY_OFTEN
        if p > threshold:
            return FINITELY_OFTEN
        return BOUNDARY
    raise UnsupportedVariantError(
        f"no sub-tree criterion for weight tail {tail!r} in the super-linear case")
