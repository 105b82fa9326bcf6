"""Two-type process in which a star and an infinite path both occur with
probability strictly between 0 and 1.

Each node carries a weight (R, I): R has the exact power tail
P(R > x) = x**-(alpha-1) on [1, inf) and I is a coin flip.  Type-0 nodes
produce their i-th child after an Exp(R * i**p) wait; type-1 nodes wait
Exp(1) for their first child and the deterministic time s_i for the i-th,
with the tails sigma_k = sum_{j>k} s_j shrunk until

    E[exp(-(R_k v 1) sigma_k)] > 1 - 2**-k                     (per k)

so that, summed over k, children of a type-1 node beat their parent to
explosion with total probability below 1.  Truncated runs are classified
by finite-horizon proxies (never reported as the limit probabilities).
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import InvalidParametersError
from .rng import hash64, replica_generator

__all__ = [
    "CounterexampleSpec",
    "build_s_sequence",
    "deterministic_gap_expectation",
    "simulate_counterexample",
    "CounterexampleResult",
    "wilson_interval",
]


def deterministic_gap_deficit(alpha: float, sigma: float) -> float:
    """1 - E[exp(-(R v 1) sigma)] for the exact Pareto law of R.

    R >= 1 always, so R v 1 = R.  For alpha in (1, 2) quadrature by parts
    gives the closed form  deficit = 1 - exp(-sigma) + sigma**(alpha-1)
    Gamma(2-alpha, sigma); otherwise the deficit integral is evaluated
    directly.  Working in deficit space avoids the 1 - tiny cancellation
    that floors the expectation at float resolution near k ~ 50.
    """
    if sigma < 0:
        raise InvalidParametersError("sigma must be nonnegative")
    if sigma == 0.0:
        return 0.0
    if 1.0 < alpha < 2.0:
        a = 2.0 - alpha
        upper_gamma = special.gammaincc(a, sigma) * special.gamma(a)
        return -math.expm1(-sigma) + sigma ** (alpha - 1.0) * upper_gamma
    val, _ = integrate.quad(
        lambda r: -math.expm1(-r * sigma) * (alpha - 1.0) * r ** (-alpha),
        1.0, math.inf, limit=200)
    return val


def deterministic_gap_expectation(alpha: float, sigma: float) -> float:
    """E[exp(-(R v 1) sigma)]; see ``deterministic_gap_deficit``."""
    return 1.0 - deterministic_gap_deficit(alpha, sigma)


@dataclass
class CounterexampleSpec:
    """Parameters plus the lazily extended deterministic gap sequence."""

    alpha: float
    p: float
    slack: float = 0.1
    sigma_tails: list = field(default_factory=list)  # sigma_k for k = 1, 2, ...

    def __post_init__(self):
        if not self.alpha > 1 or not self.p > 1:
            raise InvalidParametersError("need alpha > 1 and p > 1")
        if not (self.alpha - 1.0) * (self.p - 1.0) < 1.0:
            raise InvalidParametersError("counter-example needs (alpha-1)(p-1) < 1")
        if not 0 < self.slack < 1:
            raise InvalidParametersError("slack must lie in (0,1)")

    def sigma(self, k: int) -> float:
        """Tail sigma_k = sum_{j > k} s_j (k >= 1)."""
        self.ensure(k)
        return self.sigma_tails[k - 1]

    def s_value(self, i: int) -> float:
        """Deterministic gap s_i for a type-1 node's i-th child (i >= 2)."""
        if i < 2:
            raise InvalidParametersError("deterministic gaps start at i = 2")
        return self.sigma(i - 1) - self.sigma(i)

    def ensure(self, k_max: int) -> None:
        while len(self.sigma_tails) < k_max:
            k = len(self.sigma_tails) + 1
            target = (1.0 - self.slack) * 2.0 ** -k
            self.sigma_tails.append(self._solve_sigma(target))

    def _solve_sigma(self, target_deficit: float) -> float:
        # the deficit is increasing in sigma; solve deficit(sigma) = target.
        # Returning 0 when the solution is not representable is safe: a
        # smaller tail only strengthens the bound (deficit(0) = 0).
        if target_deficit <= 0.0:
            return 0.0
        if 1.0 < self.alpha < 2.0 and target_deficit < 1e-10:
            # deficit ~ sigma**(alpha-1) Gamma(2-alpha) for small sigma
            log_sigma = ((math.log(target_deficit)
                          - math.log(special.gamma(2.0 - self.alpha)))
                         / (self.alpha - 1.0))
            if log_sigma < -690.0:  # below ~1e-300; keep clear of denormals
                return 0.0
            sigma = math.exp(log_sigma)
            for _ in range(200):
                if deterministic_gap_deficit(self.alpha, sigma) <= target_deficit:
                    return sigma
                sigma *= 0.99
            return 0.0
        lo, hi = -690.0, 0.0
        if deterministic_gap_deficit(self.alpha, math.exp(hi)) < target_deficit:
            return math.exp(hi)
        if deterministic_gap_deficit(self.alpha, math.exp(lo)) > target_deficit:
            return 0.0
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            if deterministic_gap_deficit(self.alpha, math.exp(mid)) < target_deficit:
                lo = mid
            else:
                hi = mid
        return math.exp(lo)

    def verify_bound(self, k: int) -> bool:
        """eq-style check: E[exp(-(R v 1) sigma_k)] > 1 - 2**-k, in deficit space."""
        return deterministic_gap_deficit(self.alpha, self.sigma(k)) < 2.0 ** -k

    def config(self) -> dict:
        return {"alpha": self.alpha, "p": self.p, "slack": self.slack}


def build_s_sequence(alpha: float, p: float, k_max: int,
                     slack: float = 0.1) -> CounterexampleSpec:
    """Choose the deterministic gaps by per-k bisection with 10% slack."""
    if k_max < 2:
        raise InvalidParametersError("k_max must be >= 2")
    spec = CounterexampleSpec(alpha=alpha, p=p, slack=slack)
    spec.ensure(k_max)
    return spec


def sample_pareto_exact(alpha: float, rng: np.random.Generator, size=None):
    """P(R > x) = x**-(alpha-1) on [1, inf), with equality."""
    u = rng.random(size)
    u = np.maximum(u, 1e-300)
    return u ** (-1.0 / (alpha - 1.0))


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class CounterexampleResult:
    star_like: float
    path_like: float
    undecided: float
    wilson: dict
    config_hash: str
    births: int
    replicas: int
    note: str = ("finite-horizon proxies for the asymptotic star/path events; "
                 "not estimates of the limiting probabilities")

    def to_json(self) -> str:
        return json.dumps({
            "star_like": self.star_like,
            "path_like": self.path_like,
            "undecided": self.undecided,
            "wilson_intervals": self.wilson,
            "config_hash": self.config_hash,
            "births": self.births,
            "replicas": self.replicas,
            "note": self.note,
        })


@dataclass
class RunDiagnostics:
    max_degree: int
    hub_depth: int
    hub_handoff: bool  # argmax-degree node changed during the second half
    frontier_depth: int  # depth of the node owning the earliest pending event


def _run_once(spec: CounterexampleSpec, births: int, coin: float,
              rng: np.random.Generator) -> RunDiagnostics:
    p = spec.p
    parent = [-1]
    depth = [0]
    outdeg = [0]
    r_val = [float(sample_pareto_exact(spec.alpha, rng))]
    typ = [1 if rng.random() < coin else 0]

    def next_gap(u: int, i: int) -> float:
        # waiting time before node u's i-th child
        if typ[u] == 0:
            return rng.exponential(1.0 / (r_val[u] * float(i) ** p))
        if i == 1:
            return rng.exponential(1.0)
        return spec.s_value(i)

    heap = [(next_gap(0, 1), 0, 0)]
    seq = 1
    max_deg = 0
    hub = 0
    hub_at_half = 0
    half = births // 2
    for b in range(births):
        t, _, u = heapq.heappop(heap)
        child = len(parent)
        parent.append(u)
        depth.append(depth[u] + 1)
        outdeg[u] += 1
        outdeg.append(0)
        r_val.append(float(sample_pareto_exact(spec.alpha, rng)))
        typ.append(1 if rng.random() < coin else 0)
        if outdeg[u] > max_deg or (outdeg[u] == max_deg and u < hub):
            max_deg = outdeg[u]
            hub = u
        if b + 1 == half:
            hub_at_half = hub
        heapq.heappush(heap, (t + next_gap(u, outdeg[u] + 1), seq, u))
        seq += 1
        heapq.heappush(heap, (t + next_gap(child, 1), seq, child))
        seq += 1
    frontier = min(heap)[2]
    return RunDiagnostics(max_degree=max_deg, hub_depth=depth[hub],
                          hub_handoff=hub != hub_at_half,
                          frontier_depth=depth[frontier])


def simulate_counterexample(spec: CounterexampleSpec, births: int, replicas: int,
                            seed: int, coin: float = 0.5, theta: float = 0.5,
                            depth_threshold: int = 20) -> CounterexampleResult:
    """Classify truncated runs as star-like / path-like / undecided.

    Star-like: a dominant degree (max out-degree above ``theta * births``)
    held by a persistent hub (the argmax-degree node did not change during
    the second half of the run).  Path-like: the hub handed off during the
    second half, or sits at positive depth, or the explosion frontier (the
    node owning the earliest pending event) is deeper than
    ``depth_threshold`` -- the degree mass is descending the spine.  At
    these truncations the raw degree share exceeds ``theta`` for both
    mechanisms, so persistence-of-dominance is what separates them.
    """
    if births < 10 ** 3:
        raise InvalidParametersError("births must be >= 1000 for the proxies to mean anything")
    spec.ensure(64)
    star = path = undecided = 0
    for i in range(replicas):
        rng = replica_generator(hash64(seed, 0xC0DE), i)
        diag = _run_once(spec, births, coin, rng)
        descending = (diag.hub_handoff or diag.hub_depth >= 1
                      or diag.frontier_depth > depth_threshold)
        if diag.max_degree > theta * births and not descending:
            star += 1
        elif descending:
            path += 1
        else:
            undecided += 1
    config = dict(spec.config(), births=births, replicas=replicas, coin=coin,
                  theta=theta, depth_threshold=depth_threshold, seed=seed)
    import hashlib

    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]
    return CounterexampleResult(
        star_like=star / replicas,
        path_like=path / replicas,
        undecided=undecided / replicas,
        wilson={
            "star_like": wilson_interval(star, replicas),
            "path_like": wilson_interval(path, replicas),
            "undecided": wilson_interval(undecided, replicas),
        },
        config_hash=digest,
        births=births,
        replicas=replicas,
    )
