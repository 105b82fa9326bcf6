"""Fitness functions, vertex-weight laws and reciprocal tail sums.

The attachment rate of a node with out-degree ``i`` and weight ``w`` is

    f(i, w) = g(w) * s(i) + h(w),

where ``s`` is the degree function and ``(g, h)`` the weight functions.
``g`` and ``h`` are required to be nondecreasing with ``g(0) > 0`` and
``h(0) >= 0``, so ``w = 0`` minimises the rate uniformly in ``i`` and the
tail sums

    mu_n(w) = sum_{i >= n} 1 / f(i, w)

are maximised at ``w = 0``.  Explosivity (``mu_0(w) < infinity``) is
certified through closed-form integral bounds on ``sum 1/s(i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .errors import (
    InvalidParametersError,
    NonSummableError,
    ToleranceError,
    UnsupportedVariantError,
)

__all__ = [
    "PowerLawDegree",
    "LogStretchedDegree",
    "PolyLogDegree",
    "TableDegree",
    "WeightFunctionPair",
    "FitnessSpec",
    "Constant",
    "ParetoLike",
    "LogStretchedExp",
    "StretchedExp",
    "PowerLawPlus",
    "TwoType",
    "fitness",
    "mu_exact",
    "mu_tail_bounds",
    "mu_asymptotic",
    "sample_weight",
    "degree_from_string",
    "weights_from_string",
    "distribution_from_string",
]


# ---------------------------------------------------------------------------
# Degree functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawDegree:
    """s(i) = (i+1)**p with p > 1."""

    p: float

    kind = "power"

    def __post_init__(self):
        if not self.p > 1:
            raise InvalidParametersError(f"power-law exponent must exceed 1, got {self.p}")

    def value(self, i):
        return (np.asarray(i, dtype=float) + 1.0) ** self.p

    def tail_integral(self, m: int) -> float:
        """Closed form of integral_m^inf dx / s(x)."""
        return (m + 1.0) ** (1.0 - self.p) / (self.p - 1.0)

    def params(self):
        return (self.p,)


@dataclass(frozen=True)
class LogStretchedDegree:
    """s(i) = (i+1) * exp(log(i+1)**beta), barely super-linear, beta in (0,1)."""

    beta: float

    kind = "logstretched"

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise InvalidParametersError(f"beta must lie in (0,1), got {self.beta}")

    def value(self, i):
        x = np.asarray(i, dtype=float) + 1.0
        return x * np.exp(np.log(x) ** self.beta)

    def tail_integral(self, m: int) -> float:
        # substitution y = log(x+1):  integral = (1/beta) * Gamma(1/beta, log(m+1)**beta)
        a = 1.0 / self.beta
        t = math.log(m + 1.0) ** self.beta
        return a * special.gammaincc(a, t) * special.gamma(a)

    def params(self):
        return (self.beta,)


@dataclass(frozen=True)
class PolyLogDegree:
    """s(i) = (i+2) * log(i+2)**sigma, barely super-linear, sigma > 1."""

    sigma: float

    kind = "polylog"

    def __post_init__(self):
        if not self.sigma > 1:
            raise InvalidParametersError(f"sigma must exceed 1, got {self.sigma}")

    def value(self, i):
        x = np.asarray(i, dtype=float) + 2.0
        return x * np.log(x) ** self.sigma

    def tail_integral(self, m: int) -> float:
        return math.log(m + 2.0) ** (1.0 - self.sigma) / (self.sigma - 1.0)

    def params(self):
        return (self.sigma,)


@dataclass(frozen=True)
class TableDegree:
    """Finite table of rates with a declared dominating power-law tail.

    ``s(i) = values[i]`` for ``i < len(values)`` and ``tail_coeff*(i+1)**tail_p``
    beyond.  The tail rule is what certifies summability; ``tail_p <= 1``
    is rejected because no convergence certificate exists.
    """

    values: tuple
    tail_p: float
    tail_coeff: float = 1.0

    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) == 0:
            raise InvalidParametersError("table must contain at least one rate")
        if any(v <= 0 for v in self.values):
            raise InvalidParametersError("table rates must be positive")
        if not self.tail_p > 1:
            raise NonSummableError(
                f"declared tail exponent {self.tail_p} does not certify summability"
            )
        if not self.tail_coeff > 0:
            raise InvalidParametersError("tail coefficient must be positive")

    @property
    def table_len(self) -> int:
        return len(self.values)

    def value(self, i):
        idx = np.asarray(i)
        tail = self.tail_coeff * (idx.astype(float) + 1.0) ** self.tail_p
        if idx.ndim == 0:
            return float(self.values[int(idx)]) if int(idx) < self.table_len else float(tail)
        table = np.array(self.values)
        out = np.where(idx < self.table_len, table[np.minimum(idx, self.table_len - 1)], tail)
        return out

    def tail_integral(self, m: int) -> float:
        # Only valid in the analytic tail region.
        if m < self.table_len:
            raise UnsupportedVariantError("tail integral defined beyond the table only")
        return (m + 1.0) ** (1.0 - self.tail_p) / (self.tail_coeff * (self.tail_p - 1.0))

    def params(self):
        return (self.values, self.tail_p, self.tail_coeff)


def _first_index_at_least(degree, y: float, lo: int = 0) -> int:
    """Smallest index i >= lo with s(i) >= y (s eventually increasing)."""
    if isinstance(degree, TableDegree):
        for i in range(lo, degree.table_len):
            if degree.value(i) >= y:
                return i
        lo = max(lo, degree.table_len)
    if degree.value(lo) >= y:
        return lo
    hi = max(lo + 1, 2)
    while degree.value(hi) < y:
        hi *= 2
        if hi > 1 << 62:
            raise ToleranceError("degree function never reaches requested level")
    lo_s = max(lo, hi // 2)
    while lo_s + 1 < hi:
        mid = (lo_s + hi) // 2
        if degree.value(mid) >= y:
            hi = mid
        else:
            lo_s = mid
    return hi


# ---------------------------------------------------------------------------
# Weight functions g, h
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightFunctionPair:
    """Multiplicative and additive weight functions (both nondecreasing).

    ``gamma`` records the regular-variation exponent of ``h`` in the mixed
    case (``gamma = 1`` in the additive case by definition).
    """

    g: Callable
    h: Callable
    gamma: float
    kind: str = "custom"
    params: tuple = ()

    @classmethod
    def pure(cls) -> "WeightFunctionPair":
        """g == 1, h == 0: the weight has no effect on the rate."""
        return cls(g=lambda w: np.ones_like(np.asarray(w, dtype=float)),
                   h=lambda w: np.zeros_like(np.asarray(w, dtype=float)),
                   gamma=0.0, kind="pure")

    @classmethod
    def additive(cls) -> "WeightFunctionPair":
        """g == 1, h(w) = w."""
        return cls(g=lambda w: np.ones_like(np.asarray(w, dtype=float)),
                   h=lambda w: np.asarray(w, dtype=float),
                   gamma=1.0, kind="additive")

    @classmethod
    def mixed(cls, gamma: float = 0.0, h_scale: float = 0.0) -> "WeightFunctionPair":
        """g(w) = w + 1 and h(w) = h_scale * (w+1)**gamma (default h == 0)."""
        if gamma < 0:
            raise InvalidParametersError("gamma must be >= 0")
        if h_scale < 0:
            raise InvalidParametersError("h_scale must be >= 0")

        def _h(w, _s=h_scale, _g=gamma):
            w = np.asarray(w, dtype=float)
            if _s == 0.0:
                return np.zeros_like(w)
            return _s * (w + 1.0) ** _g

        return cls(g=lambda w: np.asarray(w, dtype=float) + 1.0,
                   h=_h, gamma=gamma, kind="mixed", params=(gamma, h_scale))


# ---------------------------------------------------------------------------
# Fitness specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitnessSpec:
    degree: object
    weights: WeightFunctionPair = field(default_factory=WeightFunctionPair.pure)

    def __post_init__(self):
        g0 = float(self.weights.g(0.0))
        h0 = float(self.weights.h(0.0))
        if not g0 > 0:
            raise InvalidParametersError("g(0) must be positive")
        if h0 < 0:
            raise InvalidParametersError("h(0) must be nonnegative")
        # Explosivity certificate: integral tail bound on sum 1/s(i).
        m0 = self.degree.table_len if isinstance(self.degree, TableDegree) else 0
        if not math.isfinite(self.degree.tail_integral(m0)):
            raise NonSummableError("sum of 1/s(i) is not certified finite")

    @property
    def g0(self) -> float:
        return float(self.weights.g(0.0))

    def fitness(self, i, w):
        """f(i, w) = g(w) s(i) + h(w); vectorized in either argument."""
        s = self.degree.value(i)
        return self.weights.g(w) * s + self.weights.h(w)


def fitness(spec: FitnessSpec, i, w):
    return spec.fitness(i, w)


# ---------------------------------------------------------------------------
# Tail sums mu_n^w
# ---------------------------------------------------------------------------


def _table_start(spec: FitnessSpec) -> int:
    return spec.degree.table_len if isinstance(spec.degree, TableDegree) else 0


def mu_tail_bounds(spec: FitnessSpec, m: int, w):
    """Certified bracket for sum_{i >= m} 1/f(i, w).

    Valid because 1/f is decreasing in i from ``m`` on (s nondecreasing
    there): the sum lies in ``[I, I + 1/f(m,w)]`` with
    ``I = integral_m^inf dx/f(x,w)``, and ``I`` itself is sandwiched via
    ``g(w) s(x) <= f(x,w) <= g(w) s(x) (1 + h(w)/(g(w) s(m)))`` on ``[m, inf)``.
    Vectorized over ``w``.
    """
    if m < _table_start(spec):
        raise UnsupportedVariantError("bracket only valid beyond the table region")
    t = spec.degree.tail_integral(m)
    s_m = spec.degree.value(m)
    g = spec.weights.g(w)
    h = spec.weights.h(w)
    lo = t / (g + h / s_m)
    hi = 1.0 / (g * s_m + h) + t / g
    return lo, hi


def mu_exact(spec: FitnessSpec, n: int, w: float, tol: float = 1e-9,
             max_terms: int = 1 << 26) -> float:
    """Tail sum sum_{i >= n} 1/f(i, w) within +-tol (certified).

    Direct summation up to a truncation point beyond which the closed-form
    integral bracket of the remainder has half-width below ``tol``; the
    bracket midpoint is added, so the certified absolute error is
    ``(hi - lo)/2 <= tol``.
    """
    if tol <= 0:
        raise InvalidParametersError("tol must be positive")
    w = float(w)
    m = int(n)
    total = 0.0
    # A table region must be summed term by term before the analytic bracket applies.
    t0 = _table_start(spec)
    if m < t0:
        idx = np.arange(m, t0)
        total += float(np.sum(1.0 / spec.fitness(idx, w)))
        m = t0
    block = 1024
    while True:
        lo, hi = mu_tail_bounds(spec, m, w)
        if (hi - lo) / 2.0 <= tol:
            return total + (lo + hi) / 2.0
        if m - n + block > max_terms:
            raise ToleranceError(
                f"mu_exact: tolerance {tol} needs more than {max_terms} terms "
                f"(bracket half-width {(hi - lo) / 2.0:.3g} at m={m})"
            )
        idx = np.arange(m, m + block)
        total += float(np.sum(1.0 / spec.fitness(idx, w)))
        m += block
        block = min(block * 2, 1 << 20)


def mu_asymptotic(spec: FitnessSpec, n: int, w: float) -> float:
    """Leading-order tail-sum formula (o(1) corrections dropped).

    Power law: n * s(n)**-1 / (g(w)(p-1)); log-stretched:
    beta**-1 (log n)**(1-beta) exp(-(log n)**beta) / g(w); poly-log:
    (log n)**-(sigma-1) / (g(w)(sigma-1)).
    """
    g = float(spec.weights.g(w))
    d = spec.degree
    if isinstance(d, PowerLawDegree):
        if n < 1:
            raise InvalidParametersError("asymptotic formula needs n >= 1")
        return n * float(d.value(n)) ** -1 / (g * (d.p - 1.0))
    if isinstance(d, LogStretchedDegree):
        if n < 2:
            raise InvalidParametersError("asymptotic formula needs n >= 2")
        ln = math.log(n)
        return ln ** (1.0 - d.beta) * math.exp(-(ln ** d.beta)) / (d.beta * g)
    if isinstance(d, PolyLogDegree):
        if n < 2:
            raise InvalidParametersError("asymptotic formula needs n >= 2")
        return math.log(n) ** (1.0 - d.sigma) / (g * (d.sigma - 1.0))
    raise UnsupportedVariantError(f"no asymptotic formula for degree kind {d.kind!r}")


# ---------------------------------------------------------------------------
# Vertex-weight distributions
# ---------------------------------------------------------------------------


class WeightDistribution:
    """Law of the i.i.d. vertex weights; knows its own tail P(W >= x)."""

    kind = "abstract"
    has_all_moments = False

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def tail(self, x):
        raise NotImplementedError

    def params(self):
        return ()

    def spec_string(self) -> str:
        ps = ",".join(f"{p:g}" for p in self.params())
        return f"{self.kind}:{ps}" if ps else self.kind


def _uniform_open(rng, size):
    u = rng.random(size)
    return np.maximum(u, 1e-300)


@dataclass(frozen=True)
class Constant(WeightDistribution):
    w0: float = 0.0

    kind = "constant"
    has_all_moments = True

    def __post_init__(self):
        if self.w0 < 0:
            raise InvalidParametersError("constant weight must be >= 0")

    def sample(self, rng, size=None):
        if size is None:
            return self.w0
        return np.full(size, self.w0, dtype=float)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.w0, 1.0, 0.0)

    def params(self):
        return (self.w0,)


@dataclass(frozen=True)
class ParetoLike(WeightDistribution):
    """P(W >= x) = (x/scale)**-(alpha-1) for x >= scale, alpha > 1."""

    alpha: float
    scale: float = 1.0

    kind = "pareto"
    has_all_moments = False

    def __post_init__(self):
        if not self.alpha > 1:
            raise InvalidParametersError("alpha must exceed 1")
        if not self.scale > 0:
            raise InvalidParametersError("scale must be positive")

    def sample(self, rng, size=None):
        u = _uniform_open(rng, size)
        return self.scale * u ** (-1.0 / (self.alpha - 1.0))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            t = (x / self.scale) ** -(self.alpha - 1.0)
        return np.where(x <= self.scale, 1.0, t)

    def params(self):
        return (self.alpha, self.scale)


@dataclass(frozen=True)
class LogStretchedExp(WeightDistribution):
    """P(W >= x) = exp(-c log(x)**nu) for x >= 1, nu > 1."""

    nu: float
    c: float = 1.0

    kind = "logstretchedexp"
    has_all_moments = True

    def __post_init__(self):
        if not self.nu > 1:
            raise InvalidParametersError("nu must exceed 1")
        if not self.c > 0:
            raise InvalidParametersError("c must be positive")

    def sample(self, rng, size=None):
        u = _uniform_open(rng, size)
        return np.exp((-np.log(u) / self.c) ** (1.0 / self.nu))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        safe = np.maximum(x, 1.0)
        return np.where(x <= 1.0, 1.0, np.exp(-self.c * np.log(safe) ** self.nu))

    def params(self):
        return (self.nu, self.c)


@dataclass(frozen=True)
class StretchedExp(WeightDistribution):
    """P(W >= x) = exp(-c x**kappa), kappa > 0."""

    kappa: float
    c: float = 1.0

    kind = "stretchedexp"
    has_all_moments = True

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidParametersError("kappa must be positive")
        if not self.c > 0:
            raise InvalidParametersError("c must be positive")

    def sample(self, rng, size=None):
        u = _uniform_open(rng, size)
        return (-np.log(u) / self.c) ** (1.0 / self.kappa)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.c * np.maximum(x, 0.0) ** self.kappa)

    def params(self):
        return (self.kappa, self.c)


@dataclass(frozen=True)
class PowerLawPlus(WeightDistribution):
    """Power law with a log-stretched correction, tau in (0,1).

    ``heavy=False``: P(W >= x) = min(1, exp(-log x - c log(x)**tau)) --
    slightly lighter than 1/x.  ``heavy=True`` flips the correction sign,
    giving a tail slightly heavier than 1/x.
    """

    tau: float
    c: float = 1.0
    heavy: bool = False

    kind = "powerlawplus"
    has_all_moments = False

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise InvalidParametersError("tau must lie in (0,1)")
        if not self.c > 0:
            raise InvalidParametersError("c must be positive")

    def _log_tail_of_y(self, y):
        sign = 1.0 if self.heavy else -1.0
        return -y + sign * self.c * y ** self.tau

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        y = np.log(np.maximum(x, 1.0))
        return np.minimum(1.0, np.exp(self._log_tail_of_y(y)))

    def sample(self, rng, size=None):
        # Invert  y -+ c y**tau = b  with b = -log U, per branch.
        u = _uniform_open(rng, size)
        b = -np.log(u)
        scalar = np.ndim(b) == 0
        b = np.atleast_1d(b)
        if self.heavy:
            # y - c y**tau = b; fixed point y <- b + c y**tau from the stable side
            y = np.maximum(b, self.c ** (1.0 / (1.0 - self.tau))) + 1.0
            for _ in range(200):
                y = b + self.c * y ** self.tau
        else:
            # y + c y**tau = b; bisection on [0, b]
            lo = np.zeros_like(b)
            hi = b.copy()
            for _ in range(90):
                mid = 0.5 * (lo + hi)
                too_big = mid + self.c * mid ** self.tau > b
                hi = np.where(too_big, mid, hi)
                lo = np.where(too_big, lo, mid)
            y = 0.5 * (lo + hi)
        x = np.exp(y)
        return float(x[0]) if scalar else x

    def params(self):
        return (self.tau, self.c)

    def spec_string(self) -> str:
        base = f"{self.kind}:{self.tau:g},{self.c:g}"
        return base + (",heavy" if self.heavy else "")


@dataclass(frozen=True)
class TwoType(WeightDistribution):
    """Composite weight (R, I): R from ``r_dist``, I a Bernoulli(coin) type.

    Samples are returned as an array of shape (..., 2).  ``tail`` refers to
    the marginal tail of R.
    """

    r_dist: WeightDistribution
    coin: float = 0.5

    kind = "twotype"
    has_all_moments = False

    def __post_init__(self):
        if not 0.0 <= self.coin <= 1.0:
            raise InvalidParametersError("coin must be a probability")

    def sample(self, rng, size=None):
        if size is None:
            r = self.r_dist.sample(rng)
            i = float(rng.random() < self.coin)
            return np.array([r, i])
        r = np.asarray(self.r_dist.sample(rng, size), dtype=float)
        i = (rng.random(size) < self.coin).astype(float)
        return np.stack([r, i], axis=-1)

    def tail(self, x):
        return self.r_dist.tail(x)

    def params(self):
        return self.r_dist.params() + (self.coin,)

    def spec_string(self) -> str:
        return f"twotype:{self.r_dist.spec_string()};{self.coin:g}"


def sample_weight(dist: WeightDistribution, rng: np.random.Generator, size=None):
    return dist.sample(rng, size)


# ---------------------------------------------------------------------------
# String specs (CLI / config round-trip)
# ---------------------------------------------------------------------------


def degree_from_string(text: str):
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "power":
        return PowerLawDegree(p=float(rest))
    if kind == "logstretched":
        return LogStretchedDegree(beta=float(rest))
    if kind == "polylog":
        return PolyLogDegree(sigma=float(rest))
    if kind == "table":
        # table:v1,v2,...@tail_p[,tail_coeff]
        body, _, tail = rest.partition("@")
        values = tuple(float(v) for v in body.split(",") if v)
        tail_parts = [float(v) for v in tail.split(",") if v]
        if not tail_parts:
            raise InvalidParametersError("table degree needs a declared tail rule '@p[,c]'")
        coeff = tail_parts[1] if len(tail_parts) > 1 else 1.0
        return TableDegree(values=values, tail_p=tail_parts[0], tail_coeff=coeff)
    raise InvalidParametersError(f"unknown degree spec {text!r}")


def degree_to_string(degree) -> str:
    if isinstance(degree, PowerLawDegree):
        return f"power:{degree.p:g}"
    if isinstance(degree, LogStretchedDegree):
        return f"logstretched:{degree.beta:g}"
    if isinstance(degree, PolyLogDegree):
        return f"polylog:{degree.sigma:g}"
    if isinstance(degree, TableDegree):
        vals = ",".join(f"{v:g}" for v in degree.values)
        return f"table:{vals}@{degree.tail_p:g},{degree.tail_coeff:g}"
    raise UnsupportedVariantError("cannot serialize custom degree function")


def weights_from_string(text: str) -> WeightFunctionPair:
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "pure":
        return WeightFunctionPair.pure()
    if kind == "additive":
        return WeightFunctionPair.additive()
    if kind == "mixed":
        parts = [float(v) for v in rest.split(",") if v]
        gamma = parts[0] if parts else 0.0
        h_scale = parts[1] if len(parts) > 1 else 0.0
        return WeightFunctionPair.mixed(gamma=gamma, h_scale=h_scale)
    raise InvalidParametersError(f"unknown fitness weights spec {text!r}")


def weights_to_string(pair: WeightFunctionPair) -> str:
    if pair.kind == "pure":
        return "pure"
    if pair.kind == "additive":
        return "additive"
    if pair.kind == "mixed":
        gamma, h_scale = pair.params
        return f"mixed:{gamma:g},{h_scale:g}"
    raise UnsupportedVariantError("cannot serialize custom weight functions")


def distribution_from_string(text: str) -> WeightDistribution:
    if text.startswith("twotype:"):
        body = text[len("twotype:"):]
        inner, _, coin = body.rpartition(";")
        return TwoType(r_dist=distribution_from_string(inner), coin=float(coin))
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    parts = [p for p in rest.split(",") if p]
    if kind == "constant":
        return Constant(w0=float(parts[0]) if parts else 0.0)
    if kind == "pareto":
        return ParetoLike(alpha=float(parts[0]), scale=float(parts[1]) if len(parts) > 1 else 1.0)
    if kind == "logstretchedexp":
        return LogStretchedExp(nu=float(parts[0]), c=float(parts[1]) if len(parts) > 1 else 1.0)
    if kind == "stretchedexp":
        return StretchedExp(kappa=float(parts[0]), c=float(parts[1]) if len(parts) > 1 else 1.0)
    if kind == "powerlawplus":
        heavy = "heavy" in parts
        nums = [float(p) for p in parts if p != "heavy"]
        return PowerLawPlus(tau=nums[0], c=nums[1] if len(nums) > 1 else 1.0, heavy=heavy)
    raise InvalidParametersError(f"unknown weight distribution spec {text!r}")
