"""Numerical evaluation of the star/path summability criteria.

The building block is the Laplace-transform product

    prod_{i=0}^{n-1} f(i, w) / (f(i, w) + lambda)  =  exp(-sum log1p(lambda/f)),

always computed in log space.  ``infinite_product`` extends the product to
n = infinity with a certified bracket: the dropped factors satisfy

    -lam * R_u  <=  log(remainder)  <=  -lam * R_l + lam^2 * R_u / (2 f(M, w))

where ``[R_l, R_u]`` is the closed-form bracket of ``sum_{i>=M} 1/f`` (from
``x - x^2/2 <= log1p(x) <= x``), so truncation error is controlled without
summing into the far tail.

Series verdicts are regression heuristics: no finite computation decides
convergence, so the decay exponent of the terms is fitted on a log-log
grid and compared against 1; closed-form phase predicates live in the
``phase`` module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParametersError
from .model import (
    Constant,
    FitnessSpec,
    WeightDistribution,
    mu_exact,
    mu_tail_bounds,
    _first_index_at_least,
    _table_start,
)

__all__ = [
    "laplace_product",
    "infinite_product",
    "ProductBracket",
    "star_series_term",
    "path_series_term",
    "divergence_probe",
    "star_series_report",
    "path_series_report",
    "SeriesReport",
    "SeriesTerm",
    "fit_decay_exponent",
]

LIKELY_SUMMABLE = "LikelySummable"
LIKELY_DIVERGENT = "LikelyDivergent"
INCONCLUSIVE = "Inconclusive"


def _log1p_partial(spec: FitnessSpec, lam: float, w, m: int, chunk: int = 1 << 14):
    """sum_{i<m} log1p(lam / f(i, w)); vectorized over w."""
    w = np.asarray(w, dtype=float)
    total = np.zeros(np.shape(w), dtype=float)
    g = spec.weights.g(w)
    h = spec.weights.h(w)
    for lo in range(0, m, chunk):
        idx = np.arange(lo, min(m, lo + chunk), dtype=float)
        s = spec.degree.value(idx)
        if w.ndim == 0:
            f = g * s + h
            total = total + float(np.sum(np.log1p(lam / f)))
        else:
            f = np.multiply.outer(g, s) + h[..., None]
            total = total + np.sum(np.log1p(lam / f), axis=-1)
    return total


def laplace_product(spec: FitnessSpec, n: int, w: float, lam: float) -> float:
    """prod_{i=0}^{n-1} f(i,w)/(f(i,w)+lam), in log space."""
    if lam < 0:
        raise InvalidParametersError("lambda must be nonnegative")
    if lam == 0.0 or n == 0:
        return 1.0
    return float(np.exp(-_log1p_partial(spec, lam, float(w), n)))


def _log_remainder_bracket(spec: FitnessSpec, lam: float, w, m: int):
    """Certified bracket of log prod_{i>=m} f/(f+lam); vectorized over w."""
    r_lo, r_hi = mu_tail_bounds(spec, m, w)
    f_m = spec.fitness(m, w)
    log_lo = -lam * r_hi
    log_hi = -lam * r_lo + 0.5 * lam * lam * r_hi / f_m
    return log_lo, log_hi


@dataclass
class ProductBracket:
    value: float
    low: float
    high: float
    log_value: float
    log_low: float
    log_high: float


def _safe_exp_hi(x: float) -> float:
    """exp rounded so it stays a valid upper bound at float resolution."""
    v = math.exp(x)
    return v if v > 0.0 or x == -math.inf else 5e-324


def infinite_product(spec: FitnessSpec, w: float, lam: float,
                     rel_tol: float = 1e-9, max_terms: int = 1 << 26) -> ProductBracket:
    """prod_{i=0}^inf f(i,w)/(f(i,w)+lam) with a certified enclosure.

    Requires sum 1/f(i, w) < infinity (guaranteed by the spec's explosivity
    certificate).  ``[low, high]`` (and ``[log_low, log_high]``) contain the
    true value; the log-width is at most ``log1p(rel_tol)`` so the relative
    enclosure width is at most ``rel_tol``.
    """
    if lam < 0:
        raise InvalidParametersError("lambda must be nonnegative")
    if lam == 0.0:
        return ProductBracket(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    w = float(w)
    m = _table_start(spec)
    # start beyond the point where lam/f <= 1 to make the bracket effective
    m = max(m, _first_index_at_least(spec.degree, lam / spec.g0, m))
    partial = float(_log1p_partial(spec, lam, w, m))
    goal = math.log1p(rel_tol)
    while True:
        lo_t, hi_t = _log_remainder_bracket(spec, lam, w, m)
        if hi_t - lo_t <= goal:
            log_lo = -partial + lo_t
            log_hi = -partial + hi_t
            log_mid = -partial + 0.5 * (lo_t + hi_t)
            return ProductBracket(math.exp(log_mid), math.exp(log_lo),
                                  _safe_exp_hi(log_hi), log_mid, log_lo, log_hi)
        if 2 * m > max_terms:
            raise InvalidParametersError(
                f"infinite_product: cannot certify rel_tol={rel_tol} within {max_terms} terms")
        step = max(m, 1024)
        idx = np.arange(m, m + step, dtype=float)
        f = spec.fitness(idx, w)
        partial += float(np.sum(np.log1p(lam / f)))
        m += step


# ---------------------------------------------------------------------------
# Vectorized Monte Carlo product values (accurate, not certified)
# ---------------------------------------------------------------------------


def _mc_product_values(spec: FitnessSpec, lam: float, w: np.ndarray,
                       eta: float = 5e-4, m_cap: int = 1 << 21) -> np.ndarray:
    """Product values for a batch of weights.

    Per-sample truncation at the first index where lam/f <= eta, then a
    midpoint tail correction; the per-value relative bias is O(eta).  MC
    standard errors dominate, so certification is deferred to
    ``infinite_product`` (used verbatim for constant weights).
    """
    w = np.asarray(w, dtype=float)
    if lam == 0.0:
        return np.ones_like(w)
    g = np.asarray(spec.weights.g(w), dtype=float)
    h = np.asarray(spec.weights.h(w), dtype=float)
    t0 = _table_start(spec)
    lam_over = lam / eta
    values = np.empty(len(w), dtype=float)
    # samples whose additive part alone tames the rate need no exact region
    trivial = h >= lam_over
    if np.any(trivial):
        idx = np.nonzero(trivial)[0]
        m_t = max(t0, 1)
        lo, hi = mu_tail_bounds(spec, m_t, w[idx])
        pre = np.asarray(_log1p_partial(spec, lam, w[idx], m_t), dtype=float)
        values[idx] = np.exp(-pre - lam * 0.5 * (lo + hi))
    rest = np.nonzero(~trivial)[0]
    if len(rest) > 0:
        # power-of-two truncation candidates; assign each sample the first
        # candidate whose degree-function value reaches lam / (eta g(w))
        pows = [max(t0 + 1, 1)]
        while pows[-1] < m_cap:
            pows.append(min(pows[-1] * 2, m_cap))
        s_at = np.maximum.accumulate(
            np.array([float(spec.degree.value(p)) for p in pows]))
        s_req = lam_over / g[rest]
        which = np.minimum(np.searchsorted(s_at, s_req, side="left"), len(pows) - 1)
        for b in np.unique(which):
            members = rest[which == b]
            m_b = pows[int(b)]
            part = np.asarray(_log1p_partial(spec, lam, w[members], m_b), dtype=float)
            lo, hi = mu_tail_bounds(spec, m_b, w[members])
            values[members] = np.exp(-part - lam * 0.5 * (lo + hi))
    return values


def star_series_term(spec: FitnessSpec, dist: WeightDistribution, n: int,
                     c: float = 0.5, mc_samples: int = 10000,
                     rng: np.random.Generator | None = None):
    """Monte Carlo estimate of E prod_i f(i,W)/(f(i,W) + c/mu_n).

    Returns ``(estimate, stderr)``; constant weights collapse to the exact
    certified product with zero standard error.
    """
    if not 0 < c < 1:
        raise InvalidParametersError("star series requires 0 < c < 1")
    mu_n = mu_exact(spec, n, 0.0, tol=1e-6 * _mu_scale(spec, n))
    lam = c / mu_n
    if isinstance(dist, Constant):
        return infinite_product(spec, dist.w0, lam, rel_tol=1e-9).value, 0.0
    if rng is None:
        raise InvalidParametersError("rng required for Monte Carlo over weights")
    w = np.asarray(dist.sample(rng, mc_samples), dtype=float)
    vals = _mc_product_values(spec, lam, w)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(len(vals)))


def path_series_term(spec: FitnessSpec, dist: WeightDistribution, n: int,
                     c: float = 2.0, w_ref: float = 0.0,
                     mc_samples: int = 10000,
                     rng: np.random.Generator | None = None):
    """Term of the path criterion: rate c * log(n) / mu_n^w at reference weight."""
    if not c > 1:
        raise InvalidParametersError("path series requires c > 1")
    if n < 2:
        raise InvalidParametersError("path series requires n >= 2")
    mu_nw = mu_exact(spec, n, w_ref, tol=1e-6 * _mu_scale(spec, n, w_ref))
    lam = c * math.log(n) / mu_nw
    if isinstance(dist, Constant):
        return infinite_product(spec, dist.w0, lam, rel_tol=1e-9).value, 0.0
    if rng is None:
        raise InvalidParametersError("rng required for Monte Carlo over weights")
    w = np.asarray(dist.sample(rng, mc_samples), dtype=float)
    vals = _mc_product_values(spec, lam, w)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(len(vals)))


def _mu_scale(spec: FitnessSpec, n: int, w: float = 0.0) -> float:
    lo, hi = mu_tail_bounds(spec, max(n, _table_start(spec)), w)
    return max(hi, 1e-300)


# ---------------------------------------------------------------------------
# Reports and decay regression
# ---------------------------------------------------------------------------


@dataclass
class SeriesTerm:
    n: int
    value: float
    stderr: float
    log_value: float


@dataclass
class SeriesReport:
    kind: str
    terms: list[SeriesTerm]
    decay_exponent: float
    ci_low: float
    ci_high: float
    verdict: str
    notes: str = ""

    def to_csv(self, path: str) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "term", "stderr"])
            for t in self.terms:
                writer.writerow([t.n, repr(t.value), repr(t.stderr)])

    def verdict_json(self) -> str:
        return json.dumps({
            "kind": self.kind,
            "decay_exponent": self.decay_exponent,
            "ci95": [self.ci_low, self.ci_high],
            "verdict": self.verdict,
            "notes": self.notes,
        })


def fit_decay_exponent(ns, log_terms, se_logs):
    """Weighted least-squares fit of log term = b - a log n; returns (a, lo, hi)."""
    ns = np.asarray(ns, dtype=float)
    y = np.asarray(log_terms, dtype=float)
    se = np.maximum(np.asarray(se_logs, dtype=float), 1e-9)
    keep = np.isfinite(y)
    ns, y, se = ns[keep], y[keep], se[keep]
    if len(ns) < 3:
        return math.nan, -math.inf, math.inf
    x = np.log(ns)
    wgt = 1.0 / se ** 2
    sw = np.sum(wgt)
    xbar = np.sum(wgt * x) / sw
    ybar = np.sum(wgt * y) / sw
    sxx = np.sum(wgt * (x - xbar) ** 2)
    slope = np.sum(wgt * (x - xbar) * (y - ybar)) / sxx
    resid = y - (ybar + slope * (x - xbar))
    dof = max(len(ns) - 2, 1)
    scale = math.sqrt(max(float(np.sum(wgt * resid ** 2) / dof), 1e-30) / sxx)
    se_slope = max(scale, math.sqrt(1.0 / sxx) * 1e-9)
    a = -float(slope)
    return a, a - 1.96 * se_slope, a + 1.96 * se_slope


def _verdict_from_ci(lo: float, hi: float) -> str:
    if lo > 1.0:
        return LIKELY_SUMMABLE
    if hi < 1.0:
        return LIKELY_DIVERGENT
    return INCONCLUSIVE


def _report(kind, ns, values, stderrs, log_values, notes=""):
    terms = [SeriesTerm(int(n), float(v), float(s), float(lv))
             for n, v, s, lv in zip(ns, values, stderrs, log_values)]
    se_logs = [s / v if v > 0 else math.inf for v, s in zip(values, stderrs)]
    a, lo, hi = fit_decay_exponent(ns, log_values, se_logs)
    return SeriesReport(kind=kind, terms=terms, decay_exponent=a,
                        ci_low=lo, ci_high=hi, verdict=_verdict_from_ci(lo, hi),
                        notes=notes)


def star_series_report(spec, dist, n_grid, c=0.5, mc_samples=10000, rng=None):
    """Star-series terms over a grid plus the decay-regression verdict.

    The same weight sample is reused across the grid (common random
    numbers), which smooths the fitted exponent.
    """
    w = None
    if not isinstance(dist, Constant):
        if rng is None:
            raise InvalidParametersError("rng required for Monte Carlo over weights")
        w = np.asarray(dist.sample(rng, mc_samples), dtype=float)
    values, stderrs, logs = [], [], []
    for n in n_grid:
        mu_n = mu_exact(spec, int(n), 0.0, tol=1e-6 * _mu_scale(spec, int(n)))
        lam = c / mu_n
        if w is None:
            pb = infinite_product(spec, dist.w0, lam, rel_tol=1e-9)
            est, se = pb.value, 0.0
            logs.append(pb.log_value)
        else:
            vals = _mc_product_values(spec, lam, w)
            est = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
            logs.append(math.log(est) if est > 0 else math.nan)
        values.append(est)
        stderrs.append(se)
    return _report("star", list(n_grid), values, stderrs, logs,
                   notes=f"c={c}; summability inferred from fitted decay, heuristic")


def path_series_report(spec, dist, n_grid, c=2.0, w_ref=0.0, mc_samples=10000, rng=None):
    w = None
    if not isinstance(dist, Constant):
        if rng is None:
            raise InvalidParametersError("rng required for Monte Carlo over weights")
        w = np.asarray(dist.sample(rng, mc_samples), dtype=float)
    values, stderrs, logs = [], [], []
    for n in n_grid:
        mu_nw = mu_exact(spec, int(n), w_ref, tol=1e-6 * _mu_scale(spec, int(n), w_ref))
        lam = c * math.log(n) / mu_nw
        if w is None:
            pb = infinite_product(spec, dist.w0, lam, rel_tol=1e-9)
            est, se = pb.value, 0.0
            logs.append(pb.log_value)
        else:
            vals = _mc_product_values(spec, lam, w)
            est = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
            logs.append(math.log(est) if est > 0 else math.nan)
        values.append(est)
        stderrs.append(se)
    return _report("path", list(n_grid), values, stderrs, logs,
                   notes=f"c={c}, w_ref={w_ref}; divergence inferred from fitted decay")


# ---------------------------------------------------------------------------
# Divergence probe: P(P < d mu_n^w) by simulation
# ---------------------------------------------------------------------------


def divergence_probe(spec: FitnessSpec, dist: WeightDistribution, w_ref: float = 0.0,
                     d: float = 0.5, n_grid=(16, 64, 256, 1024, 4096),
                     mc_samples: int = 20000,
                     rng: np.random.Generator | None = None) -> SeriesReport:
    """Estimate P(total birth-time sum < d * mu_n^w) on a grid of n.

    The birth-time sum is simulated exactly up to a truncation index and the
    remaining inter-birth times are replaced by the deterministic upper
    tail-sum bound (a conservative correction: it can only shrink the
    estimated probabilities).
    """
    if not 0 < d < 1:
        raise InvalidParametersError("divergence probe requires 0 < d < 1")
    if rng is None:
        raise InvalidParametersError("rng required")
    if isinstance(dist, Constant):
        w = np.full(mc_samples, dist.w0)
    else:
        w = np.asarray(dist.sample(rng, mc_samples), dtype=float)
    g = spec.weights.g(w)
    h = spec.weights.h(w)
    n_max = int(max(n_grid))
    nus = {}
    for n in n_grid:
        mu_nw = mu_exact(spec, int(n), w_ref, tol=1e-6 * _mu_scale(spec, int(n), w_ref))
        nus[int(n)] = d * mu_nw
    # truncation: tail standard deviation (~ sqrt(mu_M / f(M,0))) well below
    # the smallest threshold among the grid
    nu_min = min(nus.values())
    t0 = _table_start(spec)
    m = max(t0 + 1, 64)
    while True:
        lo, hi = mu_tail_bounds(spec, m, 0.0)
        sd = math.sqrt(hi / float(spec.fitness(m, 0.0)))
        if sd <= 0.02 * nu_min or m >= (1 << 22):
            break
        m *= 2
    totals = np.zeros(mc_samples)
    chunk = max(1, (1 << 22) // mc_samples)
    for lo_i in range(0, m, chunk):
        idx = np.arange(lo_i, min(m, lo_i + chunk), dtype=float)
        s = spec.degree.value(idx)
        rates = np.multiply.outer(g, s) + h[..., None]
        totals += np.sum(rng.exponential(1.0, size=rates.shape) / rates, axis=-1)
    tail_lo, tail_hi = mu_tail_bounds(spec, m, w)
    totals += tail_hi
    ns, values, stderrs, logs = [], [], [], []
    for n in n_grid:
        hits = float(np.mean(totals < nus[int(n)]))
        se = math.sqrt(max(hits * (1 - hits), 1.0 / mc_samples) / mc_samples)
        ns.append(int(n))
        values.append(hits)
        stderrs.append(se)
        logs.append(math.log(hits) if hits > 0 else math.nan)
    report = _report("divergence", ns, values, stderrs, logs,
                     notes=f"d={d}, w_ref={w_ref}; P(P < d mu_n^w) by simulation, "
                           "deterministic tail correction added")
    # all-zero tails at large n are evidence of fast decay, not of divergence
    if report.verdict == INCONCLUSIVE:
        nonzero = [t for t in report.terms if t.value > 0]
        zeros_at_large_n = [t for t in report.terms if t.value == 0.0]
        if zeros_at_large_n and nonzero and report.decay_exponent > 1:
            report.verdict = LIKELY_SUMMABLE
            report.notes += "; censored zero estimates at large n treated as fast decay"
    return report
