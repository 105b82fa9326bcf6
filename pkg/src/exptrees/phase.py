"""Closed-form phase classification and parameter-grid scans.

``classify`` renders the verdict tables for the six analyzed families
(three with a complete phase diagram, three with genuine gaps).  Star and
Path regions are open: a point exactly on a boundary, or inside one of the
appendix gaps, maps to Unknown -- the tool never extrapolates there.

All-moments weight laws (constant weights in particular) satisfy the
power-law or log-stretched upper tail bounds for every exponent, so the
Star conditions hold in the limit of large exponent; that reduction is
applied where the tables support it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParametersError

__all__ = [
    "PowerTail",
    "LogStretchedExpTail",
    "StretchedExpTail",
    "PowerLawPlusTail",
    "AllMomentsTail",
    "PhaseModel",
    "PhaseVerdict",
    "classify",
    "grid_scan",
    "tail_class_of",
    "STAR",
    "PATH",
    "UNKNOWN",
]

STAR = "Star"
PATH = "Path"
UNKNOWN = "Unknown"


# ---------------------------------------------------------------------------
# Weight-tail descriptors (two-sided unless stated otherwise)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerTail:
    """P(W >= x) comparable to x**-(alpha-1) from both sides."""

    alpha: float
    all_moments = False

    def __post_init__(self):
        if not self.alpha > 1:
            raise InvalidParametersError("alpha must exceed 1")


@dataclass(frozen=True)
class LogStretchedExpTail:
    """P(W >= x) comparable to exp(-c log(x)**nu) from both sides."""

    nu: float
    all_moments = True

    def __post_init__(self):
        if not self.nu > 1:
            raise InvalidParametersError("nu must exceed 1")


@dataclass(frozen=True)
class StretchedExpTail:
    """P(W >= x) comparable to exp(-c x**kappa) from both sides."""

    kappa: float
    all_moments = True

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidParametersError("kappa must be positive")


@dataclass(frozen=True)
class PowerLawPlusTail:
    """Tail x**-1 with a log-stretched correction.

    ``tau`` parameterizes the lighter-than-1/x upper bound, ``tau_prime``
    the heavier-than-1/x lower bound; a concrete law satisfies one side
    only, so exactly one must be given.
    """

    tau: float | None = None
    tau_prime: float | None = None
    all_moments = False

    def __post_init__(self):
        if (self.tau is None) == (self.tau_prime is None):
            raise InvalidParametersError("give exactly one of tau (upper) or tau_prime (lower)")
        for v in (self.tau, self.tau_prime):
            if v is not None and not 0.0 < v < 1.0:
                raise InvalidParametersError("tau exponents must lie in (0,1)")


@dataclass(frozen=True)
class AllMomentsTail:
    """Bounded or otherwise all-moments weights (constant weights included)."""

    all_moments = True


def tail_class_of(dist):
    """Map a sampling law to its phase-table tail descriptor.

    Scale and slowly-varying constants are dropped: the verdicts depend on
    exponents only.
    """
    from . import model as m

    if isinstance(dist, m.Constant):
        return AllMomentsTail()
    if isinstance(dist, m.ParetoLike):
        return PowerTail(alpha=dist.alpha)
    if isinstance(dist, m.LogStretchedExp):
        return LogStretchedExpTail(nu=dist.nu)
    if isinstance(dist, m.StretchedExp):
        return StretchedExpTail(kappa=dist.kappa)
    if isinstance(dist, m.PowerLawPlus):
        if dist.heavy:
            return PowerLawPlusTail(tau_prime=dist.tau)
        return PowerLawPlusTail(tau=dist.tau)
    raise InvalidParametersError(f"no tail class for distribution {dist!r}")


# ---------------------------------------------------------------------------
# Phase model and verdict
# ---------------------------------------------------------------------------

_DEGREE_KINDS = ("superlinear", "log-stretched", "poly-log")
_FITNESS_KINDS = ("mixed", "additive")


@dataclass(frozen=True)
class PhaseModel:
    """Parameter tuple of one analyzed family.

    ``ell_lower`` / ``ell_upper`` are the iterated-log limits of the
    slowly-varying factor of the additive weight function (both 0 for a
    constant factor, the default).
    """

    fitness_kind: str
    degree_kind: str
    weight_tail: object
    p: float | None = None
    beta: float | None = None
    sigma: float | None = None
    gamma: float = 1.0
    ell_lower: float = 0.0
    ell_upper: float = 0.0

    def __post_init__(self):
        if self.fitness_kind not in _FITNESS_KINDS:
            raise InvalidParametersError(f"fitness kind {self.fitness_kind!r}")
        if self.degree_kind not in _DEGREE_KINDS:
            raise InvalidParametersError(f"degree kind {self.degree_kind!r}")
        if self.degree_kind == "superlinear":
            if self.p is None or not self.p > 1:
                raise InvalidParametersError("super-linear family needs p > 1")
        if self.degree_kind == "log-stretched":
            if self.beta is None or not 0 < self.beta < 1:
                raise InvalidParametersError("log-stretched family needs beta in (0,1)")
        if self.degree_kind == "poly-log":
            if self.sigma is None or not self.sigma > 1:
                raise InvalidParametersError("poly-log family needs sigma > 1")
        if self.gamma < 0:
            raise InvalidParametersError("gamma must be >= 0")
        for a in (self.ell_lower, self.ell_upper):
            if not 0.0 <= a < 1.0:
                raise InvalidParametersError("iterated-log limits must lie in [0,1)")


@dataclass(frozen=True)
class PhaseVerdict:
    verdict: str
    inequality: str
    margin: float

    def __str__(self):
        return f"{self.verdict} ({self.inequality})"


def _decided(x: float, boundary: float, lhs: str, rhs_text: str | None = None):
    rhs = rhs_text if rhs_text is not None else f"{boundary:g}"
    if x > boundary:
        return PhaseVerdict(STAR, f"{lhs}={x:.3f} > {rhs}", x - boundary)
    if x < boundary:
        return PhaseVerdict(PATH, f"{lhs}={x:.3f} < {rhs}", x - boundary)
    return PhaseVerdict(UNKNOWN, f"{lhs}={x:.3f} = {rhs} (boundary)", 0.0)


def classify(model: PhaseModel) -> PhaseVerdict:
    """Phase verdict for one parameter point; Unknown on boundaries and gaps."""
    tail = model.weight_tail
    fk, dk = model.fitness_kind, model.degree_kind

    if dk == "superlinear":
        if isinstance(tail, PowerTail):
            if fk == "mixed":
                thr = max(model.gamma - (model.gamma - 1.0) / model.p, 1.0)
                x = (model.p - 1.0) * (tail.alpha - 1.0)
                return _decided(x, thr, "(p-1)(alpha-1)",
                                None if thr != 1.0 else "1")
            x = model.p * (tail.alpha - 1.0)
            return _decided(x, 1.0, "p(alpha-1)", "1")
        if tail.all_moments:
            # upper power-law bound holds for every alpha; Star in the limit
            return PhaseVerdict(STAR, "all-moments weights: power-law upper tail "
                                      "holds for every alpha", math.inf)
        return PhaseVerdict(UNKNOWN, "weight tail outside the table", 0.0)

    if dk == "log-stretched":
        if fk == "mixed":
            if isinstance(tail, LogStretchedExpTail):
                x = model.beta * tail.nu
                return _decided(x, 1.0, "beta*nu", "1")
            if tail.all_moments:
                return PhaseVerdict(STAR, "all-moments weights: log-stretched upper "
                                          "tail holds for every nu", math.inf)
            return PhaseVerdict(UNKNOWN, "weight tail outside the table", 0.0)
        # additive log-stretched: power-law-plus weights
        if isinstance(tail, PowerLawPlusTail):
            if tail.tau is not None:
                lhs = max(tail.tau, model.beta)
                rhs = max(1.0 - model.beta, model.ell_lower)
                if lhs > rhs:
                    return PhaseVerdict(
                        STAR, f"max(tau,beta)={lhs:.3f} > max(1-beta,a_lower)={rhs:.3f}",
                        lhs - rhs)
                return PhaseVerdict(UNKNOWN,
                                    f"max(tau,beta)={lhs:.3f} <= max(1-beta,a_lower)={rhs:.3f}",
                                    0.0)
            tp = tail.tau_prime
            c1 = tp > max(model.beta, 1.0 - model.beta)
            c2 = max(tp, model.beta) > model.ell_upper
            if c1 and c2:
                return PhaseVerdict(
                    PATH, f"tau'={tp:.3f} > max(beta,1-beta)={max(model.beta, 1 - model.beta):.3f}"
                          f" and max(tau',beta) > a_upper={model.ell_upper:.3f}",
                    -(tp - max(model.beta, 1.0 - model.beta)))
            return PhaseVerdict(UNKNOWN, "path conditions not met", 0.0)
        if tail.all_moments:
            # lighter than every power-law-plus upper tail; Star as tau -> 1
            rhs = max(1.0 - model.beta, model.ell_lower)
            if rhs < 1.0:
                return PhaseVerdict(STAR, "all-moments weights: tau -> 1 upper tail",
                                    math.inf)
            return PhaseVerdict(UNKNOWN, "degenerate iterated-log limit", 0.0)
        return PhaseVerdict(UNKNOWN, "weight tail outside the table", 0.0)

    # poly-log degree
    if fk == "mixed":
        if isinstance(tail, StretchedExpTail):
            x = (model.sigma - 1.0) * tail.kappa
            if x > 1.0 + tail.kappa:
                return PhaseVerdict(STAR,
                                    f"(sigma-1)kappa={x:.3f} > 1+kappa={1 + tail.kappa:.3f}",
                                    x - (1.0 + tail.kappa))
            if x < 1.0:
                return PhaseVerdict(PATH, f"(sigma-1)kappa={x:.3f} < 1", x - 1.0)
            return PhaseVerdict(UNKNOWN,
                                f"(sigma-1)kappa={x:.3f} in [1, 1+kappa] (gap)", 0.0)
        if tail.all_moments:
            return _star_gap_polylog(model)
        return PhaseVerdict(UNKNOWN, "weight tail outside the table", 0.0)
    # additive poly-log
    if isinstance(tail, LogStretchedExpTail):
        x = (model.sigma - 1.0) * (1.0 - 1.0 / tail.nu)
        if x > 1.0:
            return PhaseVerdict(STAR, f"(sigma-1)(1-1/nu)={x:.3f} > 1", x - 1.0)
        return PhaseVerdict(UNKNOWN, f"(sigma-1)(1-1/nu)={x:.3f} <= 1 (gap)", 0.0)
    if isinstance(tail, PowerTail):
        if tail.alpha < 2.0:
            return PhaseVerdict(PATH, f"alpha={tail.alpha:.3f} < 2", tail.alpha - 2.0)
        return PhaseVerdict(UNKNOWN, f"alpha={tail.alpha:.3f} >= 2 (gap)", 0.0)
    if tail.all_moments:
        return _star_gap_polylog(model)
    return PhaseVerdict(UNKNOWN, "weight tail outside the table", 0.0)


def _star_gap_polylog(model: PhaseModel) -> PhaseVerdict:
    # all-moments weights: exponent -> infinity turns the Star condition
    # into sigma > 2; at sigma <= 2 the tables leave a genuine gap
    if model.sigma > 2.0:
        return PhaseVerdict(STAR, f"sigma={model.sigma:.3f} > 2 (all-moments limit)",
                            model.sigma - 2.0)
    return PhaseVerdict(UNKNOWN, f"sigma={model.sigma:.3f} <= 2 (gap)", 0.0)


# ---------------------------------------------------------------------------
# Grid scans
# ---------------------------------------------------------------------------

_AXIS_FIELDS = {"p", "beta", "sigma", "gamma"}
_TAIL_AXES = {"alpha": PowerTail, "nu": LogStretchedExpTail, "kappa": StretchedExpTail}


def _with_param(model: PhaseModel, name: str, value: float) -> PhaseModel:
    if name in _AXIS_FIELDS:
        return replace(model, **{name: float(value)})
    if name in _TAIL_AXES:
        return replace(model, weight_tail=_TAIL_AXES[name](float(value)))
    raise InvalidParametersError(f"unknown scan axis {name!r}")


@dataclass
class GridCell:
    x: float
    y: float
    verdict: PhaseVerdict
    tree_verdicts: list[str] = field(default_factory=list)


def grid_scan(template: PhaseModel, axis1, axis2, trees=None):
    """Classify every cell of a 2-axis parameter grid (row-major order).

    ``axis`` = (name, min, max, steps).  When the cell is Star and pattern
    trees are supplied, each tree's sub-tree verdict is attached.
    """
    from .subtrees import subtree_phase

    name1, lo1, hi1, n1 = axis1
    name2, lo2, hi2, n2 = axis2
    xs = np.linspace(lo1, hi1, int(n1))
    ys = np.linspace(lo2, hi2, int(n2))
    cells = []
    for x in xs:
        for y in ys:
            model = _with_param(_with_param(template, name1, x), name2, y)
            verdict = classify(model)
            tv = []
            if trees:
                for t in trees:
                    if verdict.verdict == STAR:
                        tv.append(subtree_phase(t, model))
                    else:
                        tv.append("-")
            cells.append(GridCell(float(x), float(y), verdict, tv))
    return cells


def grid_csv(cells, axis1_name, axis2_name, tree_names, path):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [axis1_name, axis2_name, "verdict", "margin"]
        for name in tree_names:
            header += [f"{name}_verdict"]
        writer.writerow(header)
        for c in cells:
            row = [f"{c.x:.6g}", f"{c.y:.6g}", c.verdict.verdict, f"{c.verdict.margin:.6g}"]
            row += c.tree_verdicts
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Minimal SVG rendering (CSV is the canonical output)
# ---------------------------------------------------------------------------

_FILL = {STAR: "#f2d16b", PATH: "#6b93d6", UNKNOWN: "#cccccc"}


def _boundary_curves(template: PhaseModel, axis1, axis2, trees):
    """Known phase boundaries rendered as polylines, axis1 on x.

    Covers the super-linear (p, alpha) diagrams: the star/path curve(s),
    the horizontal lines p = 1 + 1/k for star patterns of size k+1, and
    the curves (p-1) l min(alpha-1, m) = 1 for m-ary patterns.
    """
    name1, lo1, hi1, _ = axis1
    name2, lo2, hi2, _ = axis2
    curves = []
    axes = {name1, name2}
    if template.degree_kind == "superlinear" and axes == {"p", "alpha"}:
        def sample(fn, label):
            pts = []
            for a in np.linspace(lo1 if name1 == "alpha" else lo2,
                                 hi1 if name1 == "alpha" else hi2, 200):
                p = fn(a)
                if p is None:
                    continue
                x, y = (a, p) if name1 == "alpha" else (p, a)
                if lo1 <= x <= hi1 and lo2 <= y <= hi2:
                    pts.append((x, y))
            if len(pts) > 1:
                curves.append((label, pts))

        sample(lambda a: 1.0 + 1.0 / (a - 1.0) if a > 1 else None, "(p-1)(alpha-1)=1")
        if template.fitness_kind == "additive":
            sample(lambda a: 1.0 / (a - 1.0) if a > 1 else None, "p(alpha-1)=1")
        for t in trees or []:
            degs = sorted(t.outdeg_map().values(), reverse=True)
            internal = [d for d in degs if d > 0]
            if len(internal) == 1:  # star of size k+1
                k = internal[0]
                sample(lambda a, k=k: 1.0 + 1.0 / k, f"p=1+1/{k}")
            elif internal and all(d == internal[0] for d in internal):
                m, l = internal[0], len(internal)
                sample(lambda a, m=m, l=l: 1.0 + 1.0 / (l * min(a - 1.0, m)) if a > 1 else None,
                       f"(p-1)*{l}*min(alpha-1,{m})=1")
    elif template.degree_kind == "log-stretched" and axes == {"beta", "nu"}:
        pts = []
        for b in np.linspace(max(lo1 if name1 == "beta" else lo2, 1e-3),
                             hi1 if name1 == "beta" else hi2, 200):
            nu = 1.0 / b
            x, y = (b, nu) if name1 == "beta" else (nu, b)
            if lo1 <= x <= hi1 and lo2 <= y <= hi2:
                pts.append((x, y))
        if len(pts) > 1:
            curves.append(("beta*nu=1", pts))
    return curves


def grid_svg(cells, template: PhaseModel, axis1, axis2, trees, path,
             width: int = 720, height: int = 540):
    name1, lo1, hi1, n1 = axis1
    name2, lo2, hi2, n2 = axis2
    mx, my = 60, 40
    pw, ph = width - 2 * mx, height - 2 * my

    def sx(x):
        return mx + (x - lo1) / (hi1 - lo1) * pw

    def sy(y):
        return height - my - (y - lo2) / (hi2 - lo2) * ph

    cw = pw / max(int(n1) - 1, 1)
    ch = ph / max(int(n2) - 1, 1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for c in cells:
        fill = _FILL.get(c.verdict.verdict, "#ffffff")
        parts.append(f'<rect x="{sx(c.x) - cw / 2:.1f}" y="{sy(c.y) - ch / 2:.1f}" '
                     f'width="{cw:.1f}" height="{ch:.1f}" fill="{fill}"/>')
    for label, pts in _boundary_curves(template, axis1, axis2, trees):
        d = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in pts)
        parts.append(f'<polyline points="{d}" fill="none" stroke="black" '
                     f'stroke-width="1.2"><title>{label}</title></polyline>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" '
                 f'font-size="13">{name1}</text>')
    parts.append(f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="13" '
                 f'transform="rotate(-90 14 {height / 2:.0f})">{name2}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
