"""Simulator and numerical analyzer for explosive recursive trees with fitness.

Grows trees whose attachment rates f(i, w) = g(w) s(i) + h(w) are
super-linear in the degree, embeds them in continuous time, evaluates the
summability criteria deciding between a unique infinite-degree node and a
unique infinite path, classifies parameter space in closed form, and
cross-checks the analytic phases against simulation statistics.
"""

from .errors import (
    CapExceededError,
    DegenerateFitnessError,
    ExpTreesError,
    InvalidParametersError,
    InvalidSubtreeError,
    NonSummableError,
    NotInStarPhaseError,
    ToleranceError,
    UnsupportedVariantError,
)
from .model import (
    Constant,
    FitnessSpec,
    LogStretchedDegree,
    LogStretchedExp,
    ParetoLike,
    PolyLogDegree,
    PowerLawDegree,
    PowerLawPlus,
    StretchedExp,
    TableDegree,
    TwoType,
    WeightFunctionPair,
    fitness,
    mu_asymptotic,
    mu_exact,
    sample_weight,
)
from .grower import Anchor, TreeState, census, grow_step, grow_to, hub_history
from .cmj import Beta, Exponential, Gamma, Rayleigh, explosion_estimate, simulate_births
from .series import (
    divergence_probe,
    infinite_product,
    laplace_product,
    path_series_term,
    star_series_term,
)
from .subtrees import SubtreeSpec, g1_g2, orderings, subtree_phase, tree_series_term, validate
from .phase import PhaseModel, PhaseVerdict, classify, grid_scan
from .counterexample import build_s_sequence, simulate_counterexample
from .rng import replica_generator

__version__ = "0.1.0"
