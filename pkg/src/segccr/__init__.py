"""Segmented correspondence curve regression."""

__version__ = "0.1.0"

from .empirical import (
    CategoryCounts,
    EmpiricalCurve,
    category_counts,
    category_index,
    curve_from_counts,
    empirical_curve,
    to_uniform_ranks,
)
from .estimation import (
    FitResult,
    ProfilePoint,
    default_tau_grid,
    fit_beta_given_tau,
    fit_homogeneous,
    fit_segmented,
    fitted_curve,
    homogeneous_fitted_curve,
)
from .estimators import HomogeneousCCR, SegmentedCCR, UniformRankTransformer
from .exceptions import (
    AllFitsFailed,
    DidNotConverge,
    DomainError,
    GridMismatch,
    InputError,
    LengthMismatch,
    MissingColumn,
    NonFinite,
    NonmonotoneModel,
    NumericalError,
    ParseError,
    SegCCRError,
    SingularInformation,
    TooFew,
    TooManyFailures,
    UnknownWorkflow,
)
from .inference import (
    BootstrapResult,
    QLRResult,
    WaldTest,
    bootstrap,
    qlr_null_pvalue,
    qlr_statistic,
    wald_tests,
)
from .likelihood import (
    DesignSet,
    basis_w,
    category_scores,
    homogeneous_log_likelihood,
    log_likelihood,
    model_log_psi,
    score_beta,
)
from .simulation import (
    Scenario,
    ScenarioSpec,
    generate,
    generate_scenario1,
    generate_scenario2,
    mise,
    sample_gumbel_copula,
)
from .types import (
    CutoffGrid,
    Orientation,
    ScorePairs,
    SeededRng,
    SegmentedParams,
    UniformRanks,
    validate_score_pairs,
)


def load_salmon() -> ScorePairs:
    """Skeena River sockeye spawners (y1) and recruits (y2), 1940-1967."""
    from importlib.resources import files

    from .io import read_scores

    return read_scores(files(__name__) / "data" / "salmon.tsv").workflows[0]
