"""Sharp conditional tail estimates for randomly weighted i.i.d. sums.

Core pipeline: fix an environment (one realized weight sequence), solve the
empirical saddle equation, and assemble the prefactor-exact tail estimate

    P(S_n >= a n | W)  ~=  exp(-n I_n(a)) / (theta_n sigma_n sqrt(2 pi n)).

Oracles (exponentially tilted importance sampling, naive Monte Carlo, exact
lattice enumeration) validate the estimate, and the fclt module measures how
the random rate function fluctuates around its deterministic limit across
environment replicas.
"""

from .cgf import (
    BinomialModel,
    CumulantModel,
    CustomModel,
    GaussianModel,
    eval_cgf,
    mgf_ratio_modulus,
    tilted_sample,
)
from .errors import (
    CAPACITY_ERRORS,
    NUMERIC_ERRORS,
    DegenerateEnvironment,
    EmptyInterval,
    InsufficientReplicas,
    MismatchedRuns,
    NonConvergence,
    NotEnumerable,
    OutOfRange,
    PrefactorDegenerate,
    QuadratureFailure,
    SharptailError,
    TooLarge,
)
from .estimate import (
    ConditionReport,
    TailEstimate,
    check_conditions,
    sldp_estimate,
)
from .fclt import (
    FcltReport,
    FluctuationSample,
    fclt_report,
    sample_fluctuations,
)
from .mc import (
    McConfig,
    Segment,
    exact_enum,
    exact_enum_segments,
    naive_mc,
    naive_mc_segments,
    tilted_mc,
    tilted_mc_segments,
)
from .rng import Stream, derive_seed, derive_stream
from .saddle import (
    SaddleSolution,
    empirical_psi,
    solve_deterministic,
    solve_psi_root,
    solve_saddle,
)
from .scenarios import (
    PortfolioBlock,
    PortfolioScenario,
    TcellScenario,
    portfolio_loss_prob,
    portfolio_segments,
    tcell_activation_prob,
    tcell_environment,
)
from .weights import (
    ConstantWeight,
    CustomWeight,
    DeterministicCurves,
    Environment,
    TcellWeight,
    TwoPointWeight,
    UniformWeight,
    WeightModel,
    build_curves,
    draw_environment,
    expect_weighted,
)

__version__ = "0.1.0"
