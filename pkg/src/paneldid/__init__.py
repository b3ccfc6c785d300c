"""Panel causal inference with synthetic difference-in-differences.

A toolkit for balanced unit-by-period panels with block treatment adoption:
simplex-weight programs over control units and pre-periods, the weighted
difference-in-differences regression they feed, companion estimators
(entropy balancing, regularized synthetic control), unit block-bootstrap
inference, placebo backdating, selection regressions with robust standard
errors, and a counterfactual election-margin simulator.
"""

from .errors import (
    BinError,
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateResample,
    DegenerateWeights,
    DesignError,
    DuplicateCell,
    EmptyArmError,
    InfeasibleBalance,
    NonBlockTreatment,
    PanelDidError,
    ParseError,
    RankDeficient,
    UnbalancedPanel,
)
from .estimators import (
    CounterfactualTrend,
    EstimateResult,
    EstimatorSpec,
    closed_form_tau,
    counterfactual_trend,
    estimate,
    result_to_dict,
    variant_table,
    weighted_twfe,
)
from .inference import (
    BootstrapResult,
    block_bootstrap,
    placebo_backdate,
    replicate_stream,
    truncate_for_placebo,
)
from .panel import (
    GroupTrends,
    PanelDataset,
    TreatmentDesign,
    arm_indices,
    dump_panel,
    group_trends,
    load_panel,
    make_design,
    subset,
    tercile_assignments,
    tercile_split,
    treated_mask,
)
from .regression import RegressionResult, binned_scatter, fe_ols
from .simulation import (
    CountyVotes,
    SimulationResult,
    StateMargins,
    TreatmentModel,
    fit_treatment_model,
    impute_treatment,
    load_county_votes,
    remove_effects,
    simulate_margins,
)
from .weights import (
    RegularizedSCSolution,
    SimplexWeights,
    SolverOptions,
    TimeWeightSolution,
    UnitWeightSolution,
    ZetaParams,
    compute_zeta,
    entropy_balance,
    project_simplex,
    solve_regularized_sc,
    solve_time_weights,
    solve_unit_weights,
    solve_unit_weights_no_intercept,
)

__version__ = "0.1.0"
