"""Rate bounds for the three-receiver Gaussian multicast channel with
full-duplex receiver cooperation.

The package evaluates and optimizes, over a shared channel description
(:class:`~mcbounds.channel.ChannelConfig`):

* the no-cooperation baseline,
* the cutset upper bound,
* noisy network coding,
* and three interactive compress/decode-and-forward schemes (a two-receiver
  session, a partially interactive and a fully interactive three-receiver
  scheme),

all in bit/s/Hz, plus cooperation-SNR sweeps that serialize the optimized
curves to CSV and a Monte-Carlo oracle that cross-checks every closed-form
term.  See the README for the command-line interface.
"""

from .bounds import (
    BoundResult,
    CutSpec,
    TERM_LABELS_2RC,
    TERM_LABELS_3FC,
    TERM_LABELS_3PC,
    cutset_cut_value,
    evaluate_2rc,
    evaluate_3fc,
    evaluate_3pc,
    evaluate_cutset,
    evaluate_nnc,
    gain_3fc,
    gain_3pc,
    gain_kfc,
    no_coop_rate,
)
from .channel import ChannelConfig, capacity, db_to_linear, from_db, linear_to_db
from .errors import (
    ConfigurationError,
    FixtureError,
    InfeasibleParamsError,
    McBoundsError,
    ParseError,
)
from .fixtures import CurveReport, compare_csv, load_reference_curves, reference_curves_path
from .gaussian import (
    PARAM_NAMES,
    StrategyParams,
    SubStrategy,
    TermIngredients,
    build_sigma,
    identity_cap_ok,
    ingredients,
    r_loss,
    scale_to_identity_cap,
)
from .optimize import (
    OptimizerConfig,
    SearchSpace,
    optimize_2rc,
    optimize_3fc,
    optimize_3pc,
    optimize_cutset,
    optimize_nnc,
    seeded_starts,
)
from .oracle import (
    JOINT_VARS,
    McEstimate,
    TermReport,
    exact_conditional_mi,
    exact_term_value,
    joint_covariance,
    mc_mutual_info,
    validate_term,
    validate_terms,
)
from .sweep import BOUND_ORDER, SweepRow, SweepSpec, iter_sweep, run_sweep, write_csv

__version__ = "0.1.0"

__all__ = [
    "BOUND_ORDER",
    "BoundResult",
    "ChannelConfig",
    "ConfigurationError",
    "CurveReport",
    "CutSpec",
    "FixtureError",
    "InfeasibleParamsError",
    "JOINT_VARS",
    "McBoundsError",
    "McEstimate",
    "OptimizerConfig",
    "PARAM_NAMES",
    "ParseError",
    "SearchSpace",
    "StrategyParams",
    "SubStrategy",
    "SweepRow",
    "SweepSpec",
    "TERM_LABELS_2RC",
    "TERM_LABELS_3FC",
    "TERM_LABELS_3PC",
    "TermIngredients",
    "TermReport",
    "build_sigma",
    "capacity",
    "compare_csv",
    "cutset_cut_value",
    "db_to_linear",
    "evaluate_2rc",
    "evaluate_3fc",
    "evaluate_3pc",
    "evaluate_cutset",
    "evaluate_nnc",
    "exact_conditional_mi",
    "exact_term_value",
    "from_db",
    "gain_3fc",
    "gain_3pc",
    "gain_kfc",
    "identity_cap_ok",
    "ingredients",
    "iter_sweep",
    "joint_covariance",
    "linear_to_db",
    "load_reference_curves",
    "mc_mutual_info",
    "no_coop_rate",
    "optimize_2rc",
    "optimize_3fc",
    "optimize_3pc",
    "optimize_cutset",
    "optimize_nnc",
    "r_loss",
    "reference_curves_path",
    "run_sweep",
    "scale_to_identity_cap",
    "seeded_starts",
    "validate_term",
    "validate_terms",
    "write_csv",
]
