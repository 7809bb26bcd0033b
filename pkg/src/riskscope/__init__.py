"""riskscope: exact risk-measure analytics on structured loss distributions.

Computes Value at Risk, Expected Shortfall, and Maximum Loss in closed form
on piecewise-linear densities, tails, outcome tables, and samples; checks
the risk-measure axioms; synthesizes families of distinct tails sharing a
prescribed measure vector; and searches for minimal measure sets that tell
a family apart.
"""

from .ambiguity import (
    AmbiguityFamily,
    BumpSpec,
    CannotReachKError,
    ConstraintSet,
    DistinguishResult,
    FamilyVerification,
    InfeasibleError,
    SynthesisOptions,
    TemplateFamily,
    distinguish,
    solve_template,
    synthesize_family,
    verify_family,
)
from .coherence import (
    AxiomCheckResult,
    JointDiscrete,
    check_axiom,
    check_subadditivity,
    loan_counterexample,
    random_joint_corpus,
)
from .distributions import (
    BodyRule,
    DiscreteDistribution,
    EmpiricalSample,
    InvalidDistributionError,
    Orientation,
    PiecewiseLinearDensity,
    TailSpec,
    cdf,
    convolve,
    density_at,
    interval_first_moment,
    interval_mass,
    l1_distance,
    lift_tail,
    require_valid,
    sample,
    scale,
    shift,
    to_loss,
    validate,
)
from .jsonio import dist_dumps, dist_loads, dist_from_json_dict, dist_to_json_dict, dumps
from .measures import (
    McEstimate,
    MeasureSpec,
    MeasureVector,
    ReportEntry,
    RiskReport,
    UndefinedMeasureError,
    build_report,
    es,
    evaluate,
    evaluate_vector,
    max_loss,
    mc_estimate,
    parse_measure_list,
    parse_measure_spec,
    var,
)
from .scenarios import FIXTURE_IDS, ScenarioFixture, evaluate_fixture, load, run_all

__version__ = "0.1.0"
