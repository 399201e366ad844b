"""Deterministic partition-function estimation for mean-field mixed p-spin
glasses, via Taylor truncation along zero-avoiding interpolating curves,
with exact small-n oracles, Curie-Weiss threshold machinery, and a
winding-number zero locator."""

__version__ = "0.1.0"

from spininterp.model import (  # noqa: F401
    CapacityError,
    Configuration,
    DisorderTensor,
    Domain,
    MixtureSpec,
    build_disorder,
    empirical_covariance_check,
    hamiltonian,
    hamiltonian_by_order,
    pure_p_spec,
    sk_spec,
)
from spininterp.series import (  # noqa: F401
    ComplexSeries,
    WorkBudgetError,
    moments_combinatorial,
    series_compose,
    series_divide,
    series_evaluate,
    series_exp,
    series_log,
    series_multiply,
    sphere_monomial_expectation,
)
from spininterp.threshold import (  # noqa: F401
    EntropyProfile,
    PhiProfile,
    beta_2nd,
    beta_rs_sphere,
    curie_weiss_Z,
    entropy_profile,
    rs_form_bound,
    slice_log_measure,
    verify_cw_bound,
    zero_count_bound,
)
from spininterp.exact import (  # noqa: F401
    ZeroList,
    ZEvaluator,
    exact_moments_hypercube,
    exact_Z_and_derivative,
    exact_Z_hypercube,
    jensen_check,
    locate_zeros,
    second_moment_identity_check,
    sphere_Z_series,
    winding_on_circle,
)
from spininterp.curves import (  # noqa: F401
    CurveFamily,
    MobiusArc,
    barvinok_map_coeffs,
    build_curve_family,
    certify_tubes,
    mobius_arc,
    r_hat,
)
from spininterp.interpolate import (  # noqa: F401
    EstimateReport,
    estimate_multicurve,
    estimate_straightline,
    log_L_bound,
    select_N_kappa,
    truncation_depth,
)
