"""Lattice point counting in arithmetic groups, with volumes, rates, and checks."""

from .errors import BudgetError, LatcountError, NumericalError, SpecError
from .gauges import (
    BinaryForm,
    Gauge,
    gauge_eval,
    height_gauge,
    hyperbolic_gauge,
    parse_gauge,
    rep_form_gauge,
    rnorm_gauge,
)
from .groups import GroupElement, ResidueClass, resolve_group
from .haar import (
    AdmissibilityReport,
    GrowthFit,
    VolumeProfile,
    admissibility_estimate,
    balanced_volume_ratio,
    balanced_volume_verdict,
    balanced_weight_criterion,
    ball_volume_profile,
    convolve_profiles,
    covolume_psl2z,
    fit_growth,
    frobenius_ball_volume,
    hyperbolic_ball_area,
    tensor_factor_profiles,
    tensor_weights,
    volume_of_ball,
)
from .lattice import (
    CosetHistogram,
    CountSeries,
    coset_histogram,
    count_series,
    enumerate_ball,
    orbit_forms_count,
    sl_residue_order,
)
from .spectral import (
    SpectralParams,
    counting_error_exponent,
    radial_operator_norm_bound,
    spectral_decay_theta,
    spectral_summary,
    xi_eval,
)
from .torus import (
    CosetObservable,
    DeviationSeries,
    TorusCharacter,
    decay_fit,
    deviation_series,
    lattice_average,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "LatcountError",
    "SpecError",
    "BudgetError",
    "NumericalError",
    "Gauge",
    "BinaryForm",
    "parse_gauge",
    "rnorm_gauge",
    "hyperbolic_gauge",
    "rep_form_gauge",
    "height_gauge",
    "gauge_eval",
    "GroupElement",
    "ResidueClass",
    "resolve_group",
    "enumerate_ball",
    "count_series",
    "CountSeries",
    "coset_histogram",
    "CosetHistogram",
    "sl_residue_order",
    "orbit_forms_count",
    "volume_of_ball",
    "covolume_psl2z",
    "hyperbolic_ball_area",
    "frobenius_ball_volume",
    "VolumeProfile",
    "ball_volume_profile",
    "convolve_profiles",
    "tensor_factor_profiles",
    "tensor_weights",
    "balanced_volume_ratio",
    "balanced_volume_verdict",
    "balanced_weight_criterion",
    "fit_growth",
    "GrowthFit",
    "admissibility_estimate",
    "AdmissibilityReport",
    "SpectralParams",
    "xi_eval",
    "spectral_decay_theta",
    "counting_error_exponent",
    "radial_operator_norm_bound",
    "spectral_summary",
    "TorusCharacter",
    "CosetObservable",
    "DeviationSeries",
    "lattice_average",
    "deviation_series",
    "decay_fit",
]
