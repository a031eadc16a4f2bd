"""Isoperimetric and concentration profiles: transfers, exact 1D models and a brute-force oracle."""

from .errors import (GrowthConditionViolated, HypothesisViolation, InfeasibleMass,
                     LogConcavityRequired)
from .profile_core import (INF, ConcProfileSpec, IsoProfile, MonotoneFn, Tail, closed_form,
                           gamma_transform, gen_inverse)
from .transfer import (BoundReport, convex_bound, integrability_bound, iso_to_conc,
                       linear_iso_bound, semiconvex_bound, semiconvex_constants,
                       small_set_constant, solve_y_plus_log_y, verify_bound)
from .model1d import (CustomDensity, GaussianDensity, PExponentialDensity, conc_profile_1d,
                      conc_profile_fn, density_from_json, gaussian_ratio_check,
                      iso_profile_halfline)

__all__ = [
    "INF", "BoundReport", "ConcProfileSpec", "CustomDensity", "GaussianDensity",
    "GrowthConditionViolated", "HypothesisViolation", "InfeasibleMass", "IsoProfile",
    "LogConcavityRequired", "MonotoneFn", "PExponentialDensity", "Tail", "closed_form",
    "conc_profile_1d", "conc_profile_fn", "convex_bound", "density_from_json", "gamma_transform",
    "gaussian_ratio_check", "gen_inverse", "integrability_bound", "iso_profile_halfline",
    "iso_to_conc", "linear_iso_bound", "semiconvex_bound", "semiconvex_constants",
    "small_set_constant", "solve_y_plus_log_y", "verify_bound",
]
