"""Numerical laboratory for local limit bounds of normalized sums.

Distribution catalog, FFT density engine, density/CF functionals, CF
separation and norm analysis, end-to-end bound checks, and a declarative
runner.
"""

from .bounds import (BoundReport, Experiment, chain_check, cf_product_error_check,
                     corollary12_check, subadditivity_check, theorem11_rhs, theorem12_rhs,
                     theorem71_rhs, verify_bound)
from .cf_analysis import (lp_norm_cf, separation_scan, symmetrize, tail_integral_cf,
                          truncate, truncation_relation_check)
from .distributions import (DistributionSpec, build, default_catalog, make_asymmetric_family,
                            make_gaussian, make_product, make_unbounded_marginal_example,
                            make_uniform_ball, make_uniform_interval)
from .errors import (LabError, ParameterError, UnsupportedDimensionError, UnsupportedOrderError, UnboundedDensityError, WindowError, InsufficientWindowError, DegenerateTruncationError, ModeMismatchError, PreconditionError, ConfigError)
from .functionals import (beta_p_sup, check_isotropic_bounds, functional_report, lyapunov_L,
                          max_density)
from .grid import (GridSpec, density_of_normalized_sum, invert_to_density, product_cf,
                   sup_distance)
from .runner import parse_config, run

__version__ = "0.1.0"
