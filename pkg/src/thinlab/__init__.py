"""Thinning of discrete distributions, Poisson-Charlier moments and divergence lower bounds."""

__version__ = "0.1.0"

from .charlier import (CharlierBasis, charlier_triple_moment, hermite_eval,
                       khokhlov_product_coeffs, square_center_coeff)
from .dist import Distribution, FamilySpec, make_distribution, point_mass, validate
from .divergence import kl, mix, tv
from .errors import ThinlabError
from .expfam import ExpFamily, po_beta, project_one, project_two
from .moments import detect_kappa, factorial_moment, thinned_sum_moments_closed
from .thinning import convolve, convolve_pow, thin, thin_law

__all__ = [
    "CharlierBasis", "Distribution", "ExpFamily", "FamilySpec", "ThinlabError",
    "charlier_triple_moment", "convolve", "convolve_pow", "detect_kappa", "factorial_moment",
    "hermite_eval", "khokhlov_product_coeffs", "kl", "make_distribution", "mix",
    "po_beta", "point_mass", "project_one", "project_two", "square_center_coeff",
    "thin", "thin_law", "thinned_sum_moments_closed", "tv", "validate",
]
