"""Fast diffusion with a source: exponents, self-map, profiles, shooting, regions."""

__version__ = "0.1.0"

from .errors import FDSSError, NumericalError, ValidationError
from .params import ParameterSet, critical_exponents, similarity_exponents, validate_params
from .profiles import IntegrationOptions, Profile, ProfileODE, integrate_profile
from .selfmap import ConstantsMode, SelfMap, build_selfmap, map_profile
from .shooting import find_fast_decay
from .regions import classify_region, region_grid
from .estimators import CriticalExponentsTransformer, RegionClassifier, SelfMapTransformer

__all__ = [
    "FDSSError", "NumericalError", "ValidationError",
    "ParameterSet", "critical_exponents", "similarity_exponents", "validate_params",
    "IntegrationOptions", "Profile", "ProfileODE", "integrate_profile",
    "ConstantsMode", "SelfMap", "build_selfmap", "map_profile",
    "find_fast_decay", "classify_region", "region_grid",
    "CriticalExponentsTransformer", "RegionClassifier", "SelfMapTransformer",
]
