"""Exact computation of compound Poisson approximations of convolution
powers, polyhedral distances between discrete laws, and rate experiments."""

from .dist import (DiscreteDistribution, class_check, compound_poisson, convolve,
                   family, power, total_variation)
from .errors import InvalidInputError, ParseError, ResourceLimitError

__version__ = "0.1.0"

__all__ = ["DiscreteDistribution", "class_check", "compound_poisson", "convolve", "family",
           "power", "total_variation", "InvalidInputError", "ParseError",
           "ResourceLimitError"]
