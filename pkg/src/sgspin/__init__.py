"""Stern-Gerlach electron models: rigid sphere, point particle, Pauli spinor
and classical Dirac field."""
from .units import PhysParams, derive_scales, validate_nonrelativistic
from .fields import Grid3, sg_field, affine_field, zero_field

__version__ = "0.1.0"

__all__ = ["PhysParams", "derive_scales", "validate_nonrelativistic",
           "Grid3", "sg_field", "affine_field", "zero_field", "__version__"]
