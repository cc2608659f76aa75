"""Numeric substrate: tensors, differentiable primitives, PRNG and gradient checks."""

from . import ops
from .gradcheck import analytic_gradient, check_parameters, finite_diff_check, relative_error
from .prng import Prng
from .tensor import DEFAULT_DTYPE, Tensor, as_tensor, resolve_dtype

__all__ = [
    "DEFAULT_DTYPE",
    "Prng",
    "Tensor",
    "analytic_gradient",
    "as_tensor",
    "check_parameters",
    "finite_diff_check",
    "ops",
    "relative_error",
    "resolve_dtype",
]
