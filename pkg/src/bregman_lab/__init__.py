"""Domain-aware Bregman proximal toolkit."""

from .numerics import (Box, ExtReal, GridFn, IndeterminateForm, ObjectiveFn, ProxResult, Status,
                       finite_diff_grad, grid_biconjugate, minimize_nd, minimize_scalar,
                       numeric_conjugate)
from .kernels import Kernel, make_kernel

__version__ = "0.1.0"

__all__ = ["Box", "ExtReal", "GridFn", "IndeterminateForm", "ObjectiveFn", "ProxResult", "Status",
           "finite_diff_grad", "grid_biconjugate", "minimize_nd", "minimize_scalar", "numeric_conjugate",
           "Kernel", "make_kernel"]
