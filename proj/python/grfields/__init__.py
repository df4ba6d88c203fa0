"""Gaussian stationary random fields with decoupled covariances.

Thin wrapper over the compiled extension. Set GRF_MODULE_DIR to load the
extension from a build tree instead of an installed package.
"""

import os
import sys

_module_dir = os.environ.get("GRF_MODULE_DIR")
if _module_dir and _module_dir not in sys.path:
    sys.path.insert(0, _module_dir)

try:
    from _grfields import (  # noqa: F401
        MENonConvergence,
        MESolveReport,
        RationalFilter1D,
        RefinementState,
        build_filter,
        covariance_profile,
        generate,
        refine,
        sample_covariance,
        target_profile,
    )
except ImportError:
    from ._grfields import (  # noqa: F401
        MENonConvergence,
        MESolveReport,
        RationalFilter1D,
        RefinementState,
        build_filter,
        covariance_profile,
        generate,
        refine,
        sample_covariance,
        target_profile,
    )

__all__ = [
    "MENonConvergence",
    "MESolveReport",
    "RationalFilter1D",
    "RefinementState",
    "build_filter",
    "covariance_profile",
    "generate",
    "refine",
    "sample_covariance",
    "target_profile",
]
