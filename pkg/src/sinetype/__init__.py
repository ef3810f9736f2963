"""Zeros, reconstruction and stability experiments for sine-type perturbations.

Set ``SINETYPE_DISABLE_NUMBA=1`` before import to force the numpy kernels.
"""

from ._kernels import BACKEND
from .core_model import (
    FourierTail,
    LeadingData,
    MainPart,
    SineTypeBase,
    ThetaFunction,
    ZeroSequence,
    eval_base,
    eval_tail,
    eval_theta,
    leading_data,
    mu,
    verify_sine_type,
)
from .errors import *  # noqa: F401,F403
from .reconstruction import (
    FrameEstimate,
    MomentSystem,
    build_moment_system,
    complete_zeros,
    frame_bounds_estimate,
    invert_to_tail,
    product_eval_hadamard,
    product_eval_ratio,
    recover_tail,
    verify_eq13,
)
from .stability_lab import (
    BallSpec,
    StabilityRecord,
    empirical_lipschitz,
    lemma1_check,
    line_shift_check,
    parseval_l2,
    sample_ball,
    stability_ratio,
)
from .sturm_liouville import (
    Spectrum,
    spectrum_to_zeros,
    theorem12_experiment,
    theta_from_u,
    theta_from_v,
    zeros_to_spectrum,
)
from .zero_finder import LocalizationReport, Rect, localize_zeros, refine_zero, residuals, winding_count

__version__ = "0.1.0"
