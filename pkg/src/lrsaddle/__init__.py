"""Saddlepoint tail and density approximations with higher-order corrections.

Typical use::

    from lrsaddle import gamma_sum_cgf, tail_lr, tail_exact

    model = gamma_sum_cgf(5.0)
    tail_lr(model, 10.0, M=2).total   # expansion
    tail_exact(model, 10.0)           # numerical inversion
"""

from .cgf import (
    CgfModel,
    DomainInterval,
    GammaSumCgf,
    GaussianCgf,
    HestonCgf,
    HestonParams,
    TiltedCgf,
    gamma_sum_cgf,
    gaussian_cgf,
    heston_alpha_bounds,
    heston_cgf,
    heston_domain_bounds,
    heston_theta_star,
    load_model_config,
    min_K2_scan,
    model_from_config,
    tilt_cgf,
)
from .daniels import DanielsResult, density_daniels
from .errors import (
    AccuracyWarning,
    CapabilityError,
    ConvergenceError,
    DegenerateThresholdError,
    DomainError,
    LRError,
    MomentExplosionError,
    ParameterError,
    RangeError,
    TruncationError,
    UnsupportedOrderError,
)
from .experiments import (
    GammaFamily,
    HestonFamily,
    OrderStudyRow,
    RegressionFit,
    ols_loglog,
    order_study,
    reproduce_table,
)
from .inversion import CallQuote, QuadratureConfig, density_exact, price_call, tail_exact
from .lr_terms import (
    GhDerivs,
    LrResult,
    ThetaDerivs,
    gh_derivs,
    normal_pdf,
    normal_sf,
    psi0_closed,
    psi1_closed,
    psi_m,
    tail_lr,
    theta_hat_derivs,
)
from .saddle import SaddleInfo, solve_saddlepoint

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
