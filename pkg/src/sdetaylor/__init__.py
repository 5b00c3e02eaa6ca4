"""Strong Taylor schemes for Ito SDEs built on unified stochastic expansions,
with exact Fourier-Legendre coefficient machinery, exact mean-square error
calculus for the truncated iterated-integral approximations, and a Monte
Carlo verification harness.
"""
from .backend import BACKEND_NAME, available_backends
from .coeffs import (
    CoefficientTensor,
    WeightVector,
    coefficient_tensor,
    export_cache,
    import_cache,
    scaled_coefficient,
    unit_coefficient,
    weight_vector,
)
from .exactpoly import (
    BigRational,
    RationalPoly,
    antiderivative,
    definite_integral,
    legendre,
)
from .mse import (
    ErrorQuery,
    exact_mse_ito,
    exact_mse_strat_distinct,
    kernel_norm,
    minimal_p,
    mse_bound,
    strat_mse_estimate,
)
from .ranks import TermKey, enumerate_Aq, enumerate_Dq, enumerate_Ur, n_E, n_M, rank_A, rank_D
from .schemes import (
    SchemeConfig,
    SdeProblem,
    builtin_problems,
    gbm_problem,
    integrate_path,
    linear2d_problem,
    ou_problem,
)
from .stochint import (
    GaussianBasis,
    IntegralLabel,
    closed_form,
    ito_strat_convert,
    ito_value,
    label,
    sample_basis,
    strat_expansion_is_proven,
    strat_value,
)

__version__ = "0.1.0"
