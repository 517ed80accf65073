"""Stochastic calculus via regularization for convolution-type processes on a
truncated spectral Hilbert space: path simulation, eps-estimators of forward
integrals and covariations, and pathwise checks of Ito and Fukushima-type
decompositions."""
from .convolution import (
    ConvolutionSpec,
    MildPath,
    compute_remainder_Y,
    ondrejat_check,
    simulate_fractional_extension,
    simulate_mild,
)
from .noise import QSpectrum, SamplePath, TimeGrid, sample_brownian, sample_fbm, sample_q_wiener
from .regular_calculus import (
    EpsLadder,
    RefinementError,
    a_eps_statistic,
    chi_cov_eps,
    covariation_eps,
    forward_integral_eps,
    ito_sum,
    scalar_qv_eps,
    tensor_cov_eps,
    young_integral,
)
from .semigroup import DiagonalGenerator
from .spectral_space import SpectralVector, TensorElement, cross_tensor, projective_norm, trace_pair

__version__ = "0.1.0"
