"""Excess-mass estimation with a Fourier-series functional estimator and a plug-in baseline."""

from .bench import BenchmarkReport, ExperimentConfig, error_metrics, run_experiment
from .curves import ExcessMassCurve
from .densities import BUILTINS, DensitySpec, Sample, get_density, oracle_curve, pdf, sample
from .excess import (
    OverflowGuardError,
    estimate_functional,
    estimate_kernel_corrected,
    estimate_kernel_mean,
    estimate_plugin,
    estimate_wavelet,
)
from .fourier import FourierCoefficients, approx_phi, coefficients, tail_bound
from .kde import KernelModel, bandwidth_auto, bootstrap_moments, tuned_parameters
from .quadrature import QuadratureGrid, SupportBox

__all__ = [
    "BUILTINS", "BenchmarkReport", "DensitySpec", "ExcessMassCurve", "ExperimentConfig",
    "FourierCoefficients", "KernelModel", "OverflowGuardError", "QuadratureGrid", "Sample",
    "SupportBox", "approx_phi", "bandwidth_auto", "bootstrap_moments", "coefficients",
    "error_metrics", "estimate_functional", "estimate_kernel_corrected", "estimate_kernel_mean",
    "estimate_plugin", "estimate_wavelet", "get_density", "oracle_curve", "pdf",
    "run_experiment", "sample", "tail_bound", "tuned_parameters",
]
