"""Sample correlation spectra of high-dimensional factor models.

Simulation of K-factor models, sample covariance/correlation spectra,
component-retention estimators (broken-stick, ACT, Bai-Ng) and Monte Carlo
checks of limiting eigenvalue locations.
"""

__version__ = "0.1.0"

from .linalg import (
    Spectrum,
    SpectrumKind,
    check_additive_perturbation,
    check_mult_perturbation,
    check_weyl,
    singular_values,
    spectral_norm,
    sym_eigvals,
)
from .models import (
    Distribution,
    FactorModelSpec,
    build_acfm,
    build_brokenstick_loading,
    build_clfm,
    build_enp,
    build_noise,
    population_corr,
    population_cov,
    sample_dataset,
)
from .sample import corr_from_cov, cov_data, cov_theoretical, diag_ratio_deviation
from .mp import ESD, MPParams, esd_from_spectrum, ks_distance, mp_cdf, mp_density, mp_edges
from .estimators import (
    EstimatorReport,
    act_estimate,
    bai_ng,
    broken_stick_thresholds,
    bs_rule,
    estimate_all,
    holst_expected_lengths,
    varah_gap_diagnostic,
)
from .hp import fisher_z, hp_filter, rolling_equicorr, second_difference
