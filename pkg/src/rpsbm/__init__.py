"""Spectral density estimation for corpora of large graphs.

Fits a generative law over simple graphs from an observed corpus by aligning
the first two moments of the top adjacency eigenvalues (the spectral proxies
of the sample Frechet mean and total Frechet variance) with those of a
random-parameter stochastic block model, parametrically or as a graph-space
kernel mixture, and samples new graphs from the fitted law.
"""

__version__ = "0.1.0"

from .spectral import (
    Graph,
    SpectralSignature,
    density,
    dist_truncated,
    full_spectrum,
    load_edgelist,
    save_edgelist,
    spectrum,
)
from .models import (
    BetaProductLaw,
    DiracLaw,
    RpsbmModel,
    SbmParams,
    TruncGaussianProductLaw,
    UniformProductLaw,
    canonical_kernel_value,
    load_model,
    sample_corpus,
    sample_rpsbm,
    sample_sbm,
    save_model,
)
from .theory import (
    EigLawMoments,
    TheoryMatrices,
    build_theory_matrices,
    eigenfunction_values,
    expected_eigenvalue,
    first_order_check,
    limiting_covariance,
    predict_eig_law_moments,
)
from .moments import (
    RegimeReport,
    SampleMoments,
    classify_regimes,
    compute_moments,
    frechet_total_variance,
)
from .fitting import (
    Bandwidth,
    FitResult,
    GraphMixture,
    InfeasibleFitError,
    critical_sample_size,
    fit_beta_product,
    fit_nonparametric,
    fit_parametric,
    run_er_mixture_pipeline,
    sample_mixture,
    silverman_bandwidth,
)
from .geometry import (
    GeometryEstimate,
    cluster_by_community_count,
    detect_geometry,
    eigenvector_profile,
    extremal_count,
)
from .contacts import ContactStream, load_contacts, window_contacts
