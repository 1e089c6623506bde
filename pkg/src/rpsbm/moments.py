"""Corpus spectral moments and variance-regime diagnostics.

The arithmetic mean of the top-c eigenvalues stands in for the spectrum of
the sample Frechet mean graph (the two agree for large n), which makes the
sample total Frechet variance equal to trace of the eigenvalue covariance --
an exact identity under the proxy mean, tested as such.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import Graph, density, spectrum

SMALL = "small"
MEDIUM = "medium"
LARGE = "large"

#: "<<" threshold: index i is large-variance when 2*lambda_bar_i/(n s_i)
#: is below this fraction of Sigma_ii.
LARGE_REGIME_RATIO = 0.1


@dataclass(frozen=True)
class SampleMoments:
    """Spectral corpus statistics feeding every fit.

    ``spectra`` holds the full N x c eigenvalue table (row per graph); the
    beta-family fit needs its per-coordinate range.
    """

    mean_spectrum: np.ndarray
    cov: np.ndarray
    mean_density: float
    N: int
    n: int
    c: int
    spectra: np.ndarray | None = None
    degenerate: bool = False

    @property
    def min_spectrum(self) -> np.ndarray:
        if self.spectra is None:
            raise ValueError("per-graph spectra unavailable")
        return self.spectra.min(axis=0)

    @property
    def max_spectrum(self) -> np.ndarray:
        if self.spectra is None:
            raise ValueError("per-graph spectra unavailable")
        return self.spectra.max(axis=0)


@dataclass(frozen=True)
class RegimeReport:
    """Per-index variance-regime classification.

    diagnostic_i = Sigma_ii - 2 lambda_bar_i / (n s_i); negative means the
    corpus is less variable than a single SBM allows (no feasible J).
    """

    regimes: tuple[str, ...]
    diagnostic: np.ndarray
    ratio: np.ndarray

    def any_small(self) -> bool:
        return SMALL in self.regimes


def compute_moments(corpus: Sequence[Graph], c: int) -> SampleMoments:
    """Mean spectrum, unbiased covariance, and mean density of a corpus."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    sizes = {g.n for g in corpus}
    if len(sizes) != 1:
        raise ValueError(f"mixed graph sizes in corpus: {sorted(sizes)}")
    n = corpus[0].n
    if c > n:
        raise ValueError("truncation order exceeds graph size")
    N = len(corpus)
    spectra = np.vstack([spectrum(g, c).values for g in corpus])
    dens = np.array([density(g) for g in corpus])
    mean_spec = spectra.mean(axis=0)
    degenerate = N == 1
    if degenerate:
        warnings.warn("single-graph corpus: covariance degenerate (zeros)")
        cov = np.zeros((c, c))
    else:
        diff = spectra - mean_spec
        cov = diff.T @ diff / (N - 1)
    return SampleMoments(
        mean_spectrum=mean_spec, cov=cov, mean_density=float(dens.mean()),
        N=N, n=n, c=c, spectra=spectra, degenerate=degenerate,
    )


def frechet_total_variance(corpus: Sequence[Graph], c: int) -> float:
    """Sample total variance around the spectral proxy of the Frechet mean.

    (1/(N-1)) * sum_k ||lambda^(k) - lambda_bar||^2; equals trace of the
    sample covariance up to floating error.
    """
    if len(corpus) < 2:
        raise ValueError("total variance needs at least two graphs")
    m = compute_moments(corpus, c)
    diff = m.spectra - m.mean_spectrum
    return float(np.sum(diff * diff) / (m.N - 1))


def classify_regimes(m: SampleMoments, s: np.ndarray,
                     large_ratio: float = LARGE_REGIME_RATIO) -> RegimeReport:
    """Small/medium/large variance regime per eigenvalue index."""
    s = np.asarray(s, dtype=float)
    if len(s) != m.c:
        raise ValueError("geometry length must equal truncation order")
    inherent = 2.0 * m.mean_spectrum / (m.n * s)
    diagnostic = np.diag(m.cov) - inherent
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.diag(m.cov) > 0, inherent / np.diag(m.cov), np.inf)
    regimes = []
    for d, r in zip(diagnostic, ratio):
        if d < 0:
            regimes.append(SMALL)
        elif r < large_ratio:
            regimes.append(LARGE)
        else:
            regimes.append(MEDIUM)
    return RegimeReport(regimes=tuple(regimes), diagnostic=diagnostic, ratio=ratio)


def moments_report(m: SampleMoments, s: np.ndarray | None = None) -> dict:
    """JSON-ready moments report with regime classification."""
    s = np.full(m.c, 1.0 / m.c) if s is None else np.asarray(s, float)
    reg = classify_regimes(m, s)
    return {
        "format": 1,
        "lambda_bar": m.mean_spectrum.tolist(),
        "sigma_hat": m.cov.tolist(),
        "rho_bar": m.mean_density,
        "N": m.N,
        "n": m.n,
        "c": m.c,
        "regimes": list(reg.regimes),
        "regime_diagnostic": reg.diagnostic.tolist(),
    }
