"""Moment-matching fits: parametric laws, graph-space kernel mixtures, and
the Erdos-Renyi mixture / critical sample size pipeline.

The parametric fit aligns the first two moments of the parameter law J with
the corpus spectral moments:

    E[P_i]        = lambda_bar_i / (n omega s_i)
    Cov(P_i, P_j) = Sigma_ij / (n^2 omega^2 s_i s_j)
                    - delta_ij * 2 lambda_bar_i / (n^3 omega^2 s_i^3)

with omega = C * rho_bar and epsilon chosen so the expected sampled density
matches the corpus density.  The nonparametric fit runs the same moment
equations per corpus graph with a shared kernel bandwidth H in place of
Sigma, falling back to a Dirac coordinate wherever H_ii cannot cover the
SBM-inherent variance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from . import rng as rngmod
from .models import (
    BetaProductLaw,
    DiracLaw,
    ParamLaw,
    RpsbmModel,
    SbmParams,
    TruncGaussianProductLaw,
    UniformProductLaw,
    sample_rpsbm,
    sample_sbm,
)
from .moments import SMALL, SampleMoments, classify_regimes
from .spectral import Graph, density, spectrum

EPSILON_MAX = 0.2
EPSILON_WARN = 0.1


class InfeasibleFitError(ValueError):
    """Corpus moments admit no parameter law (small regime or geometry)."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class FitResult:
    """Fitted model plus the raw J-moments and feasibility diagnostics."""

    model: RpsbmModel
    mean_J: np.ndarray
    cov_J: np.ndarray
    eps_raw: float
    feasibility: dict
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Bandwidth:
    """Kernel covariance matrix H for graph-space density estimation."""

    H: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        object.__setattr__(self, "H", H)
        if H.shape[0] != H.shape[1]:
            raise ValueError("bandwidth matrix must be square")
        if np.any(np.linalg.eigvalsh((H + H.T) / 2) < -1e-10):
            raise ValueError("bandwidth matrix must be PSD")


@dataclass(frozen=True)
class GraphMixture:
    """Uniform mixture of RPSBM components, one per corpus graph."""

    components: tuple[RpsbmModel, ...]
    dirac_fallback: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if len(self.components) == 0:
            raise ValueError("empty mixture")

    @property
    def weights(self) -> np.ndarray:
        k = len(self.components)
        return np.full(k, 1.0 / k)


# ---------------------------------------------------------------------------
# Moment equations (Alg. steps shared by both fits)
# ---------------------------------------------------------------------------

def _j_moments(lam: np.ndarray, second: np.ndarray, n: int, omega: float,
               s: np.ndarray, drop_inherent: bool = False):
    """First/second J-moments from eigenvalue moments.

    ``second`` is the c x c eigenvalue covariance (corpus Sigma or kernel H).
    ``drop_inherent`` applies the large-variance simplification (omit the
    2*lambda_bar correction on the diagonal).
    """
    mean = lam / (n * omega * s)
    cov = second / (n**2 * omega**2 * np.outer(s, s))
    if not drop_inherent:
        cov = cov - np.diag(2.0 * lam / (n**3 * omega**2 * s**3))
    return mean, cov


def _epsilon_hat(mean: np.ndarray, s: np.ndarray, scale_c: float) -> float:
    """Density-preserving epsilon; 1/C target when omega = C * rho_bar."""
    denom = float(mean.min()) * (1.0 - float(np.sum(s**2)))
    if denom == 0.0:
        return float("nan")
    return (1.0 / scale_c - float(np.sum(mean * s**2))) / denom


def _geometry_guard(lam: np.ndarray, n: int, s: np.ndarray) -> np.ndarray:
    """Eq. feasibility: lambda_bar_i must not exceed the block size n*s_i."""
    scaled = lam / (n * s)
    return (scaled >= 0) & (scaled <= 1)


def _solve_family(kind: str, mean: np.ndarray, var: np.ndarray,
                  lo: np.ndarray | None, hi: np.ndarray | None,
                  notes: list[str]) -> ParamLaw:
    if kind == "dirac":
        if np.any(var > 1e-12):
            notes.append("dirac family ignores a nonzero fitted variance")
        return DiracLaw(mean)
    if kind == "uniform":
        return UniformProductLaw(mean, np.sqrt(12.0 * var))
    if kind == "beta":
        if lo is None or hi is None:
            raise ValueError("beta family needs per-coordinate ranges")
        return fit_beta_product(mean, var, lo, hi)
    if kind == "gauss":
        if np.any(mean < 0) or np.any(mean > 1):
            notes.append("gauss family truncated to [0,1] but fitted mean lies outside")
        return TruncGaussianProductLaw(mean, np.sqrt(var))
    raise ValueError(f"unknown family {kind!r}")


def fit_beta_product(mean, var, a, b) -> BetaProductLaw:
    """Invert shifted-beta mean/variance per coordinate.

    With m = (mean-a)/(b-a) and v = var/(b-a)^2:
        alpha = m (m(1-m)/v - 1),  beta = (1-m) (m(1-m)/v - 1).
    """
    mean, var = np.asarray(mean, float), np.asarray(var, float)
    a, b = np.asarray(a, float), np.asarray(b, float)
    if np.any(a >= mean) or np.any(mean >= b):
        raise ValueError("need a_i < mean_i < b_i")
    if np.any(var <= 0):
        raise ValueError("beta fit needs positive variance")
    m = (mean - a) / (b - a)
    v = var / (b - a) ** 2
    t = m * (1 - m) / v - 1.0
    if np.any(t <= 0):
        raise ValueError("variance too large for the range (no beta solution)")
    return BetaProductLaw(a, b, m * t, (1 - m) * t)


def fit_parametric(m: SampleMoments, c: int, family: str = "uniform",
                   s_override: np.ndarray | None = None,
                   omega: float | None = None, scale_c: float = 1.0,
                   drop_inherent: bool = False,
                   eps_max: float | None = EPSILON_MAX) -> FitResult:
    """Fit an RPSBM by matching corpus spectral moments (parametric J).

    omega defaults to scale_c * rho_bar.  Raises ``InfeasibleFitError`` when
    any index is in the small-variance regime or when a mean eigenvalue
    exceeds its block size.
    """
    if c != m.c:
        raise ValueError("truncation order does not match the moments")
    if m.N < 2:
        raise ValueError("parametric fit needs at least two graphs")
    s = np.full(c, 1.0 / c) if s_override is None else np.asarray(s_override, float)
    if len(s) != c:
        raise ValueError("geometry length must equal truncation order")
    notes: list[str] = []

    report = classify_regimes(m, s)
    if report.any_small() and family != "dirac":
        # a Dirac law never matches variance, so the small-regime corpus is
        # only infeasible for variance-carrying families
        bad = [i for i, r in enumerate(report.regimes) if r == SMALL]
        raise InfeasibleFitError(
            f"small-variance regime at indices {bad}: no J can match the "
            "corpus variance", report,
        )
    geom_ok = _geometry_guard(m.mean_spectrum, m.n, s)
    if not geom_ok.all():
        bad = [i for i, ok in enumerate(geom_ok) if not ok]
        raise InfeasibleFitError(
            f"mean eigenvalue exceeds block size at indices {bad}", report,
        )

    if omega is None:
        omega = scale_c * m.mean_density
    if omega <= 0:
        raise InfeasibleFitError("corpus density is zero; nothing to fit")

    mean, cov = _j_moments(m.mean_spectrum, m.cov, m.n, omega, s,
                           drop_inherent=drop_inherent)
    var = np.diag(cov).copy()
    if family == "dirac":
        var = np.maximum(var, 0.0)
    elif np.any(var < 0):
        # regime gate above should prevent this; guard with a clear message
        raise InfeasibleFitError("negative implied J-variance", report)
    in_unit = (mean >= 0) & (mean <= 1)
    if not in_unit.all():
        notes.append(
            "fitted E[P] outside [0,1] (expected when omega=rho_bar absorbs "
            "the kernel mass; products omega*E[P] remain valid)"
        )

    if family == "beta":
        lam_lo = m.min_spectrum / (m.n * omega * s)
        lam_hi = m.max_spectrum / (m.n * omega * s)
        law = _solve_family(family, mean, var, lam_lo, lam_hi, notes)
    else:
        law = _solve_family(family, mean, var, None, None, notes)

    eps_raw = _epsilon_hat(mean, s, scale_c)
    if np.isnan(eps_raw):
        notes.append("single community: epsilon undefined, set to 0")
        eps_raw = 0.0
    eps = eps_raw
    if eps < 0:
        notes.append(f"epsilon clamped to 0 (raw {eps_raw:.4g})")
        eps = 0.0
    if eps_max is not None and eps > eps_max:
        notes.append(f"epsilon clamped to {eps_max} (raw {eps_raw:.4g})")
        eps = eps_max
    elif eps > EPSILON_WARN:
        notes.append(f"epsilon {eps:.4g} above {EPSILON_WARN}; expansions assume eps << 1")

    for note in notes:
        warnings.warn(note)
    model = RpsbmModel(omega=omega, law=law, epsilon=eps, s=s)
    feas = {
        "geometry": geom_ok.tolist(),
        "support_in_unit": in_unit.tolist(),
        "variance_nonneg": (var >= 0).tolist(),
        "regimes": list(report.regimes),
    }
    return FitResult(model=model, mean_J=mean, cov_J=cov, eps_raw=eps_raw,
                     feasibility=feas, warnings=notes)


# ---------------------------------------------------------------------------
# Nonparametric graph-space kernel mixture
# ---------------------------------------------------------------------------

def silverman_bandwidth(N: int, sigma) -> Bandwidth:
    """Diagonal H with h = ((4/3)^(1/5) N^(-1/5) sigma)^2 per coordinate."""
    if N < 1:
        raise ValueError("N must be positive")
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if np.any(sigma < 0):
        raise ValueError("sigma must be non-negative")
    if np.any(sigma == 0):
        warnings.warn("zero scale gives a degenerate (zero) bandwidth")
    h = ((4.0 / 3.0) ** 0.2 * N ** (-0.2) * sigma) ** 2
    return Bandwidth(np.diag(h))


def fit_nonparametric(corpus, c: int, bandwidth: Bandwidth | str = "silverman",
                      law_kind: str = "uniform",
                      s_per_graph: np.ndarray | None = None) -> GraphMixture:
    """Graph-space kernel mixture: one RPSBM component per corpus graph.

    The shared bandwidth H plays the role of the eigenvalue covariance when
    solving each component's J-moments.  Coordinates where
    H_ii <= 2 lambda_i / (n s_i) fall back to a Dirac marginal (local
    over-smoothing), recorded per component.
    """
    from .moments import compute_moments

    if len(corpus) == 0:
        raise ValueError("empty corpus")
    mom = compute_moments(corpus, c)
    if isinstance(bandwidth, str):
        if bandwidth != "silverman":
            raise ValueError(f"unknown bandwidth rule {bandwidth!r}")
        sigma = np.sqrt(np.diag(mom.cov)) if mom.N > 1 else np.zeros(c)
        bandwidth = silverman_bandwidth(mom.N, sigma)
    H = bandwidth.H
    if H.shape != (c, c):
        raise ValueError("bandwidth dimension must equal truncation order")

    components = []
    fallbacks = []
    for k, g in enumerate(corpus):
        lam = mom.spectra[k]
        rho_k = density(g)
        if rho_k <= 0:
            raise InfeasibleFitError(f"graph {k} is empty; cannot set omega")
        if s_per_graph is not None:
            s = np.asarray(s_per_graph[k], dtype=float)
            if len(s) != c:
                raise ValueError("per-graph geometry length must equal c")
        else:
            s = np.full(c, 1.0 / c)
        geom_ok = _geometry_guard(lam, g.n, s)
        if not geom_ok.all():
            bad = [i for i, ok in enumerate(geom_ok) if not ok]
            raise InfeasibleFitError(
                f"graph {k}: eigenvalue exceeds block size at indices {bad}")
        mean, cov = _j_moments(lam, H, g.n, rho_k, s)
        var = np.diag(cov).copy()
        inherent_ok = H.diagonal() - 2.0 * lam / (g.n * s) > 0
        dirac_idx = tuple(int(i) for i in np.nonzero(~inherent_ok)[0])
        var[~inherent_ok] = 0.0
        if law_kind == "uniform":
            law = UniformProductLaw(mean, np.sqrt(12.0 * var))
        elif law_kind == "gauss":
            law = TruncGaussianProductLaw(mean, np.sqrt(var))
        else:
            raise ValueError(f"unsupported kernel law {law_kind!r}")
        eps = _epsilon_hat(mean, s, 1.0)
        if np.isnan(eps):
            eps = 0.0
        eps = float(np.clip(eps, 0.0, EPSILON_MAX))
        components.append(RpsbmModel(omega=rho_k, law=law, epsilon=eps, s=s))
        fallbacks.append(dirac_idx)
    return GraphMixture(components=tuple(components),
                        dirac_fallback=tuple(fallbacks))


def sample_mixture(mix: GraphMixture, n: int, count: int, seed: int) -> list[Graph]:
    """Ancestral sampling: uniform component choice, then the RPSBM draw."""
    k = len(mix.components)
    out = []
    for g in range(count):
        choice = int(rngmod.mix_stream(seed, g).integers(k))
        out.append(sample_rpsbm(mix.components[choice], n, seed, g))
    return out


# ---------------------------------------------------------------------------
# Erdos-Renyi mixture pipeline and the critical sample size
# ---------------------------------------------------------------------------

def er_params(p: float, omega: float) -> SbmParams:
    return SbmParams(omega=omega, s=np.array([1.0]), p=np.array([p]), q=0.0)


def oracle_sigma(p_values, n: int, omega: float) -> float:
    """Oracle eigenvalue scale of a uniform ER mixture.

    Mean inherent variance plus the variance of the component means
    n*omega*p_j (the plug-in known-parameter variant of Silverman's sigma).
    """
    p = np.asarray(p_values, dtype=float)
    means = n * omega * p
    var = np.mean(2.0 * p) + np.mean(means**2) - np.mean(means) ** 2
    return float(np.sqrt(var))


def critical_n_for_threshold(sigma: float, threshold: float) -> float:
    """Smallest real N with ((4/3)^(1/5) N^(-1/5) sigma)^2 <= threshold."""
    if sigma <= 0 or threshold <= 0:
        raise ValueError("sigma and threshold must be positive")
    return ((4.0 / 3.0) ** 0.2 * sigma / np.sqrt(threshold)) ** 5


def _er_observables(p_values, n, omega, seed, graph_index):
    """(lambda_1, rho, p_hat) of one draw from the uniform ER mixture."""
    p = np.asarray(p_values, dtype=float)
    choice = int(rngmod.mix_stream(seed, graph_index).integers(len(p)))
    g = sample_sbm(er_params(float(p[choice]), omega), n, seed, graph_index)
    lam1 = spectrum(g, 1).values[0]
    rho = density(g)
    if rho == 0:
        warnings.warn("empty graph: p_hat set to 0")
        p_hat = 0.0
    else:
        p_hat = (lam1 - 1.0) / (n * rho)
    return lam1, rho, p_hat


def critical_sample_size(p_values, n: int, omega: float, N_max: int,
                         seed: int = 0, repetitions: int = 5) -> int:
    """Smallest corpus size at which max_k 2 p_hat^(k) exceeds h_N.

    Grows a corpus one draw at a time per repetition, comparing the running
    max of 2*p_hat against the oracle-sigma Silverman bandwidth h_N; returns
    the repetition average (rounded).  Raises if no repetition crosses by
    N_max.
    """
    sigma = oracle_sigma(p_values, n, omega)
    crossings = []
    for rep in range(repetitions):
        max2p = -np.inf
        hit = None
        for k in range(1, N_max + 1):
            _, _, p_hat = _er_observables(p_values, n, omega,
                                          seed + rep, k - 1)
            max2p = max(max2p, 2.0 * p_hat)
            h = float(silverman_bandwidth(k, sigma).H[0, 0])
            if max2p > h:
                hit = k
                break
        if hit is None:
            raise ValueError(f"condition never violated up to N_max={N_max}")
        crossings.append(hit)
    return int(round(float(np.mean(crossings))))


@dataclass(frozen=True)
class CurveTable:
    """Density curves on a shared grid, ready for CSV export."""

    z: np.ndarray
    f_true: np.ndarray
    f_hat: np.ndarray
    f_silverman: np.ndarray
    p_hat: np.ndarray
    h_N: float


def _normal_mixture(z, means, sds):
    out = np.zeros_like(z)
    for mu, sd in zip(means, sds):
        out += scipy.stats.norm.pdf(z, loc=mu, scale=sd)
    return out / len(means)


def run_er_mixture_pipeline(p_values, n: int, omega: float, N: int,
                            seed: int = 0, grid_points: int = 2048) -> CurveTable:
    """Oracle, mixture-kernel, and Silverman density curves for lambda_1.

    Per corpus draw: p_hat = (lambda_1 - 1)/(n rho).  f_true uses the known
    mixture parameters, f_hat the per-graph kernels with SBM-inherent scale
    sqrt(2 p_hat), f_silverman the oracle-sigma Silverman bandwidth.
    """
    p = np.asarray(p_values, dtype=float)
    lam = np.empty(N)
    rho = np.empty(N)
    p_hat = np.empty(N)
    for k in range(N):
        lam[k], rho[k], p_hat[k] = _er_observables(p, n, omega, seed, k)
    hat_means = n * rho * p_hat + 1.0
    hat_sds = np.sqrt(np.maximum(2.0 * p_hat, 1e-12))
    true_means = n * omega * p + 1.0
    true_sds = np.sqrt(2.0 * p)
    h_N = float(silverman_bandwidth(N, oracle_sigma(p, n, omega)).H[0, 0])
    silver_sd = np.full(N, np.sqrt(h_N))

    all_means = np.concatenate([true_means, hat_means])
    max_sd = max(true_sds.max(), hat_sds.max(), np.sqrt(h_N))
    lo = all_means.min() - 6.0 * max_sd
    hi = all_means.max() + 6.0 * max_sd
    z = np.linspace(lo, hi, grid_points)
    return CurveTable(
        z=z,
        f_true=_normal_mixture(z, true_means, true_sds),
        f_hat=_normal_mixture(z, hat_means, hat_sds),
        f_silverman=_normal_mixture(z, hat_means, silver_sd),
        p_hat=p_hat,
        h_N=h_N,
    )


def curves_to_csv(table: CurveTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("z,f_true,f_hat,f_silverman\n")
        for row in zip(table.z, table.f_true, table.f_hat, table.f_silverman):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
