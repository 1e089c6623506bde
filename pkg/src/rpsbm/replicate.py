"""End-to-end experiment scenarios (synthetic benchmarks + contact data).

Each scenario samples its corpus, runs the relevant fit, resamples, and
returns flat result tables ready for CSV emission.  All randomness derives
from the master seed; scenario parameters are overridable through the
``params`` mapping of an experiment config file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fitting import (
    critical_sample_size,
    curves_to_csv,
    fit_nonparametric,
    fit_parametric,
    run_er_mixture_pipeline,
    sample_mixture,
)
from .geometry import cluster_by_community_count, detect_geometry
from .models import (
    RpsbmModel,
    SbmParams,
    UniformProductLaw,
    sample_corpus,
    sample_sbm,
)
from .moments import compute_moments
from .contacts import load_contacts, window_contacts

SCENARIOS = ("recoverability", "mixture-beta", "critical-n", "contacts")


@dataclass(frozen=True)
class ExperimentConfig:
    """Scenario name, master seed, and parameter overrides."""

    scenario: str
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if d.get("format") != 1:
            raise ValueError("unsupported config format")
        return cls(scenario=d["scenario"], seed=int(d.get("seed", 0)),
                   params=dict(d.get("params", {})))


def _rel_err(est, truth):
    return abs(est - truth) / abs(truth)


def run_recoverability(seed: int, params: dict | None = None) -> dict:
    """Sample an RPSBM corpus with known parameters, fit, and resample.

    Defaults: N=50, n=1000, omega=10/sqrt(n), eps=0.05, s=[0.5,0.5],
    J = U[0.8,0.9] x U[0.55,0.6].
    """
    p = dict(N=50, n=1000, eps=0.05, centers=[0.85, 0.575],
             widths=[0.1, 0.05], s=[0.5, 0.5], resample=None)
    p.update(params or {})
    n, N = int(p["n"]), int(p["N"])
    omega = float(p.get("omega", 10.0 / np.sqrt(n)))
    s = np.asarray(p["s"], dtype=float)
    centers = np.asarray(p["centers"], dtype=float)
    widths = np.asarray(p["widths"], dtype=float)
    c = len(s)
    truth = RpsbmModel(omega=omega, law=UniformProductLaw(centers, widths),
                       epsilon=float(p["eps"]), s=s)

    corpus = sample_corpus(truth, n, N, seed)
    mom = compute_moments(corpus, c)
    fit = fit_parametric(mom, c, family="uniform")
    law = fit.model.law
    omega_hat = fit.model.omega

    resample_n = N if p["resample"] is None else int(p["resample"])
    new = sample_corpus(fit.model, n, resample_n, seed, start_index=N)
    new_mom = compute_moments(new, c)

    rows = []
    for i in range(c):
        rows.append({
            "component": i + 1,
            "omega_p_hat": omega_hat * law.center[i],
            "omega_p_true": omega * centers[i],
            "rel_err_omega_p": _rel_err(omega_hat * law.center[i], omega * centers[i]),
            "omega_delta_hat": omega_hat * law.width[i],
            "omega_delta_true": omega * widths[i],
            "rel_err_omega_delta": _rel_err(omega_hat * law.width[i], omega * widths[i]),
            "lambda_bar": mom.mean_spectrum[i],
            "lambda_bar_new": new_mom.mean_spectrum[i],
            "rel_err_lambda_bar": _rel_err(new_mom.mean_spectrum[i], mom.mean_spectrum[i]),
            "sigma_hat": mom.cov[i, i],
            "sigma_hat_new": new_mom.cov[i, i],
            "rel_err_sigma_hat": _rel_err(new_mom.cov[i, i], mom.cov[i, i]),
        })
    return {
        "table": rows,
        "eps_hat": fit.eps_raw,
        "eps_true": float(p["eps"]),
        "rel_err_eps": _rel_err(fit.eps_raw, float(p["eps"])),
        "fit": fit,
        "moments": mom,
        "new_moments": new_mom,
    }


def run_mixture_beta(seed: int, params: dict | None = None) -> dict:
    """Four-component SBM mixture fitted with a product-of-betas law."""
    p = dict(N=200, n=1000, q=0.05, s=[0.5, 0.5],
             p_values=[[0.9, 0.5], [0.9, 0.3], [0.6, 0.5], [0.6, 0.3]])
    p.update(params or {})
    n, N = int(p["n"]), int(p["N"])
    omega = float(p.get("omega", 10.0 / np.sqrt(n)))
    s = np.asarray(p["s"], dtype=float)
    q = float(p["q"])
    p_values = [np.asarray(v, dtype=float) for v in p["p_values"]]
    c = len(s)

    from . import rng as rngmod

    corpus = []
    for k in range(N):
        choice = int(rngmod.mix_stream(seed, k).integers(len(p_values)))
        corpus.append(sample_sbm(
            SbmParams(omega=omega, s=s, p=p_values[choice], q=q), n, seed, k))
    mom = compute_moments(corpus, c)
    corr = mom.cov[0, 1] / np.sqrt(mom.cov[0, 0] * mom.cov[1, 1])
    fit = fit_parametric(mom, c, family="beta")

    new = sample_corpus(fit.model, n, N, seed, start_index=N)
    new_mom = compute_moments(new, c)
    rows = []
    for i in range(c):
        rows.append({
            "component": i + 1,
            "lambda_bar": mom.mean_spectrum[i],
            "lambda_bar_new": new_mom.mean_spectrum[i],
            "rel_err_lambda_bar": _rel_err(new_mom.mean_spectrum[i], mom.mean_spectrum[i]),
            "sigma_hat": mom.cov[i, i],
            "sigma_hat_new": new_mom.cov[i, i],
            "rel_err_sigma_hat": _rel_err(new_mom.cov[i, i], mom.cov[i, i]),
        })
    return {
        "table": rows,
        "correlation": float(corr),
        "fit": fit,
        "moments": mom,
        "new_moments": new_mom,
    }


def run_critical_n(seed: int, params: dict | None = None) -> dict:
    """Critical sample size for the two-component ER mixture, plus the
    density curves at sub/critical/super sample sizes."""
    p = dict(n=1000, p_values=[0.75, 0.85], N_max=400, repetitions=5,
             subcritical=10, supercritical=325)
    p.update(params or {})
    n = int(p["n"])
    omega = float(p.get("omega", 2.0 / np.sqrt(n)))
    p_values = list(map(float, p["p_values"]))
    n_crit = critical_sample_size(p_values, n, omega, int(p["N_max"]),
                                  seed=seed, repetitions=int(p["repetitions"]))
    curves = {}
    for label, size in (("subcritical", int(p["subcritical"])),
                        ("critical", n_crit),
                        ("supercritical", int(p["supercritical"]))):
        curves[label] = run_er_mixture_pipeline(p_values, n, omega, size, seed=seed)
    return {"n_crit": n_crit, "curves": curves,
            "params": {"n": n, "omega": omega, "p_values": p_values}}


def run_contacts(seed: int, params: dict) -> dict:
    """Window a contact stream, detect geometry, cluster, and fit the two
    largest clusters nonparametrically."""
    p = dict(window=2700, step=20, resample=500, min_cluster=5, c_max=None)
    p.update(params or {})
    if "file" not in p:
        raise ValueError("contacts scenario needs a 'file' parameter")
    stream = load_contacts(p["file"])
    corpus = window_contacts(stream, int(p["window"]), int(p["step"]))
    if not corpus:
        raise ValueError("stream shorter than one window")
    geoms = [detect_geometry(g) for g in corpus]
    clusters: dict[int, list[int]] = {}
    for idx, est in enumerate(geoms):
        clusters.setdefault(est.community_count, []).append(idx)
    sizes = sorted(clusters.items(), key=lambda kv: len(kv[1]), reverse=True)
    fits = {}
    for count, members in sizes[:2]:
        if len(members) < int(p["min_cluster"]) or count < 1:
            continue
        sub = [corpus[i] for i in members]
        s_rows = np.vstack([
            np.pad(geoms[i].s, (0, count - len(geoms[i].s)))[:count]
            for i in members
        ])
        s_rows = s_rows / s_rows.sum(axis=1, keepdims=True)
        mix = fit_nonparametric(sub, count, s_per_graph=s_rows)
        new = sample_mixture(mix, corpus[0].n, int(p["resample"]), seed)
        fits[count] = {
            "members": members,
            "mixture": mix,
            "moments": compute_moments(sub, count),
            "resampled_moments": compute_moments(new, count),
        }
    return {
        "n": corpus[0].n,
        "N": len(corpus),
        "clusters": {k: v for k, v in clusters.items()},
        "fits": fits,
    }
