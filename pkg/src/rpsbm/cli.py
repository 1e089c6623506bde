"""Command-line interface.

Every subcommand accepts --seed/--out/--config, writes its outputs plus a
manifest.json recording the exact invocation, and is bit-reproducible for a
fixed seed.  Exit codes: 0 success, 1 I/O or validation failure,
2 infeasibility (small-variance regime or geometry violations).
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .contacts import load_contacts, window_contacts
from .fitting import (
    Bandwidth,
    InfeasibleFitError,
    curves_to_csv,
    fit_nonparametric,
    fit_parametric,
    sample_mixture,
)
from .geometry import cluster_by_community_count, detect_geometry
from .models import (
    RpsbmModel,
    SbmParams,
    law_to_dict,
    load_model,
    model_to_dict,
    sample_corpus,
)
from .moments import classify_regimes, compute_moments, moments_report
from .replicate import (
    ExperimentConfig,
    run_contacts,
    run_critical_n,
    run_mixture_beta,
    run_recoverability,
)
from .spectral import Graph, density, load_edgelist, save_edgelist, spectrum

click.UsageError.exit_code = 1  # spec: validation errors exit 1


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _config_hash(path: str | None, fallback: dict) -> str:
    if path is not None:
        data = Path(path).read_bytes()
    else:
        data = json.dumps(_jsonable(fallback), sort_keys=True).encode()
    return hashlib.sha256(data).hexdigest()


def _write_manifest(out: Path, command: str, args: dict, seed: int,
                    config_path: str | None, outputs: list[str]) -> None:
    import scipy

    manifest = {
        "format": 1,
        "command": command,
        "args": _jsonable(args),
        "seed": seed,
        "config_hash": _config_hash(config_path, args),
        "versions": {
            "rpsbm": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "outputs": sorted(outputs),
    }
    _write_json(out / "manifest.json", manifest)


def _load_corpus(corpus_dir: str) -> list[Graph]:
    paths = sorted(Path(corpus_dir).glob("*.txt"))
    if not paths:
        raise ValueError(f"no edge-list files (*.txt) in {corpus_dir}")
    return [load_edgelist(p) for p in paths]


def _outdir(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _run(fn, *args, **kwargs):
    """Run a command body with the spec's exit-code mapping."""
    try:
        return fn(*args, **kwargs)
    except InfeasibleFitError as exc:
        _fail(str(exc), 2)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(str(exc), 1)


def common_options(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Master seed; all randomness derives from it.")(fn)
    fn = click.option("--out", "out", required=True,
                      help="Output directory.")(fn)
    fn = click.option("--config", "config", default=None,
                      help="JSON config file with parameter overrides.")(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Spectral density estimation for corpora of large graphs."""


@main.command()
@common_options
@click.option("--model", "model_path", required=True, help="Model spec JSON.")
@click.option("--n", type=int, required=True, help="Graph size.")
@click.option("--count", type=int, required=True, help="Number of graphs.")
def sample(seed, out, config, model_path, n, count):
    """Sample graphs from a model spec into edge-list files."""

    def body():
        outdir = _outdir(out)
        model = load_model(model_path)
        graphs = sample_corpus(model, n, count, seed)
        outputs = []
        for k, g in enumerate(graphs):
            name = f"graph_{k:04d}.txt"
            save_edgelist(g, outdir / name)
            outputs.append(name)
        _write_manifest(outdir, "sample",
                        {"model": model_to_dict(model), "n": n, "count": count},
                        seed, config, outputs)
        click.echo(f"wrote {count} graphs to {outdir}")

    _run(body)


@main.command()
@common_options
@click.option("--corpus", "corpus_dir", required=True, help="Corpus directory.")
@click.option("-c", "trunc", type=int, required=True, help="Truncation order.")
def spectra(seed, out, config, corpus_dir, trunc):
    """Top-c eigenvalues and density of every corpus graph (CSV)."""

    def body():
        outdir = _outdir(out)
        corpus = _load_corpus(corpus_dir)
        path = outdir / "spectra.csv"
        with open(path, "w", encoding="utf-8") as fh:
            head = ",".join(f"lambda{i+1}" for i in range(trunc))
            fh.write(f"graph,{head},density\n")
            for k, g in enumerate(corpus):
                vals = spectrum(g, trunc).values
                row = ",".join(format(v, ".17g") for v in vals)
                dens = format(density(g), ".17g")
                fh.write(f"{k},{row},{dens}\n")
        _write_manifest(outdir, "spectra", {"corpus": corpus_dir, "c": trunc},
                        seed, config, ["spectra.csv"])
        click.echo(f"wrote {path}")

    _run(body)


@main.command()
@common_options
@click.option("--corpus", "corpus_dir", required=True)
@click.option("-c", "trunc", type=int, required=True)
def moments(seed, out, config, corpus_dir, trunc):
    """Corpus moments report (mean spectrum, covariance, regimes)."""

    def body():
        outdir = _outdir(out)
        corpus = _load_corpus(corpus_dir)
        m = compute_moments(corpus, trunc)
        _write_json(outdir / "moments.json", moments_report(m))
        _write_manifest(outdir, "moments", {"corpus": corpus_dir, "c": trunc},
                        seed, config, ["moments.json"])
        click.echo(f"wrote {outdir / 'moments.json'}")

    _run(body)


@main.command()
@common_options
@click.option("--corpus", "corpus_dir", required=True)
@click.option("-c", "trunc", type=int, required=True)
def regimes(seed, out, config, corpus_dir, trunc):
    """Variance-regime report per eigenvalue index."""

    def body():
        outdir = _outdir(out)
        corpus = _load_corpus(corpus_dir)
        m = compute_moments(corpus, trunc)
        s = np.full(trunc, 1.0 / trunc)
        rep = classify_regimes(m, s)
        payload = {
            "format": 1,
            "regimes": list(rep.regimes),
            "diagnostic": rep.diagnostic,
            "ratio": rep.ratio,
        }
        _write_json(outdir / "regimes.json", payload)
        _write_manifest(outdir, "regimes", {"corpus": corpus_dir, "c": trunc},
                        seed, config, ["regimes.json"])
        click.echo(f"wrote {outdir / 'regimes.json'}")

    _run(body)


def _geometry_s(corpus, trunc):
    """Average geometry vector over graphs whose detected count equals c."""
    estimates = [detect_geometry(g) for g in corpus]
    matching = [e.s for e in estimates if e.community_count == trunc]
    if not matching:
        raise InfeasibleFitError(
            f"no corpus graph has {trunc} detected communities")
    s = np.mean(np.vstack(matching), axis=0)
    return s / s.sum()


@main.command()
@common_options
@click.option("--corpus", "corpus_dir", required=True)
@click.option("-c", "trunc", type=int, required=True)
@click.option("--family", type=click.Choice(["dirac", "uniform", "beta", "gauss"]),
              default="uniform", show_default=True)
@click.option("--s-from-geometry", is_flag=True,
              help="Estimate the geometry vector from eigenvector profiles.")
def fit(seed, out, config, corpus_dir, trunc, family, s_from_geometry):
    """Parametric moment-matching fit of a random-parameter block model."""

    def body():
        outdir = _outdir(out)
        corpus = _load_corpus(corpus_dir)
        m = compute_moments(corpus, trunc)
        s_override = _geometry_s(corpus, trunc) if s_from_geometry else None
        result = fit_parametric(m, trunc, family=family, s_override=s_override)
        payload = {
            "format": 1,
            "model": model_to_dict(result.model),
            "moments_J": {"mean": result.mean_J, "cov": result.cov_J,
                          "eps_raw": result.eps_raw},
            "feasibility": result.feasibility,
            "warnings": result.warnings,
        }
        _write_json(outdir / "fit.json", payload)
        _write_manifest(outdir, "fit",
                        {"corpus": corpus_dir, "c": trunc, "family": family,
                         "s_from_geometry": s_from_geometry},
                        seed, config, ["fit.json"])
        click.echo(f"wrote {outdir / 'fit.json'}")

    _run(body)


@main.command(name="fit-np")
@common_options
@click.option("--corpus", "corpus_dir", required=True)
@click.option("-c", "trunc", type=int, required=True)
@click.option("--bandwidth", default="silverman", show_default=True,
              help="'silverman' or 'fixed:<h>'.")
def fit_np(seed, out, config, corpus_dir, trunc, bandwidth):
    """Nonparametric graph-space kernel-mixture fit."""

    def body():
        outdir = _outdir(out)
        corpus = _load_corpus(corpus_dir)
        if bandwidth.startswith("fixed:"):
            h = float(bandwidth.split(":", 1)[1])
            bw = Bandwidth(np.eye(trunc) * h)
        elif bandwidth == "silverman":
            bw = "silverman"
        else:
            raise ValueError(f"unknown bandwidth rule {bandwidth!r}")
        mix = fit_nonparametric(corpus, trunc, bandwidth=bw)
        payload = {
            "format": 1,
            "weights": mix.weights,
            "components": [model_to_dict(comp) for comp in mix.components],
            "dirac_fallback": [list(f) for f in mix.dirac_fallback],
        }
        _write_json(outdir / "mixture.json", payload)
        _write_manifest(outdir, "fit-np",
                        {"corpus": corpus_dir, "c": trunc, "bandwidth": bandwidth},
                        seed, config, ["mixture.json"])
        click.echo(f"wrote {outdir / 'mixture.json'}")

    _run(body)


@main.command()
@common_options
@click.option("--corpus", "corpus_dir", required=True)
def geometry(seed, out, config, corpus_dir):
    """Per-graph geometry estimates and clustering by community count."""

    def body():
        outdir = _outdir(out)
        corpus = _load_corpus(corpus_dir)
        estimates = [detect_geometry(g) for g in corpus]
        clusters: dict[int, list[int]] = {}
        for idx, est in enumerate(estimates):
            clusters.setdefault(est.community_count, []).append(idx)
        payload = {
            "format": 1,
            "graphs": [e.to_dict() for e in estimates],
            "clusters": {str(k): v for k, v in sorted(clusters.items())},
        }
        _write_json(outdir / "geometry.json", payload)
        _write_manifest(outdir, "geometry", {"corpus": corpus_dir},
                        seed, config, ["geometry.json"])
        click.echo(f"wrote {outdir / 'geometry.json'}")

    _run(body)


@main.command(name="critical-n")
@common_options
@click.option("--mixture-spec", "spec_path", required=True,
              help="JSON with n, omega, p_values.")
@click.option("--n-max", type=int, required=True)
def critical_n(seed, out, config, spec_path, n_max):
    """Critical corpus size for the ER-mixture bandwidth condition."""

    def body():
        outdir = _outdir(out)
        with open(spec_path, encoding="utf-8") as fh:
            spec = json.load(fh)
        if spec.get("format") != 1:
            raise ValueError("unsupported mixture spec format")
        params = {"n": spec["n"], "omega": spec.get("omega"),
                  "p_values": spec["p_values"], "N_max": n_max}
        params = {k: v for k, v in params.items() if v is not None}
        result = run_critical_n(seed, params)
        outputs = ["critical_n.json"]
        for label, table in result["curves"].items():
            name = f"curves_{label}.csv"
            curves_to_csv(table, outdir / name)
            outputs.append(name)
        _write_json(outdir / "critical_n.json", {
            "format": 1,
            "n_crit": result["n_crit"],
            "params": result["params"],
        })
        _write_manifest(outdir, "critical-n",
                        {"mixture_spec": spec, "n_max": n_max},
                        seed, config, outputs)
        click.echo(f"N_crit = {result['n_crit']}")

    _run(body)


@main.command()
@common_options
@click.option("--file", "contact_file", required=True, help="Contact stream file.")
@click.option("--window", type=int, default=2700, show_default=True)
@click.option("--step", type=int, default=20, show_default=True)
def contacts(seed, out, config, contact_file, window, step):
    """Window a temporal contact stream into a corpus of graphs."""

    def body():
        outdir = _outdir(out)
        stream = load_contacts(contact_file)
        graphs = window_contacts(stream, window, step)
        outputs = []
        for k, g in enumerate(graphs):
            name = f"graph_{k:04d}.txt"
            save_edgelist(g, outdir / name)
            outputs.append(name)
        _write_manifest(outdir, "contacts",
                        {"file": contact_file, "window": window, "step": step},
                        seed, config, outputs)
        click.echo(f"wrote {len(graphs)} windowed graphs to {outdir}")

    _run(body)


@main.command()
@common_options
@click.argument("scenario",
                type=click.Choice(["recoverability", "mixture-beta",
                                   "critical-n", "contacts"]))
def replicate(seed, out, config, scenario):
    """Run a full benchmark scenario and emit its error tables."""

    def body():
        outdir = _outdir(out)
        cfg = _load_config(config)
        if cfg:
            exp = ExperimentConfig.from_dict(cfg)
            if exp.scenario != scenario:
                raise ValueError(
                    f"config is for scenario {exp.scenario!r}, not {scenario!r}")
            run_seed, params = exp.seed, exp.params
        else:
            run_seed, params = seed, {}
        outputs = []

        if scenario == "recoverability":
            res = run_recoverability(run_seed, params)
            outputs.append(_table_csv(outdir / "errors.csv", res["table"]))
            _write_json(outdir / "report.json", {
                "format": 1,
                "eps_hat": res["eps_hat"],
                "eps_true": res["eps_true"],
                "rel_err_eps": res["rel_err_eps"],
                "model": model_to_dict(res["fit"].model),
            })
            outputs.append("report.json")
        elif scenario == "mixture-beta":
            res = run_mixture_beta(run_seed, params)
            outputs.append(_table_csv(outdir / "errors.csv", res["table"]))
            _write_json(outdir / "report.json", {
                "format": 1,
                "correlation": res["correlation"],
                "model": model_to_dict(res["fit"].model),
            })
            outputs.append("report.json")
        elif scenario == "critical-n":
            res = run_critical_n(run_seed, params)
            for label, table in res["curves"].items():
                name = f"curves_{label}.csv"
                curves_to_csv(table, outdir / name)
                outputs.append(name)
            _write_json(outdir / "report.json", {
                "format": 1, "n_crit": res["n_crit"], "params": res["params"],
            })
            outputs.append("report.json")
        else:
            res = run_contacts(run_seed, params)
            _write_json(outdir / "report.json", {
                "format": 1,
                "n": res["n"],
                "N": res["N"],
                "clusters": {str(k): v for k, v in sorted(res["clusters"].items())},
                "fits": {
                    str(k): {
                        "members": v["members"],
                        "lambda_bar": v["moments"].mean_spectrum,
                        "lambda_bar_resampled": v["resampled_moments"].mean_spectrum,
                    }
                    for k, v in res["fits"].items()
                },
            })
            outputs.append("report.json")

        _write_manifest(outdir, f"replicate {scenario}",
                        {"scenario": scenario, "params": params},
                        run_seed, config, outputs)
        click.echo(f"scenario {scenario} complete; outputs in {outdir}")

    _run(body)


def _table_csv(path: Path, rows: list[dict]) -> str:
    cols = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(
                format(row[c], ".17g") if isinstance(row[c], float) else str(row[c])
                for c in cols) + "\n")
    return path.name


if __name__ == "__main__":
    main()
