"""Command-line front end: ``phpnn simulate | fit | predict | evaluate``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np
import yaml

from . import data as dmod
from .config import ConfigError, RunConfig, load_config
from .decomposition import (DecompFit, fit_domain_decomp, fit_intensity_decomp, predictive_domain_decomp,
                            read_decomp, write_decomp)
from .evaluation import (PredictiveBand, coverage, mean_ci_length, posterior_predictive, rmse,
                         write_metrics, write_point_table)
from .fitting import Fit, fit_model
from .inference import ParticleEnsemble, mcmc_run, read_ensemble, write_ensemble

log = logging.getLogger("phpnn")

FIT_META = "fit.json"


class CLIError(RuntimeError):
    pass


def _overrides(args) -> dict:
    over: dict = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    if getattr(args, "output", None) is not None:
        over["output"] = args.output
    if getattr(args, "mode", None) is not None:
        over["mode"] = args.mode
    smc = {k: v for k, v in (("particles", getattr(args, "particles", None)),
                             ("iterations", getattr(args, "iterations", None))) if v is not None}
    if smc:
        over["smc"] = smc
    if getattr(args, "n_planes", None) is not None:
        over["hyper"] = {"n_planes": args.n_planes}
    if getattr(args, "K", None) is not None:
        over["decomposition"] = {"K": args.K}
    if getattr(args, "mcmc_iterations", None) is not None:
        over["mcmc"] = {"iterations": args.mcmc_iterations}
    dat = {k: v for k, v in (("train", getattr(args, "train", None)),
                             ("test", getattr(args, "test", None))) if v is not None}
    if dat:
        over["data"] = dat
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        node = over
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = yaml.safe_load(value)
    return over


def _config(args) -> RunConfig:
    return load_config(args.config, args.preset, _overrides(args))


def _load_dataset(cfg: RunConfig, path: str) -> dmod.Dataset:
    if not os.path.exists(path):
        raise FileNotFoundError(f"data file not found: {path}")
    return dmod.load_csv(path, cfg.data["response"], cfg.data.get("features"))


# ---------------------------------------------------------------- simulate

def cmd_simulate(cfg: RunConfig) -> dict:
    gen = cfg.generator()
    if gen is None:
        raise ConfigError("simulate needs data.generator (or --preset)")
    rng = np.random.default_rng([cfg.seed, 7])
    ds, truth = dmod.gen_simulation(gen["p"], gen["m"], gen["n"], gen["noise_sd"], rng)
    train, test = dmod.train_test_split(ds, cfg.data["split"], rng)
    os.makedirs(cfg.output, exist_ok=True)
    paths = {"train": os.path.join(cfg.output, "train.csv"), "test": os.path.join(cfg.output, "test.csv"),
             "truth": os.path.join(cfg.output, "truth.json")}
    dmod.save_csv(train, paths["train"])
    dmod.save_csv(test, paths["test"])
    with open(paths["truth"], "w") as fh:
        json.dump({
            "generator": gen, "seed": cfg.seed,
            "planes": [[float(mu), [float(v) for v in n]]
                       for mu, n in zip(truth.planes.offsets, truth.planes.normals)],
            "weights": [float(w) for w in truth.weights], "noise_sd": truth.noise_sd,
            "n_train": train.n, "n_test": test.n,
        }, fh, indent=2)
        fh.write("\n")
    return paths


# ---------------------------------------------------------------- fit

def _chain_to_ensemble(chain, burn_in: int) -> ParticleEnsemble:
    sl = slice(burn_in, None)
    n = len(chain) - burn_in
    return ParticleEnsemble(chain.normals[sl].copy(), chain.offsets[sl].copy(), chain.weights[sl].copy(),
                            chain.sigma_sq[sl].copy(), np.zeros(n), chain.domain_radius, n)


def cmd_fit(cfg: RunConfig, train_path: str | None = None) -> dict:
    path = train_path or cfg.data.get("train") or os.path.join(cfg.output, "train.csv")
    train = _load_dataset(cfg, path)
    out_dir = os.path.join(cfg.output, "fit")
    os.makedirs(out_dir, exist_ok=True)
    report: dict = {"mode": cfg.mode, "seed": cfg.seed, "workers": cfg.workers, "n_train": train.n,
                    "n_planes": cfg.hyper.n_planes}
    tic = time.perf_counter()
    if cfg.mode == "whole":
        fit = fit_model(train, cfg.hyper, cfg.smc, cfg.seed, workers=cfg.workers)
        write_ensemble(fit.ensemble, os.path.join(out_dir, "ensemble.jsonl"))
        dmod.write_transform(fit.transform, os.path.join(out_dir, "transform"))
        hist = fit.ensemble.history
        report.update(particles=cfg.smc.particles, annealing_steps=cfg.smc.iterations,
                      ess=fit.ensemble.ess(),
                      acceptance_rate=float(np.mean([h["acceptance"] for h in hist])) if hist else 0.0,
                      log_normalizer=fit.ensemble.log_evidence,
                      train_rmse=rmse(fit.predict_mean(train.X), train.y))
    elif cfg.mode in ("decmp1", "decmp2"):
        if cfg.mode == "decmp1":
            dfit = fit_intensity_decomp(train, cfg.hyper, cfg.decomposition["K"], cfg.smc, cfg.seed,
                                        workers=cfg.workers)
        else:
            axis = int(cfg.decomposition["axis"])
            lo, hi = float(train.X[:, axis].min()), float(train.X[:, axis].max())
            dfit = fit_domain_decomp(train, cfg.hyper, cfg.partition(lo, hi), cfg.smc, cfg.seed,
                                     workers=cfg.workers, planes_per_cell=cfg.decomposition.get("planes_per_cell"),
                                     clamp=True)
        write_decomp(dfit, out_dir)
        report.update(K=dfit.K, particles=cfg.smc.particles, annealing_steps=cfg.smc.iterations,
                      ess=min(f.ensemble.ess() for f in dfit.submodels),
                      sub_seconds_max=max(f.seconds for f in dfit.submodels),
                      log_normalizer=float(sum(f.ensemble.log_evidence for f in dfit.submodels)),
                      train_rmse=rmse(dfit.predict(train.X, clamp=True), train.y))
    else:
        transform = dmod.fit_ball_transform(train.X, cfg.hyper.domain_radius)
        norm = dmod.Dataset(transform.apply(train.X), train.y)
        chain = mcmc_run(norm, cfg.hyper, int(cfg.mcmc["iterations"]), np.random.default_rng(cfg.seed))
        ens = _chain_to_ensemble(chain, 0)
        write_ensemble(ens, os.path.join(out_dir, "chain.jsonl"))
        dmod.write_transform(transform, os.path.join(out_dir, "transform"))
        post = _chain_to_ensemble(chain, int(cfg.mcmc["burn_in"]))
        report.update(chain_length=len(chain), burn_in=int(cfg.mcmc["burn_in"]),
                      acceptance_rate=chain.acceptance_rate,
                      train_rmse=rmse(post.predict_mean(transform.apply(train.X)), train.y))
    report["runtime_seconds"] = time.perf_counter() - tic
    with open(os.path.join(out_dir, FIT_META), "w") as fh:
        json.dump({"mode": cfg.mode, "burn_in": int(cfg.mcmc["burn_in"]), "level": cfg.level}, fh)
        fh.write("\n")
    write_metrics(os.path.join(out_dir, "fit_report.txt"), report)
    return report


# ---------------------------------------------------------------- predict / evaluate

def _load_fit(fit_dir: str):
    meta_path = os.path.join(fit_dir, FIT_META)
    if not os.path.exists(meta_path):
        raise FileNotFoundError(f"no fit found in {fit_dir} (missing {FIT_META})")
    with open(meta_path) as fh:
        meta = json.load(fh)
    mode = meta["mode"]
    if mode in ("decmp1", "decmp2"):
        return mode, read_decomp(os.path.join(fit_dir, "manifest.json"))
    transform = dmod.read_transform(os.path.join(fit_dir, "transform"))
    if mode == "whole":
        return mode, Fit(read_ensemble(os.path.join(fit_dir, "ensemble.jsonl")), transform)
    chain = read_ensemble(os.path.join(fit_dir, "chain.jsonl"))
    b = int(meta.get("burn_in", 0))
    post = chain.take(np.arange(b, chain.size))
    return mode, Fit(post, transform)


def _band(mode: str, fit, X, level: float) -> PredictiveBand:
    if mode == "decmp1":
        mean = fit.predict(X)
        nan = np.full(mean.shape, np.nan)
        return PredictiveBand(mean, nan, nan, level)
    if mode == "decmp2":
        return predictive_domain_decomp(fit, X, level, clamp=True)
    return fit.predictive(X, level)


def _read_band(path: str, level: float) -> PredictiveBand:
    arr = np.atleast_1d(np.genfromtxt(path, delimiter=",", names=True))
    names = arr.dtype.names or ()
    if not {"mean", "lower", "upper"} <= set(names):
        raise CLIError(f"{path}: expected columns mean,lower,upper")
    cols = [np.asarray(arr[k], float) for k in ("mean", "lower", "upper")]
    if not all(np.all(np.isfinite(c)) for c in cols):
        raise CLIError(f"{path}: non-numeric or missing prediction values")
    return PredictiveBand(*cols, level)


def cmd_predict(cfg: RunConfig, fit_dir: str, data_path: str, out_path: str) -> str:
    mode, fit = _load_fit(fit_dir)
    ds = _load_dataset(cfg, data_path)
    write_point_table(out_path, _band(mode, fit, ds.X, cfg.level))
    return out_path


def cmd_evaluate(cfg: RunConfig, fit_dir: str | None, data_path: str, predictions: str | None = None) -> dict:
    if predictions is None and fit_dir is None:
        raise CLIError("evaluate needs --fit or --predictions")
    if predictions is not None and not os.path.exists(predictions):
        raise FileNotFoundError(f"predictions file not found: {predictions}")
    ds = _load_dataset(cfg, data_path)
    if predictions is not None:
        mode, band = "predictions", _read_band(predictions, cfg.level)
    else:
        mode, fit = _load_fit(fit_dir)
        band = _band(mode, fit, ds.X, cfg.level)
    metrics: dict = {"mode": mode, "n_test": ds.n, "level": cfg.level, "rmse": rmse(band.mean, ds.y)}
    if np.all(np.isfinite(band.lower)):
        metrics["coverage"] = coverage(band, ds.y)
        metrics["mean_ci_length"] = mean_ci_length(band)
    out_dir = fit_dir if fit_dir is not None else cfg.output
    os.makedirs(out_dir, exist_ok=True)
    write_metrics(os.path.join(out_dir, "metrics.txt"), metrics)
    write_point_table(os.path.join(out_dir, "points.csv"), band, ds.y)
    return metrics


# ---------------------------------------------------------------- argument parsing

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--preset", choices=["sim1", "sim2", "sim3", "sim4"])
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o", help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config entry, e.g. --set hyper.b0=0.1")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phpnn", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate train/test CSVs from a synthetic study")
    _common(p)

    p = sub.add_parser("fit", help="fit a model and write its snapshot and report")
    _common(p)
    p.add_argument("--train")
    p.add_argument("--mode", choices=["whole", "decmp1", "decmp2", "mcmc"])
    p.add_argument("--particles", type=int)
    p.add_argument("--iterations", type=int, help="annealing steps R")
    p.add_argument("--mcmc-iterations", type=int)
    p.add_argument("--n-planes", type=int)
    p.add_argument("--K", type=int)

    p = sub.add_parser("predict", help="write predictive means and intervals for a data file")
    _common(p)
    p.add_argument("--fit", required=True, help="fit directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="RMSE, coverage and interval length on a data file")
    _common(p)
    p.add_argument("--fit", help="fit directory")
    p.add_argument("--data", help="test CSV (default: <output>/test.csv)")
    p.add_argument("--predictions", help="score a mean,lower,upper CSV instead of a fit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command == "simulate":
            result = cmd_simulate(cfg)
        elif args.command == "fit":
            result = cmd_fit(cfg, args.train)
        elif args.command == "predict":
            result = {"predictions": cmd_predict(cfg, args.fit, args.data, args.out)}
        else:
            data_path = args.data or cfg.data.get("test") or os.path.join(cfg.output, "test.csv")
            result = cmd_evaluate(cfg, args.fit, data_path, args.predictions)
    except (ConfigError, CLIError, FileNotFoundError, ValueError, OSError) as err:
        print(f"phpnn {args.command}: error: {err}", file=sys.stderr)
        return 1
    for k, v in result.items():
        print(f"{k} = {v}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
