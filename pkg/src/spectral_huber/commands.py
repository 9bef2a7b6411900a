"""Implementations of the command-line subcommands."""

from __future__ import annotations

import csv
import os
import time

import numpy as np

from .archive import (
    load_problem,
    problem_digest,
    read_complex_array,
    save_problem,
    write_complex_array,
    write_meta,
)
from .config import ExperimentConfig, build_config
from .exceptions import ConfigError, ProblemMismatch, ZeroReference
from .model import datashare_init, generate_synthetic
from .potentials import make_potential
from .solvers import SolverConfig, dist_to_limit, nrmse, solve
from .spectral import SpectralRegularizer, tail_weights
from . import plots

COMPARE_HEADER = ("method", "iter", "cost", "nrmse", "dist")


def cmd_generate(cfg: ExperimentConfig) -> int:
    if cfg.out is None:
        raise ConfigError("generate needs an output directory (out)")
    problem = generate_synthetic(
        seed=cfg.seed,
        m_x=cfg.m_x,
        m_y=cfg.m_y,
        n_frames=cfg.n_frames,
        n_coils=cfg.coils,
        rank=cfg.rank,
        accel=cfg.acceleration,
        noise_sigma=cfg.noise_sigma,
        patch=cfg.patch,
        lam=cfg.lam,
    )
    save_problem(cfg.out, problem)
    print(
        f"wrote problem to {cfg.out}: {cfg.m_x}x{cfg.m_y}, "
        f"{cfg.n_frames} frames, {cfg.coils} coils, rank {cfg.rank}, "
        f"acceleration {cfg.acceleration}, sigma {cfg.noise_sigma}, seed {cfg.seed}"
    )
    return 0


def _build_regularizer(cfg: ExperimentConfig, geom, n_frames: int):
    r = min(geom.P, n_frames)
    weights = tail_weights(r, cfg.K) if cfg.K is not None else None
    potential = make_potential(cfg.potential, cfg.delta)
    return SpectralRegularizer(potential, weights)


def _solver_config(cfg: ExperimentConfig) -> SolverConfig:
    return SolverConfig(
        method=cfg.method,
        max_iter=cfg.max_iter,
        lam=cfg.lam,
        n_alpha=cfg.n_alpha,
        alpha0=cfg.alpha0,
        curvature=cfg.curvature,
        fast_step=cfg.fast_step,
        sbar=cfg.sbar,
        eta=cfg.eta,
        deterministic_reduce=cfg.deterministic_reduce,
        store_every=cfg.store_every,
    )


def _run_reconstruction(cfg: ExperimentConfig):
    if cfg.problem is None:
        raise ConfigError("reconstruct needs a problem archive (problem)")
    problem = load_problem(cfg.problem)
    R = _build_regularizer(cfg, problem.geom, problem.Y.shape[1])
    X0 = datashare_init(problem)
    scfg = _solver_config(cfg)
    start = time.perf_counter()
    X, log = solve(problem, scfg, X0, R)
    elapsed = time.perf_counter() - start
    return problem, X, log, elapsed


def _write_run_outputs(cfg: ExperimentConfig, X, log, elapsed: float):
    os.makedirs(cfg.out, exist_ok=True)
    write_complex_array(os.path.join(cfg.out, "xhat"), X[:, :, None])
    log.to_csv(os.path.join(cfg.out, "log.csv"))
    final = log.rows[-1]
    write_meta(
        os.path.join(cfg.out, "run_meta"),
        {
            "problem": str(cfg.problem),
            "problem_digest": problem_digest(cfg.problem),
            "method": cfg.method,
            "potential": cfg.potential,
            "iterations": final.iteration,
        },
    )
    with open(os.path.join(cfg.out, "summary"), "w") as fh:
        fh.write(f"method = {cfg.method}\n")
        fh.write(f"iterations = {final.iteration}\n")
        fh.write(f"final_cost = {final.cost!r}\n")
        fh.write(f"final_nrmse = {final.nrmse!r}\n")
        fh.write(f"wall_seconds = {elapsed!r}\n")
    plots.convergence_figure(log, os.path.join(cfg.out, "convergence.png"))
    print(
        f"{cfg.method}: {final.iteration} iterations, cost {final.cost:.6g}, "
        f"nrmse {final.nrmse:.4f}, {elapsed:.1f}s -> {cfg.out}"
    )


def cmd_reconstruct(cfg: ExperimentConfig) -> int:
    if cfg.out is None:
        raise ConfigError("reconstruct needs an output directory (out)")
    _, X, log, elapsed = _run_reconstruction(cfg)
    _write_run_outputs(cfg, X, log, elapsed)
    return 0


def _dist_column(log) -> np.ndarray:
    """Distance to the run's own final stored iterate, NaN where unstored."""
    dist = np.full(len(log.rows), float("nan"))
    if not log.iterates:
        return dist
    X_inf = log.iterates[-1][1]
    stored = {k: X for k, X in log.iterates}
    for i, row in enumerate(log.rows):
        X = stored.get(row.iteration)
        if X is not None:
            dist[i] = dist_to_limit(X, X_inf)
    return dist


def cmd_compare(config_paths, out, overrides=None) -> int:
    """Run each config on the shared problem and merge the logs."""
    if not config_paths:
        raise ConfigError("compare needs at least one config file")
    os.makedirs(out, exist_ok=True)
    digest = None
    curves = {}
    rows = []
    for path in config_paths:
        cfg = build_config(path, overrides)
        label = os.path.splitext(os.path.basename(path))[0]
        if cfg.problem is None:
            raise ConfigError(f"{path}: compare configs must name a problem")
        d = problem_digest(cfg.problem)
        if digest is None:
            digest = d
        elif d != digest:
            raise ProblemMismatch(f"{path} runs on a different problem")
        cfg.out = os.path.join(out, label)
        _, X, log, elapsed = _run_reconstruction(cfg)
        _write_run_outputs(cfg, X, log, elapsed)
        dist = _dist_column(log)
        iters = log.column("iteration")
        curves[label] = {
            "iter": iters,
            "dist": dist,
            "nrmse": log.column("nrmse"),
            "cost": log.column("cost"),
        }
        for i in range(len(iters)):
            rows.append(
                (
                    label,
                    int(iters[i]),
                    curves[label]["cost"][i],
                    curves[label]["nrmse"][i],
                    dist[i],
                )
            )
    csv_path = os.path.join(out, "compare.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMPARE_HEADER)
        writer.writerows(rows)
    plots.compare_figures(
        curves,
        os.path.join(out, "dist.png"),
        os.path.join(out, "nrmse.png"),
    )
    print(f"compared {len(config_paths)} runs -> {csv_path}")
    return 0


def cmd_metrics(problem_path, recon_path) -> int:
    problem = load_problem(problem_path)
    if problem.truth is None:
        raise ZeroReference("problem archive has no ground truth")
    xhat_file = (
        os.path.join(recon_path, "xhat") if os.path.isdir(recon_path) else recon_path
    )
    X = read_complex_array(xhat_file)[:, :, 0]
    err = nrmse(X, problem.truth)
    print(f"nrmse = {err:.6f}")
    return 0
