"""Configuration-driven experiment runner.

Each command reads one JSON config, runs one experiment, and writes its
columnar outputs plus a provenance record (config copy, package versions,
wall time, seed ledger) into the output directory.

Exit codes: 0 success, 2 config/validation failure, 3 numerical failure,
4 censored or partial results.
"""

import argparse
import datetime
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ExperimentConfig
from .errors import ConfigError, PulselabError
from .fokker_planck import (generator_gap, generator_matrix, lyapunov_analytic,
                            stationary_density)
from .io import (load_pulse, save_comparison, save_density, save_pulse,
                 save_spectrum, save_trajectory, save_two_pulse,
                 write_columns)
from .kernels import BACKEND
from .presets import pulse_guess
from .pulse import find_pulse
from .reduction import (ReducedModel, build_reduced_model, fourier_pairings,
                        nondegeneracy_check)
from .sde import (NoisePath, TorusEnsemble, controlled_squeeze, default_dt,
                  simulate, sync_scaling_scan, tangent_lyapunov_mc)
from .spde import reduced_vs_full, two_pulse_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CENSORED = 4


def _get_pulse(cfg):
    if cfg.pulse_file:
        return load_pulse(cfg.pulse_file)
    model = cfg.make_model()
    grid = cfg.make_grid()
    guess = pulse_guess(grid, model,
                        duration=cfg.solver["relax_duration"],
                        dt=cfg.solver["dt_pde"])
    return find_pulse(model, guess, cfg.solver["guess_speed"],
                      tol=cfg.solver["tol_bvp"], tol_eig=cfg.solver["tol_eig"])


def _get_reduced(cfg, pulse=None):
    if cfg.reduced_model:
        return ReducedModel.load(cfg.reduced_model)
    if pulse is None:
        pulse = _get_pulse(cfg)
    model = cfg.make_model()
    noise = cfg.make_noise()
    report = nondegeneracy_check(noise, fourier_pairings(pulse, model, noise.K))
    if not report.passed:
        raise ConfigError("noise", "; ".join(report.reasons))
    return build_reduced_model(
        pulse, model, noise,
        eps=cfg.solver["eps_fd"],
        t_relax=cfg.solver["t_relax"],
        dt=cfg.solver["dt_pde"],
    )


def _run_dt(cfg, reduced, sigma):
    dt = cfg.run["dt"]
    if dt is None:
        return default_dt(reduced, sigma)
    return float(dt)


def cmd_pulse(cfg, outdir):
    pulse = _get_pulse(cfg)
    save_pulse(outdir / "pulse.txt", pulse)
    save_spectrum(outdir / "spectrum.txt", pulse.eigenvalues)
    return {
        "speed": pulse.speed,
        "a_gap": pulse.a_gap,
        "residual_bvp": pulse.residual_bvp,
        "residual_adj": pulse.residual_adj,
        "zero_mode_cosine": pulse.zero_mode_cosine,
    }, EXIT_OK, []


def cmd_coeffs(cfg, outdir):
    pulse = _get_pulse(cfg)
    save_pulse(outdir / "pulse.txt", pulse)
    model = cfg.make_model()
    noise = cfg.make_noise()
    pairings = fourier_pairings(pulse, model, noise.K)
    report = nondegeneracy_check(noise, pairings)
    if not report.passed:
        raise ConfigError("noise", "; ".join(report.reasons))
    reduced = build_reduced_model(
        pulse, model, noise,
        eps=cfg.solver["eps_fd"],
        t_relax=cfg.solver["t_relax"],
        dt=cfg.solver["dt_pde"],
    )
    reduced.dump(outdir / "reduced_model.json")
    return {
        "speed": reduced.speed,
        "K": noise.K,
        "c1_sq_sum": report.c1_sq_sum,
        "a_mean": reduced.a.mean,
        "a_order": reduced.a.order,
    }, EXIT_OK, []


def cmd_reduced_sim(cfg, outdir):
    reduced = _get_reduced(cfg)
    sigma = float(cfg.noise["sigma"])
    dt = _run_dt(cfg, reduced, sigma)
    horizon = float(cfg.run["horizon"])
    reps = int(cfg.run["reps"])
    seed = int(cfg.run["seed"])
    positions = (np.arange(reps) / reps) if reps > 1 else np.array(
        [float(cfg.run["x0"])])
    path = NoisePath(seed=seed, dt=dt, horizon=horizon,
                     K=reduced.noise.K)
    nsteps = int(round(horizon / dt))
    stride = cfg.run["record_stride"] or max(1, nsteps // 1000)
    rec = simulate(reduced, sigma, TorusEnsemble(positions), path, horizon,
                   record_stride=int(stride), backend=cfg.run["backend"])
    save_trajectory(outdir / "trajectory.txt", rec,
                    header={"sigma": sigma, "dt": dt, "seed": seed})
    return {
        "sigma": sigma,
        "dt": dt,
        "nsteps": nsteps,
        "ensemble": int(positions.size),
    }, EXIT_OK, [seed]


def cmd_lyapunov(cfg, outdir):
    reduced = _get_reduced(cfg)
    sigma = float(cfg.noise["sigma"])
    dt = _run_dt(cfg, reduced, sigma)
    horizon = float(cfg.run["horizon"])
    burn_in = cfg.run["burn_in"]
    if burn_in is None:
        burn_in = 0.1 * horizon
    seed = int(cfg.run["seed"])
    density = stationary_density(reduced, sigma, n_fp=int(cfg.run["n_fp"]))
    lam_a, lam_b = lyapunov_analytic(reduced, sigma, density)
    gap = generator_gap(reduced, sigma, n_fp=int(cfg.run["n_fp"]))
    path = NoisePath(seed=seed, dt=dt, horizon=horizon, K=reduced.noise.K)
    lam_mc, stderr = tangent_lyapunov_mc(
        reduced, sigma, float(cfg.run["x0"]), path, horizon, burn_in,
        backend=cfg.run["backend"])
    save_density(outdir / "density.txt", density)
    summary = {
        "sigma": sigma,
        "lambda_A": lam_a,
        "lambda_B": lam_b,
        "lambda_mc": lam_mc,
        "lambda_mc_stderr": stderr,
        "generator_gap": gap,
        "fp_residual": density.residual,
        "mc_horizon": horizon,
        "mc_burn_in": burn_in,
    }
    with open(outdir / "lyapunov.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary, EXIT_OK, [seed]


def cmd_density(cfg, outdir):
    reduced = _get_reduced(cfg)
    sigma = float(cfg.noise["sigma"])
    n_fp = int(cfg.run["n_fp"])
    density = stationary_density(reduced, sigma, n_fp=n_fp)
    save_density(outdir / "density.txt", density)
    ev = np.linalg.eigvals(generator_matrix(reduced, sigma, n_fp))
    save_spectrum(outdir / "generator_spectrum.txt", ev)
    gap = generator_gap(reduced, sigma, n_fp=n_fp)
    return {
        "sigma": sigma,
        "residual": density.residual,
        "mass": density.mass(),
        "p_min": float(density.p.min()),
        "generator_gap": gap,
    }, EXIT_OK, []


def cmd_sync_scan(cfg, outdir):
    reduced = _get_reduced(cfg)
    result = sync_scaling_scan(
        reduced,
        cfg.sigma_list(),
        reps=int(cfg.run["reps"]),
        threshold=float(cfg.run["threshold"]),
        base_seed=int(cfg.run["seed"]),
        x0=float(cfg.run["x0"]),
        y0=float(cfg.run["y0"]),
        horizon_factor=float(cfg.run["horizon_factor"]),
        backend=cfg.run["backend"],
    )
    rows = result.rows
    reps = int(cfg.run["reps"])
    write_columns(
        outdir / "sync_scan.txt",
        {"reps": reps, "threshold": float(cfg.run["threshold"])},
        ["sigma", "median_time", "censored", "unreliable"],
        [[r.sigma for r in rows], [r.median for r in rows],
         [float(r.censored) for r in rows],
         [float(r.unreliable) for r in rows]],
    )
    any_unreliable = any(r.unreliable for r in rows)
    summary = {
        "slope": result.slope,
        "intercept": result.intercept,
        "rows": [
            {"sigma": r.sigma, "median_time": r.median,
             "censored": int(r.censored), "unreliable": bool(r.unreliable)}
            for r in rows
        ],
        "unreliable": any_unreliable,
    }
    with open(outdir / "sync_scan.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    base_seed = int(cfg.run["seed"])
    seeds = [base_seed + 100003 * i for i in range(len(rows))]
    code = EXIT_CENSORED if any_unreliable else EXIT_OK
    return summary, code, seeds


def cmd_spde_two_pulse(cfg, outdir):
    pulse = _get_pulse(cfg)
    model = cfg.make_model()
    noise = cfg.make_noise()
    sigma = float(cfg.noise["sigma"])
    reps = int(cfg.run["reps"])
    base_seed = int(cfg.run["seed"])
    horizon = float(cfg.run["horizon"])
    dt = cfg.run["dt"] or 0.02
    stride = cfg.run["checkpoint_stride"]
    seeds = [base_seed + i for i in range(reps)]
    censored = 0
    t_hits, tube_maxima, disc_factors, d_end = [], [], [], []
    for seed in seeds:
        rep = two_pulse_experiment(
            float(cfg.run["x0"]), float(cfg.run["y0"]), model, noise, sigma,
            horizon, seed, pulse, dt=float(dt),
            checkpoint_stride=None if stride is None else int(stride))
        save_two_pulse(outdir / f"two_pulse_seed{seed}.txt", rep)
        if rep.censored:
            censored += 1
            continue
        d = rep.phase_distance
        hit = np.nonzero(d < 0.05)[0]
        t_hits.append(float(rep.times[hit[0]]) if hit.size else np.inf)
        tube_maxima.append(float(max(rep.run_u.tube.max(),
                                     rep.run_v.tube.max())))
        disc_factors.append(float(rep.discrepancy[0] /
                                  max(rep.discrepancy.min(), 1e-300)))
        d_end.append(float(d[-1]))
    summary = {
        "sigma": sigma,
        "reps": reps,
        "censored": censored,
        "median_first_passage_0.05": float(np.median(t_hits)) if t_hits else None,
        "median_tube_max": float(np.median(tube_maxima)) if tube_maxima else None,
        "median_discrepancy_factor": float(np.median(disc_factors)) if disc_factors else None,
        "median_final_distance": float(np.median(d_end)) if d_end else None,
    }
    with open(outdir / "two_pulse.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    code = EXIT_CENSORED if censored else EXIT_OK
    return summary, code, seeds


def cmd_reduced_vs_full(cfg, outdir):
    pulse = _get_pulse(cfg)
    reduced = _get_reduced(cfg, pulse=pulse)
    model = cfg.make_model()
    noise = cfg.make_noise()
    sigma = float(cfg.noise["sigma"])
    reps = int(cfg.run["reps"])
    base_seed = int(cfg.run["seed"])
    horizon = float(cfg.run["horizon"])
    dt = cfg.run["dt"] or 0.02
    stride = cfg.run["checkpoint_stride"]
    seeds = [base_seed + i for i in range(reps)]
    censored = 0
    errs, exits = [], []
    for seed in seeds:
        rec = reduced_vs_full(
            float(cfg.run["x0"]), model, noise, sigma, horizon, seed, pulse,
            reduced, dt=float(dt),
            checkpoint_stride=None if stride is None else int(stride),
            tube_mult=float(cfg.run["tube_mult"]),
            backend=cfg.run["backend"])
        save_comparison(outdir / f"comparison_seed{seed}.txt", rec)
        if rec.censored:
            censored += 1
            continue
        errs.append(rec.max_phase_error)
        exits.append(rec.first_tube_exit)
    summary = {
        "sigma": sigma,
        "reps": reps,
        "censored": censored,
        "median_max_phase_error": float(np.median(errs)) if errs else None,
        "tube_exit_fraction": (float(np.mean(np.isfinite(exits)))
                               if exits else None),
    }
    with open(outdir / "comparison.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    code = EXIT_CENSORED if censored else EXIT_OK
    return summary, code, seeds


def cmd_squeeze_demo(cfg, outdir):
    reduced = _get_reduced(cfg)
    sigma = float(cfg.noise["sigma"])
    rec = controlled_squeeze(reduced, sigma, gain=float(cfg.run["gain"]))
    names = ["t"] + [f"x{i + 1}" for i in range(rec.trajectories.shape[1])]
    cols = [rec.times] + [rec.trajectories[:, i]
                          for i in range(rec.trajectories.shape[1])]
    write_columns(outdir / "squeeze.txt", {"gain": rec.gain}, names, cols)
    summary = {
        "gain": rec.gain,
        "inequalities": {k: bool(ok) for k, (ok, _) in
                         rec.inequalities.items()},
        "reversal_error": rec.reversal_error,
    }
    with open(outdir / "squeeze.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    ok = all(ok for ok, _ in rec.inequalities.values())
    return summary, (EXIT_OK if ok else EXIT_NUMERICAL), []


COMMANDS = {
    "pulse": cmd_pulse,
    "coeffs": cmd_coeffs,
    "reduced-sim": cmd_reduced_sim,
    "lyapunov": cmd_lyapunov,
    "density": cmd_density,
    "sync-scan": cmd_sync_scan,
    "spde-two-pulse": cmd_spde_two_pulse,
    "reduced-vs-full": cmd_reduced_vs_full,
    "squeeze-demo": cmd_squeeze_demo,
}


def _write_provenance(outdir, command, cfg, wall_time, seeds, summary, status):
    doc = {
        "command": command,
        "status": status,
        "config": cfg.to_dict(),
        "versions": {
            "pulselab": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "backend": BACKEND,
        "wall_time_s": wall_time,
        "seeds": seeds,
        "summary": summary,
        "finished_utc": datetime.datetime.now(
            datetime.timezone.utc).isoformat(),
    }
    with open(outdir / "provenance.json", "w") as fh:
        json.dump(doc, fh, indent=2)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pulselab",
        description="Stochastic traveling-pulse simulation laboratory.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="path to the JSON experiment config")
    parser.add_argument("--output-dir", default=None,
                        help="override the config's output directory")
    args = parser.parse_args(argv)

    try:
        cfg = ExperimentConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output_dir:
        cfg.output_dir = args.output_dir
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    start = time.time()
    try:
        summary, code, seeds = COMMANDS[args.command](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _write_provenance(outdir, args.command, cfg, time.time() - start,
                          [], {"error": str(exc)}, "validation-failure")
        return EXIT_CONFIG
    except PulselabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        (outdir / "FAILED").write_text(str(exc) + "\n")
        _write_provenance(outdir, args.command, cfg, time.time() - start,
                          [], {"error": str(exc)}, "numerical-failure")
        return EXIT_NUMERICAL
    status = {EXIT_OK: "ok", EXIT_CENSORED: "censored",
              EXIT_NUMERICAL: "numerical-failure"}[code]
    _write_provenance(outdir, args.command, cfg, time.time() - start,
                      seeds, summary, status)
    for key, value in summary.items():
        if not isinstance(value, (dict, list)):
            print(f"{key} = {value}")
    return code


if __name__ == "__main__":
    sys.exit(main())
