"""Command-line interface for deriving, training, and benchmarking."""

import argparse
import os
import sys

import numpy as np

from .dynamics import Trajectory, load_trajectory_csv, save_trajectory_csv, sample_initial, simulate
from .edmd import batch_edmd_from_psi, online_init, online_update_many
from .experiments import (
    METHODS,
    derive_seed,
    derive_seed_model,
    derived_seed,
    generate_data,
    load_config,
    override_config,
    run_nstep_experiment,
    run_onestep_experiment,
    run_spectrum_export,
)
from .model import KoopmanModel, save_matrix_csv
from .plots import save_error_curves_svg, save_spectrum_svg


def _load_spectrum_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0] + 1j * data[:, 1]


def _plot_spectra(out_dir, name):
    spectra = {
        method: _load_spectrum_csv(os.path.join(out_dir, f"spectrum_seed0_{method}.csv"))
        for method in METHODS
    }
    save_spectrum_svg(
        os.path.join(out_dir, "spectrum.svg"), spectra, f"{name}: eigenvalue spectra (seed 0)"
    )


def _add_common(parser):
    parser.add_argument("--config", required=True, help="config file path or bundled preset name")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--degree", type=int, default=None, help="override dictionary degree")
    parser.add_argument("--sigma", type=float, default=None, help="override online regularization sigma")


def _add_experiment_flags(parser):
    parser.add_argument("--seeds", type=int, default=None, help="number of RNG repetitions")
    parser.add_argument("--checkpoint-stride", type=int, default=None)
    parser.add_argument("--max-pairs", type=int, default=None)
    parser.add_argument("--no-raw", action="store_true", help="skip raw per-point error CSVs")
    parser.add_argument("--plot", action="store_true", help="also emit SVG plots")


def _load(args):
    config = load_config(args.config)
    return override_config(
        config,
        degree=getattr(args, "degree", None),
        sigma=getattr(args, "sigma", None),
        seeds=getattr(args, "seeds", None),
        checkpoint_stride=getattr(args, "checkpoint_stride", None),
        max_pairs=getattr(args, "max_pairs", None),
    )


def _cmd_derive(args):
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "seed_matrix.csv")
    seed = derive_seed(config, path)
    print(f"wrote {path} ({seed.matrix.shape[0]}x{seed.matrix.shape[1]})")


def _cmd_simulate(args):
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    s = args.seed_index
    x0 = sample_initial(config.init_ranges, derived_seed(config.root_seed, "train-init", s))
    traj = simulate(config.system, x0, config.train_steps, config.dt)
    states = traj.states[config.train_burn_in :]
    path = os.path.join(args.out, f"train_seed{s}.csv")
    save_trajectory_csv(path, Trajectory(states, config.dt, seed=s), config.system.layout)
    print(f"wrote {path} ({states.shape[0]} states)")
    if args.tests:
        data = generate_data(config, s)
        for t in range(min(args.tests, config.test_count)):
            tp = os.path.join(args.out, f"test_seed{s}_{t:03d}.csv")
            save_trajectory_csv(
                tp, Trajectory(data.test_states[t], config.dt, seed=s), config.system.layout
            )
        print(f"wrote {min(args.tests, config.test_count)} test trajectories")


def _train_pairs_from_csv(config, path, pairs):
    traj = load_trajectory_csv(path)
    dictionary = config.dictionary()
    psi = dictionary.evaluate(traj.states)
    available = psi.shape[0] - 1
    m = available if pairs is None else pairs
    if not 1 <= m <= available:
        raise SystemExit(f"--pairs must lie in [1, {available}]")
    return dictionary, psi[:m], psi[1 : m + 1], m


def _cmd_train_online(args):
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    dictionary, psi_x, psi_y, m = _train_pairs_from_csv(config, args.traj, args.pairs)
    state = online_init(derive_seed_model(config), config.sigma)
    state = online_update_many(state, psi_x, psi_y)
    path = os.path.join(args.out, f"koopman_online_m{m}.csv")
    save_matrix_csv(
        path,
        KoopmanModel(dictionary, state.matrix),
        extra_meta={"name": config.name, "method": "proposed", "pairs": m, "sigma": config.sigma},
    )
    print(f"wrote {path}")


def _cmd_train_batch(args):
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    dictionary, psi_x, psi_y, m = _train_pairs_from_csv(config, args.traj, args.pairs)
    model = batch_edmd_from_psi(dictionary, psi_x, psi_y)
    path = os.path.join(args.out, f"koopman_edmd_m{m}.csv")
    save_matrix_csv(
        path, model, extra_meta={"name": config.name, "method": "edmd", "pairs": m}
    )
    print(f"wrote {path}")


def _print_summary(summary, label):
    print(f"{label}: checkpoint_or_n  " + "  ".join(f"{m}(mean/std)" for m in METHODS))
    for key in summary.keys():
        cells = []
        for method in METHODS:
            row = summary.get(key, method)
            cells.append(f"{row.mean:.6g}/{row.std:.6g}")
        print(f"{label}: {key:>6}  " + "  ".join(cells))


def _cmd_eval_onestep(args):
    config = _load(args)
    summary = run_onestep_experiment(config, out_dir=args.out, write_raw=not args.no_raw)
    _print_summary(summary, "onestep")
    if args.plot:
        save_error_curves_svg(
            os.path.join(args.out, "onestep_summary.svg"),
            summary,
            f"{config.name}: one-step error vs training pairs",
            "training pairs",
        )


def _cmd_eval_nstep(args):
    config = _load(args)
    if args.pairs is not None:
        config = override_config(config, nstep_train_pairs=args.pairs)
    if args.horizon is not None:
        config = override_config(config, nstep_horizon=args.horizon)
    summary = run_nstep_experiment(config, out_dir=args.out, write_raw=not args.no_raw)
    _print_summary(summary, "nstep")
    if args.plot:
        save_error_curves_svg(
            os.path.join(args.out, "nstep_summary.svg"),
            summary,
            f"{config.name}: forecast error vs horizon ({config.nstep_train_pairs} pairs)",
            "forecast horizon n",
        )


def _cmd_spectrum(args):
    config = _load(args)
    result = run_spectrum_export(
        config, pair_count=args.pairs, out_dir=args.out, threshold=args.threshold
    )
    for method in METHODS:
        print(
            f"spectrum: {method} mean count(|mu|>{result['threshold']}) = "
            f"{result['mean_counts'][method]:.6g} at {result['pairs']} pairs"
        )
    if args.plot:
        _plot_spectra(args.out, config.name)


def _cmd_reproduce(args):
    args.config = args.preset
    config = _load(args)
    os.makedirs(args.out, exist_ok=True)
    derive_seed(config, os.path.join(args.out, "seed_matrix.csv"))
    print(f"reproduce {config.name}: seed matrix written")
    onestep = run_onestep_experiment(config, out_dir=args.out, write_raw=not args.no_raw)
    _print_summary(onestep, "onestep")
    nstep = run_nstep_experiment(config, out_dir=args.out, write_raw=not args.no_raw)
    _print_summary(nstep, "nstep")
    result = run_spectrum_export(config, out_dir=args.out)
    for method in METHODS:
        print(
            f"spectrum: {method} mean count(|mu|>{result['threshold']}) = "
            f"{result['mean_counts'][method]:.6g} at {result['pairs']} pairs"
        )
    print(f"reproduce {config.name}: outputs in {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopseed",
        description="Koopman matrices for coupled systems: ODE-derived seeds refined online, benchmarked against batch EDMD.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="write the ODE-derived global seed matrix")
    _add_common(p)
    p.set_defaults(func=_cmd_derive)

    p = sub.add_parser("simulate", help="write training (and optionally test) trajectory CSVs")
    _add_common(p)
    p.add_argument("--seed-index", type=int, default=0)
    p.add_argument("--tests", type=int, default=0, help="also write this many test trajectories")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("train-online", help="online-refine the seed on a trajectory CSV")
    _add_common(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--pairs", type=int, default=None)
    p.set_defaults(func=_cmd_train_online)

    p = sub.add_parser("train-batch", help="batch EDMD on a trajectory CSV")
    _add_common(p)
    p.add_argument("--traj", required=True)
    p.add_argument("--pairs", type=int, default=None)
    p.set_defaults(func=_cmd_train_batch)

    p = sub.add_parser("eval-onestep", help="one-step error vs training size, both methods")
    _add_common(p)
    _add_experiment_flags(p)
    p.set_defaults(func=_cmd_eval_onestep)

    p = sub.add_parser("eval-nstep", help="n-step forecast error, both methods")
    _add_common(p)
    _add_experiment_flags(p)
    p.add_argument("--pairs", type=int, default=None, help="training pairs for both methods")
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=_cmd_eval_nstep)

    p = sub.add_parser("spectrum", help="export eigenvalue spectra of both methods")
    _add_common(p)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--pairs", type=int, default=None)
    p.add_argument("--threshold", type=float, default=0.99)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("reproduce", help="full benchmark for a bundled preset")
    p.add_argument("preset", choices=["duffing", "vdp"])
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--checkpoint-stride", type=int, default=None)
    p.add_argument("--max-pairs", type=int, default=None)
    p.add_argument("--no-raw", action="store_true")
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(over="ignore", invalid="ignore")  # forecast blow-ups are data, not crashes
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
