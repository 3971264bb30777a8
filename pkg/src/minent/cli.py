"""Command-line entry points.

Subcommands: bound, oracle, train, sweep, evolve.  Exit codes: 0 success,
2 usage error, 3 unreachable target, 4 numerical failure.
"""

import argparse
import os
import sys

import numpy as np

from . import harness, oracle
from .dynamics import (ControlParams, ThermalContext, IntegrationError,
                       evolve_protocol, gibbs_state, gibbs_classical,
                       read_protocol_csv, write_trajectory_csv,
                       equilibrium_population)
from .policy import TrainingDiverged

EXIT_USAGE = 2
EXIT_UNREACHABLE = 3
EXIT_NUMERICAL = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="minent",
        description="Minimum-entropy-production protocols for a driven "
                    "two-level system in a thermal bath.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bound = sub.add_parser(
        "bound", help="reachability frontier for the classical problem")
    group = p_bound.add_mutually_exclusive_group()
    group.add_argument("--p-i", type=float, default=None,
                       help="initial equilibrium population (default 0.5)")
    group.add_argument("--lambda-i", type=float, default=None,
                       help="initial control value (alternative to --p-i)")
    p_bound.add_argument("--tau", type=float, default=1.0)
    p_bound.add_argument("--beta", type=float, default=1.0)

    p_oracle = sub.add_parser(
        "oracle", help="exact optimal protocol between two equilibria")
    p_oracle.add_argument("--p-i", type=float, default=0.5)
    p_oracle.add_argument("--lambda-f", type=float, required=True)
    p_oracle.add_argument("--tau", type=float, default=1.0)
    p_oracle.add_argument("--beta", type=float, default=1.0)
    p_oracle.add_argument("--samples", type=int, default=1000)
    p_oracle.add_argument("--out", default="out")

    p_train = sub.add_parser("train", help="train one policy from a config")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default=None, help="override out_dir")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--deterministic", action="store_true",
                         help="evaluate with the mean action (default)")
    p_train.add_argument("--resume", default=None,
                         help="checkpoint to continue from")

    p_sweep = sub.add_parser("sweep", help="train every lambda_f target")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--deterministic", action="store_true")

    p_evolve = sub.add_parser(
        "evolve", help="replay a stored protocol through the dynamics")
    p_evolve.add_argument("--protocol", required=True,
                          help="trajectory CSV holding epsilon/lam columns")
    p_evolve.add_argument("--mode", choices=("classical", "quantum"),
                          default="classical")
    p_evolve.add_argument("--lambda-i", type=float, default=0.0)
    p_evolve.add_argument("--epsilon-i", type=float, default=0.0)
    p_evolve.add_argument("--tau", type=float, default=1.0)
    p_evolve.add_argument("--beta", type=float, default=1.0)
    p_evolve.add_argument("--substeps", type=int, default=100)
    p_evolve.add_argument("--out", default="replay.csv")
    return parser


def _cmd_bound(args):
    if args.tau <= 0:
        raise ValueError("tau must be positive")
    ctx = ThermalContext(args.beta)
    if args.p_i is not None:
        p_i = args.p_i
    elif args.lambda_i is not None:
        p_i = equilibrium_population(args.lambda_i, ctx)
    else:
        p_i = 0.5
    bound = oracle.reachability(p_i, args.tau, ctx)
    print(f"p_f_max={bound.p_f_max:.17g}")
    print(f"lambda_f_max={bound.lambda_f_max:.17g}")
    return 0


def _cmd_oracle(args):
    ctx = ThermalContext(args.beta)
    if args.lambda_f < 0:
        raise ValueError("lambda_f must be nonnegative")
    p_f = equilibrium_population(args.lambda_f, ctx)
    solution = oracle.optimal_protocol(args.p_i, p_f, args.tau, ctx,
                                       args.samples)
    bound = oracle.reachability(args.p_i, args.tau, ctx)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "oracle.csv")
    meta_path = os.path.join(args.out, "oracle_meta.txt")
    oracle.write_oracle_csv(solution, csv_path)
    oracle.write_oracle_metadata(
        solution, bound, meta_path,
        extra={"p_i": args.p_i, "p_f": p_f, "tau": args.tau,
               "beta": args.beta, "samples": args.samples})
    print(f"k={solution.k:.17g}")
    print(f"sigma_min={solution.sigma_min:.17g}")
    print(f"wrote {csv_path} and {meta_path}")
    return 0


def _apply_overrides(config, args):
    if args.out is not None:
        config.out_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    if getattr(args, "workers", None) is not None:
        config.workers = args.workers
    return config


def _resume_training(config, checkpoint_path):
    from .policy import load_checkpoint, save_checkpoint, train

    theta, adam, baseline, done, _, rng_state = load_checkpoint(checkpoint_path)
    env = config.env_for(config.lambda_f[0], harness.child_seed(config.seed, 0))
    rng = np.random.default_rng(config.seed)
    if rng_state is not None:
        rng.bit_generator.state = rng_state
    result = train(env.config, env, theta=theta, adam=adam,
                   baseline=baseline, rng=rng)
    result.episodes_run += done
    os.makedirs(config.out_dir, exist_ok=True)
    harness.write_curve_csv(
        result.curve, os.path.join(config.out_dir, "curve_resumed.csv"))
    save_checkpoint(os.path.join(config.out_dir, "checkpoint_resumed.npz"),
                    result, env, rng)
    print(f"resumed for {config.episodes} episodes "
          f"({result.episodes_run} total)")


def _cmd_train(args):
    config = _apply_overrides(harness.RunConfig.from_json(args.config), args)
    if len(config.lambda_f) != 1:
        raise ValueError("train expects a single lambda_f; use sweep for lists")
    if args.resume is not None:
        _resume_training(config, args.resume)
        return 0
    row = harness.run_target(config, 0)
    print(f"lambda_f={row.lambda_f:g} delta_d={row.delta_d:.6g} "
          f"sigma={row.sigma_min:.6g} converged={row.converged}")
    return 0


def _cmd_sweep(args):
    config = _apply_overrides(harness.RunConfig.from_json(args.config), args)
    rows = harness.run_sweep(config)
    for row in rows:
        print(f"lambda_f={row.lambda_f:g} delta_d={row.delta_d:.6g} "
              f"sigma={row.sigma_min:.6g} converged={row.converged}")
    print(f"wrote {os.path.join(config.out_dir, 'sweep.csv')}")
    return 0


def _cmd_evolve(args):
    if args.tau <= 0 or args.substeps < 1:
        raise ValueError("need tau > 0 and substeps >= 1")
    ctx = ThermalContext(args.beta)
    controls = read_protocol_csv(args.protocol)
    if args.mode == "classical":
        controls = [ControlParams(0.0, max(c.lam, 0.0)) for c in controls]
        initial = gibbs_classical(args.lambda_i, ctx)
    else:
        initial = gibbs_state(ControlParams(args.epsilon_i, args.lambda_i), ctx)
    traj = evolve_protocol(initial, controls, args.tau, ctx, args.substeps)
    write_trajectory_csv(traj, args.out)
    print(f"sigma_total={traj.sigma_total:.17g}")
    print(f"wrote {args.out}")
    return 0


_HANDLERS = {"bound": _cmd_bound, "oracle": _cmd_oracle, "train": _cmd_train,
             "sweep": _cmd_sweep, "evolve": _cmd_evolve}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except oracle.UnreachableTargetError as exc:
        print(f"unreachable target: {exc} "
              f"(p_f_max={exc.bound.p_f_max:.6g}, "
              f"lambda_f_max={exc.bound.lambda_f_max:.6g})", file=sys.stderr)
        return EXIT_UNREACHABLE
    except (IntegrationError, TrainingDiverged) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
