"""Experiment orchestration: configs, sweeps, and artifact persistence.

A sweep trains one independent policy per target control value, evaluates
it with a deterministic rollout, and writes a summary CSV plus per-target
trajectory/curve/checkpoint files.  Per-target seeds derive from the
master seed by a fixed hash rule, so rows do not depend on execution
order or on how many workers ran the sweep.
"""

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import oracle
from .dynamics import write_trajectory_csv
from .policy import (PolicyConfig, TwoLevelEnv, train, rollout,
                     save_checkpoint, evaluation_trajectory)


def child_seed(master_seed, target_index):
    """Stable per-target seed: first 8 bytes of sha256("master:index")."""
    digest = hashlib.sha256(f"{master_seed}:{target_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RunConfig:
    """Flat description of a training run or sweep, JSON-loadable."""
    mode: str = "classical"
    beta: float = 1.0
    tau: float = 1.0
    N: int = 10
    lambda_i: float = 0.0
    lambda_f: list = field(default_factory=lambda: [0.5])
    epsilon_i: float = 0.0
    epsilon_f: float = 0.0
    episodes: int = 1000
    alpha: float = 1e-5
    alpha_w: float = 1e-4
    zeta: float = 0.9
    C: float = 10.0
    action_cov: float = 0.01
    substeps: int = 100
    seed: int = 0
    out_dir: str = "out"
    include_time: bool = True
    baseline_rule: str = "tracking"
    workers: int = 1

    def __post_init__(self):
        if self.mode not in ("classical", "quantum"):
            raise ValueError("mode must be 'classical' or 'quantum'")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if isinstance(self.lambda_f, (int, float)):
            self.lambda_f = [float(self.lambda_f)]
        if not self.lambda_f:
            raise ValueError("lambda_f sweep list must be non-empty")
        if self.lambda_i < 0 or any(lf < 0 for lf in self.lambda_f):
            raise ValueError("lam endpoints must be nonnegative")

    @staticmethod
    def from_json(path):
        with open(path) as fh:
            raw = json.load(fh)
        known = {f for f in RunConfig.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**raw)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2)
            fh.write("\n")

    def policy_config(self, seed):
        return PolicyConfig(episodes=self.episodes, alpha=self.alpha,
                            alpha_w=self.alpha_w, zeta=self.zeta, C=self.C,
                            action_cov=self.action_cov, N=self.N, tau=self.tau,
                            seed=seed, include_time=self.include_time,
                            baseline_rule=self.baseline_rule)

    def env_for(self, lambda_f, seed):
        return TwoLevelEnv(mode=self.mode, lambda_i=self.lambda_i,
                           lambda_f=lambda_f, epsilon_i=self.epsilon_i,
                           epsilon_f=self.epsilon_f, beta=self.beta,
                           substeps=self.substeps,
                           config=self.policy_config(seed))


@dataclass
class SweepRow:
    """One sweep entry: deterministic-policy evaluation of a trained run."""
    lambda_f: float
    delta_d: float
    sigma_min: float
    oracle_sigma: float = None   # classical targets only; None if unreachable
    converged: bool = False


def _fmt(x):
    return format(float(x), ".17g")


def write_curve_csv(curve, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "total_reward", "delta_d", "sigma"])
        for i, (reward, delta_d, sigma) in enumerate(curve):
            writer.writerow([i, _fmt(reward), _fmt(delta_d), _fmt(sigma)])


def read_curve_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return np.asarray(rows)


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda_f", "delta_d", "sigma_min", "oracle_sigma",
                         "converged"])
        for row in rows:
            writer.writerow([
                _fmt(row.lambda_f), _fmt(row.delta_d), _fmt(row.sigma_min),
                "" if row.oracle_sigma is None else _fmt(row.oracle_sigma),
                int(row.converged)])


def _curve_converged(curve):
    """Trailing window of the reward curve at least as good as the head."""
    if len(curve) == 0:
        return False
    window = max(1, len(curve) // 20)
    head = float(np.mean(curve[:window, 0]))
    tail = float(np.mean(curve[-window:, 0]))
    return tail >= head


def run_target(config, target_index, deterministic_eval=True):
    """Train one sweep target and write its artifacts.

    Returns the SweepRow.  Output files are suffixed with the target's
    lambda_f so concurrent targets never collide.
    """
    lambda_f = float(config.lambda_f[target_index])
    seed = child_seed(config.seed, target_index)
    env = config.env_for(lambda_f, seed)
    rng = np.random.default_rng(seed)
    result = train(env.config, env, rng=rng)

    tag = f"lf{lambda_f:g}"
    os.makedirs(config.out_dir, exist_ok=True)
    write_curve_csv(result.curve, os.path.join(config.out_dir, f"curve_{tag}.csv"))
    save_checkpoint(os.path.join(config.out_dir, f"checkpoint_{tag}.npz"),
                    result, env, rng)

    traj, trace = evaluation_trajectory(result.theta, env)
    if not deterministic_eval:
        trace = rollout(result.theta, env, np.random.default_rng(seed + 1))
        traj = None
    if traj is not None:
        write_trajectory_csv(traj, os.path.join(config.out_dir, f"traj_{tag}.csv"))

    oracle_sigma = None
    if config.mode == "classical":
        try:
            solution = oracle.optimal_protocol_for_target(
                config.lambda_i, lambda_f, config.tau,
                env.ctx, samples=2001)
            oracle_sigma = solution.sigma_min
            bound = oracle.reachability(
                oracle.equilibrium_population(config.lambda_i, env.ctx),
                config.tau, env.ctx)
            oracle.write_oracle_csv(
                solution, os.path.join(config.out_dir, f"oracle_{tag}.csv"))
            oracle.write_oracle_metadata(
                solution, bound,
                os.path.join(config.out_dir, f"oracle_{tag}_meta.txt"))
        except oracle.UnreachableTargetError:
            oracle_sigma = None

    return SweepRow(lambda_f=lambda_f, delta_d=trace.delta_d,
                    sigma_min=trace.sigma_total, oracle_sigma=oracle_sigma,
                    converged=_curve_converged(result.curve))


def _failure_row(config, index):
    return SweepRow(lambda_f=float(config.lambda_f[index]),
                    delta_d=float("nan"), sigma_min=float("nan"),
                    oracle_sigma=None, converged=False)


def run_sweep(config):
    """Train every lambda_f target (optionally in parallel) and write the
    sweep summary CSV.  Per-target failures are recorded, not fatal."""
    indices = list(range(len(config.lambda_f)))
    rows = [None] * len(indices)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = {i: pool.submit(run_target, config, i) for i in indices}
            for i, future in futures.items():
                try:
                    rows[i] = future.result()
                except Exception:
                    rows[i] = _failure_row(config, i)
    else:
        for i in indices:
            try:
                rows[i] = run_target(config, i)
            except Exception:
                rows[i] = _failure_row(config, i)
    write_sweep_csv(rows, os.path.join(config.out_dir, "sweep.csv"))
    return rows
