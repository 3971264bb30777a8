"""Plain REINFORCE-with-baseline on the two-level driving problem.

The policy is a diagonal Gaussian whose mean comes from a small MLP
(three ReLU hidden layers, tanh output scaled to +-C); the covariance is
fixed, never learned.  Episodes are rollouts of piecewise-constant
protocols against the exact dynamics; the per-step reward mixes the
entropy increment with a terminal distance-to-target penalty.  Updates
are score-function gradients weighted by baseline-subtracted returns,
applied with a hand-rolled Adam.  Everything is driven by one seeded
numpy Generator, so training runs are bit-reproducible.
"""

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from . import dynamics
from .dynamics import (BlochState, ClassicalState, ControlParams,
                       ThermalContext, classical_interval, quantum_interval,
                       gibbs_state, gibbs_classical, trace_distance,
                       l1_distance)


class TrainingDiverged(RuntimeError):
    """A parameter became non-finite during training."""


@dataclass
class PolicyConfig:
    """Hyperparameters for the Gaussian-policy learner.

    action_cov is the diagonal covariance of the action distribution
    (scalar, shared across components).  zeta mixes the two reward terms:
    (1 - zeta) weighs the entropy increments, zeta the terminal distance.
    baseline_rule selects the scalar-baseline update: "tracking" moves w
    toward the observed return by alpha_w*(G - w); "literal" applies the
    raw increment alpha_w*G.
    """
    episodes: int = 1000
    alpha: float = 1e-5
    alpha_w: float = 1e-4
    zeta: float = 0.9
    C: float = 10.0
    action_cov: float = 0.01
    N: int = 10
    tau: float = 1.0
    seed: int = 0
    hidden: tuple = (100, 100, 100)
    include_time: bool = True
    baseline_rule: str = "tracking"
    update_every_step: bool = False

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise ValueError("zeta must lie in [0, 1]")
        if self.action_cov <= 0 or self.alpha < 0 or self.alpha_w < 0:
            raise ValueError("covariance must be positive, rates nonnegative")
        if self.N < 1 or self.tau <= 0 or self.episodes < 0:
            raise ValueError("need N >= 1, tau > 0, episodes >= 0")
        if self.baseline_rule not in ("tracking", "literal"):
            raise ValueError("baseline_rule must be 'tracking' or 'literal'")
        self.hidden = tuple(int(h) for h in self.hidden)


# ---------------------------------------------------------------------------
# MLP policy mean
# ---------------------------------------------------------------------------

@dataclass
class PolicyParameters:
    """Weights/biases of the mean network plus the output scale C."""
    weights: list
    biases: list
    C: float

    @property
    def in_dim(self):
        return self.weights[0].shape[0]

    @property
    def action_dim(self):
        return self.weights[-1].shape[1]

    def copy(self):
        return PolicyParameters([w.copy() for w in self.weights],
                                [b.copy() for b in self.biases], self.C)

    def flatten(self):
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases)
                               for a in pair])

    def all_finite(self):
        return all(np.all(np.isfinite(w)) for w in self.weights) and \
            all(np.all(np.isfinite(b)) for b in self.biases)


def init_policy(in_dim, action_dim, C, rng, hidden=(100, 100, 100)):
    """He-initialized hidden layers; the output layer starts near zero so
    the initial protocol sits at the passive control."""
    sizes = [in_dim, *hidden, action_dim]
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        scale = np.sqrt(2.0 / sizes[i])
        if i == len(sizes) - 2:
            scale *= 1e-2
        weights.append(rng.standard_normal((sizes[i], sizes[i + 1])) * scale)
        biases.append(np.zeros(sizes[i + 1]))
    return PolicyParameters(weights, biases, float(C))


def _forward_cached(theta, x):
    """Forward pass keeping activations; x may be a vector or a batch."""
    h = np.atleast_2d(np.asarray(x, dtype=float))
    activations = [h]
    last = len(theta.weights) - 1
    for i, (w, b) in enumerate(zip(theta.weights, theta.biases)):
        z = h @ w + b
        h = theta.C * np.tanh(z) if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return h, activations


def policy_mean(theta, s):
    """Deterministic action mean mu_theta(s), each component in [-C, C]."""
    mu, _ = _forward_cached(theta, s)
    return mu[0] if np.ndim(s) == 1 else mu


def _backward(theta, activations, dmu):
    """Backpropagate d(objective)/d(mu) rows to parameter gradients."""
    grads_w = [None] * len(theta.weights)
    grads_b = [None] * len(theta.biases)
    mu = activations[-1]
    # d tanh scaled by C: dz = dmu * C * (1 - tanh^2) = dmu * (C^2 - mu^2)/C
    delta = dmu * (theta.C * theta.C - mu * mu) / theta.C
    for i in range(len(theta.weights) - 1, -1, -1):
        grads_w[i] = activations[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ theta.weights[i].T) * (activations[i] > 0)
    return grads_w, grads_b


def log_policy_gradient(theta, s, a, cov):
    """Gradient of ln pi(a | s, theta) for the fixed-covariance Gaussian.

    The score is Sigma^{-1}(a - mu) pushed back through the mean network;
    it vanishes when a equals the mean.
    """
    mu, activations = _forward_cached(theta, s)
    dmu = (np.atleast_2d(a) - mu) / cov
    return _backward(theta, activations, dmu)


def sample_action(mu, cov, rng, deterministic=False, lam_index=-1):
    """Draw a ~ N(mu, cov*I); the lam component is clamped at zero.

    Deterministic mode returns mu unchanged (the evaluation convention:
    the learned protocol is the mean path, not a stochastic sample).
    """
    mu = np.asarray(mu, dtype=float)
    if deterministic:
        return mu.copy()
    a = mu + np.sqrt(cov) * rng.standard_normal(mu.shape)
    if a[lam_index] < 0.0:
        a[lam_index] = 0.0
    return a


def step_reward(delta_sigma, is_final, delta_d, zeta):
    """r = (1 - zeta)(-delta_sigma) + zeta*(-delta_d) on the final step only."""
    reward = (1.0 - zeta) * (-delta_sigma)
    if is_final:
        reward += zeta * (-delta_d)
    return reward


def compute_returns(rewards):
    """Suffix sums G_j = r_j + G_{j+1}, computed by the exact recurrence."""
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty reward sequence")
    returns = np.empty_like(rewards)
    acc = 0.0
    for j in range(rewards.size - 1, -1, -1):
        acc = rewards[j] + acc
        returns[j] = acc
    return returns


# ---------------------------------------------------------------------------
# Environment and rollouts
# ---------------------------------------------------------------------------

@dataclass
class TwoLevelEnv:
    """MDP wrapper: endpoints, bath, and the episode discretization.

    Classical mode observes (p_minus, t/tau) and acts with lam alone;
    quantum mode observes (x, y, z, t/tau) and acts with (epsilon, lam).
    epsilon is unconstrained, lam is clamped at zero before it reaches
    the dynamics.
    """
    mode: str
    lambda_i: float
    lambda_f: float
    epsilon_i: float = 0.0
    epsilon_f: float = 0.0
    beta: float = 1.0
    substeps: int = 100
    config: PolicyConfig = field(default_factory=PolicyConfig)

    def __post_init__(self):
        if self.mode not in ("classical", "quantum"):
            raise ValueError("mode must be 'classical' or 'quantum'")
        if self.lambda_i < 0 or self.lambda_f < 0:
            raise ValueError("lam endpoints must be nonnegative")
        if self.mode == "classical" and (self.epsilon_i or self.epsilon_f):
            raise ValueError("classical mode requires zero epsilon endpoints")
        self.ctx = ThermalContext(self.beta)

    @property
    def action_dim(self):
        return 1 if self.mode == "classical" else 2

    @property
    def input_dim(self):
        base = 1 if self.mode == "classical" else 3
        return base + (1 if self.config.include_time else 0)

    def initial_state(self):
        if self.mode == "classical":
            return gibbs_classical(self.lambda_i, self.ctx)
        return gibbs_state(ControlParams(self.epsilon_i, self.lambda_i), self.ctx)

    def target_state(self):
        if self.mode == "classical":
            return gibbs_classical(self.lambda_f, self.ctx)
        return gibbs_state(ControlParams(self.epsilon_f, self.lambda_f), self.ctx)

    def observe(self, state, j):
        time_feature = [j / self.config.N] if self.config.include_time else []
        if self.mode == "classical":
            return np.array([state.p_minus, *time_feature])
        return np.array([state.x, state.y, state.z, *time_feature])

    def control_from_action(self, action):
        if self.mode == "classical":
            return ControlParams(0.0, max(float(action[0]), 0.0))
        return ControlParams(float(action[0]), max(float(action[1]), 0.0))

    def step(self, state, control, dt):
        if self.mode == "classical":
            p, d_sigma = classical_interval(state.p_minus, control.lam,
                                            self.ctx, dt, self.substeps)
            return ClassicalState(p), d_sigma
        r, d_sigma = quantum_interval(state.vector(), control,
                                      self.ctx, dt, self.substeps)
        return BlochState.from_vector(r), d_sigma

    def distance_to_target(self, state):
        if self.mode == "classical":
            return l1_distance(state, self.target_state())
        return trace_distance(state, self.target_state())


@dataclass
class EpisodeTrace:
    """One rollout: policy inputs, sampled actions, applied controls,
    rewards/returns, entropy bookkeeping, and the terminal distance."""
    states: np.ndarray
    actions: np.ndarray
    controls: list
    rewards: np.ndarray
    returns: np.ndarray
    entropy_increments: np.ndarray
    delta_d: float
    sigma_total: float
    final_state: object

    @property
    def total_reward(self):
        return float(self.returns[0])


def rollout(theta, env, rng, deterministic=False):
    """Run one episode of N piecewise-constant intervals."""
    cfg = env.config
    n = cfg.N
    dt = cfg.tau / n
    state = env.initial_state()
    inputs = np.empty((n, env.input_dim))
    actions = np.empty((n, env.action_dim))
    increments = np.empty(n)
    rewards = np.empty(n)
    controls = []
    for j in range(n):
        obs = env.observe(state, j)
        inputs[j] = obs
        mu = policy_mean(theta, obs)
        action = sample_action(mu, cfg.action_cov, rng, deterministic)
        actions[j] = action
        control = env.control_from_action(action)
        controls.append(control)
        state, d_sigma = env.step(state, control, dt)
        increments[j] = d_sigma
        is_final = j == n - 1
        delta_d = env.distance_to_target(state) if is_final else 0.0
        rewards[j] = step_reward(d_sigma, is_final, delta_d, cfg.zeta)
    returns = compute_returns(rewards)
    return EpisodeTrace(states=inputs, actions=actions, controls=controls,
                        rewards=rewards, returns=returns,
                        entropy_increments=increments,
                        delta_d=delta_d, sigma_total=float(np.sum(increments)),
                        final_state=state)


# ---------------------------------------------------------------------------
# Adam and the training loop
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second-moment accumulators shaped like the parameters."""
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def like(theta):
        return AdamState(m_w=[np.zeros_like(w) for w in theta.weights],
                         v_w=[np.zeros_like(w) for w in theta.weights],
                         m_b=[np.zeros_like(b) for b in theta.biases],
                         v_b=[np.zeros_like(b) for b in theta.biases])

    def ascend(self, theta, grads_w, grads_b, alpha):
        """One maximization step along the accumulated gradient."""
        self.t += 1
        corr1 = 1.0 - self.beta1 ** self.t
        corr2 = 1.0 - self.beta2 ** self.t
        for i in range(len(theta.weights)):
            for value, grad, m, v in (
                    (theta.weights[i], grads_w[i], self.m_w[i], self.v_w[i]),
                    (theta.biases[i], grads_b[i], self.m_b[i], self.v_b[i])):
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * grad * grad
                value += alpha * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


@dataclass
class TrainResult:
    theta: PolicyParameters
    baseline: float
    adam: AdamState
    curve: np.ndarray          # columns: total_reward, delta_d, sigma
    episodes_run: int
    config: PolicyConfig


def _episode_gradient(theta, trace, cov, baseline, alpha_w, rule):
    """Summed score gradients weighted by baseline-subtracted returns.

    The baseline is updated per step, in step order, exactly as the
    returns are consumed; returns the new baseline value.
    """
    advantages = np.empty(len(trace.returns))
    w = baseline
    for j, g in enumerate(trace.returns):
        advantages[j] = g - w
        w += alpha_w * (g - w) if rule == "tracking" else alpha_w * g
    mu, activations = _forward_cached(theta, trace.states)
    dmu = (trace.actions - mu) / cov * advantages[:, None]
    grads_w, grads_b = _backward(theta, activations, dmu)
    return grads_w, grads_b, w


def train(config, env, theta=None, adam=None, baseline=None, rng=None,
          progress=None):
    """REINFORCE-with-baseline training loop.

    One stochastic rollout per episode; all step gradients of the episode
    are summed into a single Adam update (per-step updates behind
    config.update_every_step).  Pass theta/adam/baseline/rng to resume.
    Raises TrainingDiverged if any parameter leaves the finite range.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if theta is None:
        theta = init_policy(env.input_dim, env.action_dim, config.C, rng,
                            config.hidden)
    if adam is None:
        adam = AdamState.like(theta)
    if baseline is None:
        baseline = float(rng.standard_normal())
    curve = np.empty((config.episodes, 3))
    for episode in range(config.episodes):
        try:
            trace = rollout(theta, env, rng)
        except ValueError as exc:
            # non-finite parameters surface as invalid actions/states first
            raise TrainingDiverged(f"episode {episode}: {exc}") from exc
        if config.update_every_step:
            w = baseline
            for j in range(config.N):
                adv = trace.returns[j] - w
                w += config.alpha_w * (trace.returns[j] - w) \
                    if config.baseline_rule == "tracking" \
                    else config.alpha_w * trace.returns[j]
                mu, acts = _forward_cached(theta, trace.states[j])
                dmu = (np.atleast_2d(trace.actions[j]) - mu) \
                    / config.action_cov * adv
                gw, gb = _backward(theta, acts, dmu)
                adam.ascend(theta, gw, gb, config.alpha)
            baseline = w
        else:
            gw, gb, baseline = _episode_gradient(
                theta, trace, config.action_cov, baseline,
                config.alpha_w, config.baseline_rule)
            adam.ascend(theta, gw, gb, config.alpha)
        curve[episode] = (trace.total_reward, trace.delta_d, trace.sigma_total)
        if not np.isfinite(baseline) or (episode % 1000 == 999
                                         and not theta.all_finite()):
            raise TrainingDiverged(f"non-finite parameters at episode {episode}")
        if progress is not None and episode % 5000 == 4999:
            progress(episode + 1, curve[max(0, episode - 499):episode + 1])
    if not theta.all_finite():
        raise TrainingDiverged("non-finite parameters after training")
    return TrainResult(theta=theta, baseline=baseline, adam=adam, curve=curve,
                       episodes_run=config.episodes, config=config)


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def save_checkpoint(path, result, env, rng=None):
    """Archive parameters, optimizer state and enough metadata to resume."""
    payload = {"C": np.array(result.theta.C),
               "baseline": np.array(result.baseline),
               "adam_t": np.array(result.adam.t),
               "episodes_run": np.array(result.episodes_run),
               "layer_sizes": np.array(
                   [result.theta.in_dim,
                    *[w.shape[1] for w in result.theta.weights]]),
               "action_dim": np.array(result.theta.action_dim),
               "config_json": np.array(json.dumps(asdict(result.config))),
               "env_mode": np.array(env.mode)}
    for i, (w, b) in enumerate(zip(result.theta.weights, result.theta.biases)):
        payload[f"w{i}"] = w
        payload[f"b{i}"] = b
        payload[f"adam_mw{i}"] = result.adam.m_w[i]
        payload[f"adam_vw{i}"] = result.adam.v_w[i]
        payload[f"adam_mb{i}"] = result.adam.m_b[i]
        payload[f"adam_vb{i}"] = result.adam.v_b[i]
    if rng is not None:
        payload["rng_state"] = np.array(json.dumps(rng.bit_generator.state))
    np.savez(path, **payload)


def load_checkpoint(path):
    """Returns (theta, adam, baseline, episodes_run, config_dict, rng_state)."""
    archive = np.load(path, allow_pickle=False)
    n_layers = int(archive["layer_sizes"].size) - 1
    theta = PolicyParameters(
        weights=[archive[f"w{i}"] for i in range(n_layers)],
        biases=[archive[f"b{i}"] for i in range(n_layers)],
        C=float(archive["C"]))
    adam = AdamState(
        m_w=[archive[f"adam_mw{i}"] for i in range(n_layers)],
        v_w=[archive[f"adam_vw{i}"] for i in range(n_layers)],
        m_b=[archive[f"adam_mb{i}"] for i in range(n_layers)],
        v_b=[archive[f"adam_vb{i}"] for i in range(n_layers)],
        t=int(archive["adam_t"]))
    config_dict = json.loads(str(archive["config_json"]))
    rng_state = json.loads(str(archive["rng_state"])) \
        if "rng_state" in archive else None
    return (theta, adam, float(archive["baseline"]),
            int(archive["episodes_run"]), config_dict, rng_state)


def evaluation_trajectory(theta, env):
    """Deterministic rollout re-run through evolve_protocol for export."""
    trace = rollout(theta, env, np.random.default_rng(0), deterministic=True)
    return dynamics.evolve_protocol(env.initial_state(), trace.controls,
                                    env.config.tau, env.ctx, env.substeps), trace
