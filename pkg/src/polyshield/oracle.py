"""Feed-forward neural policies trained by zero-mean Gaussian random search.

The trainer perturbs the flattened weight vector in symmetric pairs, scores
each side by rollout reward, and takes a finite-difference step along the
sampled direction.  One optimizer therefore serves both oracle training and
program distillation, and everything stays deterministic under a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envs import EnvironmentSpec, rollout_batch
from .poly import DimensionError


@dataclass
class MlpPolicy:
    """tanh hidden layers, linear output, per-dimension output clamp."""

    layer_dims: list[int]
    weights: list[np.ndarray]       # (out, in) matrices
    biases: list[np.ndarray]
    action_scale: np.ndarray        # (m,), clamp to [-scale, scale]

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1:
            raise ValueError("weight count does not match layer dims")
        for W in self.weights + self.biases:
            if not np.all(np.isfinite(W)):
                raise ValueError("non-finite network weights")

    @property
    def n_in(self) -> int:
        return self.layer_dims[0]

    @property
    def n_out(self) -> int:
        return self.layer_dims[-1]

    def forward(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.n_in,):
            raise DimensionError(f"input shape {s.shape}, expected ({self.n_in},)")
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite network input")
        h = s
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = W @ h + b
            if k < len(self.weights) - 1:
                h = np.tanh(h)
        return np.clip(h, -self.action_scale, self.action_scale)

    def forward_many(self, S: np.ndarray) -> np.ndarray:
        H = np.asarray(S, dtype=float)
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            H = H @ W.T + b
            if k < len(self.weights) - 1:
                H = np.tanh(H)
        return np.clip(H, -self.action_scale, self.action_scale)

    def __call__(self, s):
        return self.forward(s)

    # -- flat parameter view (for random search) ----------------------

    def get_flat(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights]
                              + [b.ravel() for b in self.biases])

    def with_flat(self, theta: np.ndarray) -> "MlpPolicy":
        ws, bs = [], []
        ofs = 0
        for W in self.weights:
            ws.append(theta[ofs:ofs + W.size].reshape(W.shape).copy())
            ofs += W.size
        for b in self.biases:
            bs.append(theta[ofs:ofs + b.size].reshape(b.shape).copy())
            ofs += b.size
        assert ofs == theta.size
        return MlpPolicy(list(self.layer_dims), ws, bs,
                         self.action_scale.copy())


def init_policy(layer_dims: list[int], action_scale, seed: int,
                weight_scale: float = 0.1) -> MlpPolicy:
    rng = np.random.default_rng(seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        ws.append(rng.normal(0.0, weight_scale / np.sqrt(fan_in),
                             size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MlpPolicy(list(layer_dims), ws, bs,
                     np.atleast_1d(np.asarray(action_scale, dtype=float)))


def zero_policy(layer_dims: list[int], action_scale) -> MlpPolicy:
    ws = [np.zeros((o, i)) for i, o in zip(layer_dims[:-1], layer_dims[1:])]
    bs = [np.zeros(o) for o in layer_dims[1:]]
    return MlpPolicy(list(layer_dims), ws, bs,
                     np.atleast_1d(np.asarray(action_scale, dtype=float)))


@dataclass
class TrainConfig:
    iterations: int = 300
    step_size: float = 0.02          # alpha
    noise_scale: float = 0.05        # nu
    rollouts_per_eval: int = 4
    horizon: int = 200
    eval_rollouts: int = 20
    seed: int = 0

    def __post_init__(self):
        if min(self.iterations, self.rollouts_per_eval, self.horizon,
               self.eval_rollouts) < 0 or self.step_size <= 0 \
                or self.noise_scale <= 0:
            raise ValueError("invalid training configuration")


def cumulative_reward(env: EnvironmentSpec, policy, s0_batch: np.ndarray,
                      horizon: int,
                      disturbance_rng: np.random.Generator | None = None
                      ) -> np.ndarray:
    """Total reward per rollout, truncated at the first unsafe state.

    Truncation alone would make an early unsafe exit cheaper than surviving,
    so every step after an unsafe hit is charged twice the worst quadratic
    state cost inside the safe box; surviving longer then always pays.
    """
    policy_many = (policy.forward_many if isinstance(policy, MlpPolicy)
                   else lambda S: np.stack([np.atleast_1d(policy(s)) for s in S]))
    states, actions, alive = rollout_batch(env, policy_many, s0_batch,
                                           horizon, disturbance_rng)
    if env.reward_name == "quadratic":
        per_step = -(states[:-1] ** 2).sum(axis=2) - 0.01 * (actions ** 2).sum(axis=2)
    else:
        reward = env.reward
        per_step = np.array([[reward(states[t, b], actions[t, b])
                              for b in range(s0_batch.shape[0])]
                             for t in range(horizon)])
    dead_cost = 2.0 * float(env.unsafe.safe_box.half_width @
                            env.unsafe.safe_box.half_width)
    return np.where(alive[:-1], per_step, -dead_cost).sum(axis=0)


def _mean_return(env, policy, rng_seed, count, horizon):
    rng = np.random.default_rng(rng_seed)
    s0 = env.s0_set.sample(rng, count)
    returns = cumulative_reward(env, policy, s0, horizon,
                                np.random.default_rng(rng_seed + 1))
    if not np.all(np.isfinite(returns)):
        raise ValueError("divergent rollout reward during training")
    return float(returns.mean())


@dataclass
class TrainResult:
    policy: MlpPolicy
    curve: list[float] = field(default_factory=list)    # best-so-far eval reward


def train(env: EnvironmentSpec, layer_dims: list[int], cfg: TrainConfig,
          action_scale=10.0) -> TrainResult:
    """Random-search training of an MLP policy on the environment reward."""
    full_dims = [env.n] + list(layer_dims) + [env.m]
    policy = init_policy(full_dims, np.full(env.m, float(action_scale)),
                         cfg.seed)
    theta = policy.get_flat()
    rng = np.random.default_rng(cfg.seed + 1000)
    eval_seed = cfg.seed + 2000

    best_theta = theta.copy()
    best_reward = _mean_return(env, policy.with_flat(theta), eval_seed,
                               cfg.eval_rollouts, cfg.horizon)
    curve = [best_reward]
    for it in range(cfg.iterations):
        delta = rng.standard_normal(theta.size)
        roll_seed = cfg.seed + 3000 + it
        rplus = _mean_return(env, policy.with_flat(theta + cfg.noise_scale * delta),
                             roll_seed, cfg.rollouts_per_eval, cfg.horizon)
        rminus = _mean_return(env, policy.with_flat(theta - cfg.noise_scale * delta),
                              roll_seed, cfg.rollouts_per_eval, cfg.horizon)
        scale = max(1.0, abs(rplus) + abs(rminus))
        theta = theta + cfg.step_size * ((rplus - rminus) / (cfg.noise_scale * scale)) * delta
        if not np.all(np.isfinite(theta)):
            raise ValueError(f"non-finite weight update at iteration {it}")
        reward = _mean_return(env, policy.with_flat(theta), eval_seed,
                              cfg.eval_rollouts, cfg.horizon)
        if reward > best_reward:
            best_reward = reward
            best_theta = theta.copy()
        curve.append(best_reward)
    return TrainResult(policy.with_flat(best_theta), curve)


# -- weight files ------------------------------------------------------

WEIGHTS_VERSION = "polyshield-weights-1"


def save_weights(policy: MlpPolicy, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{WEIGHTS_VERSION}\n")
        fh.write(" ".join(str(d) for d in policy.layer_dims) + "\n")
        fh.write(" ".join(repr(float(v)) for v in policy.action_scale) + "\n")
        for W in policy.weights:
            for row in W:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        for b in policy.biases:
            fh.write(" ".join(repr(float(v)) for v in b) + "\n")


def load_weights(path) -> MlpPolicy:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != WEIGHTS_VERSION:
        raise ValueError("not a recognized weight file")
    try:
        dims = [int(v) for v in lines[1].split()]
        scale = np.array([float(v) for v in lines[2].split()])
        idx = 3
        ws, bs = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            rows = []
            for _ in range(fan_out):
                rows.append([float(v) for v in lines[idx].split()])
                idx += 1
            W = np.array(rows)
            if W.shape != (fan_out, fan_in):
                raise ValueError("weight matrix shape mismatch")
            ws.append(W)
        for fan_out in dims[1:]:
            bs.append(np.array([float(v) for v in lines[idx].split()]))
            if bs[-1].shape != (fan_out,):
                raise ValueError("bias shape mismatch")
            idx += 1
        if idx != len(lines):
            raise ValueError("trailing data in weight file")
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed weight file: {exc}") from exc
    if scale.shape != (dims[-1],):
        raise ValueError("action scale length mismatch")
    return MlpPolicy(dims, ws, bs, scale)
