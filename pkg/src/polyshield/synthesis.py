"""Distill a neural oracle into an affine policy program by random search.

The search starts from the zero parameter vector, perturbs it with a single
Gaussian direction per iteration, rolls out the perturbed programs in the
environment, and steps along the sampled finite-difference estimate of the
proximity objective.  Unsafe states are punished with a large flat penalty so
that safety dominates oracle proximity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envs import EnvironmentSpec, Trajectory, rollout_batch
from .oracle import MlpPolicy
from .poly import DimensionError, Polynomial


@dataclass(frozen=True)
class LinearSketch:
    """Affine program template: action = theta . (state, 1)."""

    n: int
    m: int
    includes_bias: bool = True

    @property
    def param_count(self) -> int:
        return self.m * (self.n + (1 if self.includes_bias else 0))

    def theta_shape(self) -> tuple[int, int]:
        return (self.m, self.n + (1 if self.includes_bias else 0))


@dataclass
class LinearProgramPolicy:
    """A synthesized affine program from a LinearSketch; theta is m x (n+1)."""

    theta: np.ndarray
    sketch: LinearSketch

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if self.theta.shape != self.sketch.theta_shape():
            raise DimensionError(
                f"theta shape {self.theta.shape}, expected "
                f"{self.sketch.theta_shape()}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("non-finite program parameters")

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if s.shape != (self.sketch.n,):
            raise DimensionError("state dimension mismatch")
        if self.sketch.includes_bias:
            return self.theta[:, :-1] @ s + self.theta[:, -1]
        return self.theta @ s

    def eval_many(self, S: np.ndarray) -> np.ndarray:
        if self.sketch.includes_bias:
            return S @ self.theta[:, :-1].T + self.theta[:, -1]
        return S @ self.theta.T

    def action_polynomials(self, nvars: int | None = None) -> list[Polynomial]:
        """Each action coordinate as a polynomial over the state variables."""
        n = self.sketch.n
        nvars = nvars if nvars is not None else n
        out = []
        for row in self.theta:
            p = Polynomial.zero(nvars)
            for i in range(n):
                p = p + Polynomial.variable(i, nvars).scale(float(row[i]))
            if self.sketch.includes_bias:
                p = p + float(row[-1])
            out.append(p)
        return out


def program_eval(p: LinearProgramPolicy, s) -> np.ndarray:
    return p(s)


@dataclass
class SynthConfig:
    step_size: float = 0.05           # alpha
    noise_radius: float = 0.05        # nu
    iterations: int = 300
    trajectories_per_side: int = 5
    rollout_length: int = 200
    unsafe_penalty: float = 1e4       # MAX
    convergence_tol: float = 1e-6
    convergence_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.step_size <= 0 or self.noise_radius <= 0 \
                or self.unsafe_penalty <= 0:
            raise ValueError("step size, noise radius and penalty must be > 0")


def distance(oracle, program: LinearProgramPolicy, h: Trajectory,
             unsafe_flags=None, unsafe_penalty: float = 1e4) -> float:
    """Oracle-proximity score of one trajectory: 0 is perfect, always <= 0.

    Safe states contribute the negated squared action residual; unsafe states
    contribute the flat -MAX penalty.
    """
    if not h.states:
        raise ValueError("empty trajectory")
    total = 0.0
    for t, s in enumerate(h.states):
        unsafe = (h.unsafe_hit is not None and t >= h.unsafe_hit) \
            if unsafe_flags is None else unsafe_flags[t]
        if unsafe:
            total -= unsafe_penalty
        else:
            r = program(s) - np.atleast_1d(np.asarray(oracle(s), dtype=float))
            total -= float(r @ r)
    return total


def _batched_distance(env: EnvironmentSpec, oracle, program: LinearProgramPolicy,
                      S0: np.ndarray, steps: int, penalty: float,
                      disturbance_rng) -> float:
    """Sum of per-trajectory distances over a batch rolled out under `program`."""
    oracle_many = (oracle.forward_many if isinstance(oracle, MlpPolicy)
                   else lambda S: np.stack([np.atleast_1d(oracle(s)) for s in S]))
    states, _, alive = rollout_batch(env, program.eval_many, S0, steps,
                                     disturbance_rng)
    T1, B, n = states.shape
    flat = states.reshape(T1 * B, n)
    resid = program.eval_many(flat) - oracle_many(flat)
    sq = (resid ** 2).sum(axis=1).reshape(T1, B)
    return float(np.where(alive, -sq, -penalty).sum())


def synthesize(oracle, sketch: LinearSketch, env: EnvironmentSpec,
               cfg: SynthConfig) -> LinearProgramPolicy:
    """Random-search fit of the sketch parameters to the oracle (best iterate)."""
    if sketch.n != env.n or sketch.m != env.m:
        raise DimensionError("sketch does not match environment dimensions")
    theta = np.zeros(sketch.theta_shape())
    rng = np.random.default_rng(cfg.seed)
    start_rng = np.random.default_rng(cfg.seed + 1)
    dist_seed = cfg.seed + 2

    def score(th, seed) -> float:
        program = LinearProgramPolicy(th, sketch)
        ss_rng = np.random.default_rng(seed)
        S0 = env.s0_set.sample(ss_rng, cfg.trajectories_per_side)
        return _batched_distance(env, oracle, program, S0, cfg.rollout_length,
                                 cfg.unsafe_penalty,
                                 np.random.default_rng(seed + 1))

    eval_seed = cfg.seed + 5
    best_theta = theta.copy()
    best_score = score(theta, eval_seed)
    quiet = 0
    for it in range(cfg.iterations):
        delta = rng.standard_normal(theta.shape)
        seed = int(start_rng.integers(1 << 31))
        d_plus = score(theta + cfg.noise_radius * delta, seed)
        d_minus = score(theta - cfg.noise_radius * delta, seed)
        step = cfg.step_size * ((d_plus - d_minus) / cfg.noise_radius) * delta
        # guard against penalty-driven blowups without biasing small steps
        norm = np.linalg.norm(step)
        if norm > 1.0:
            step = step / norm
        theta = theta + step
        if not np.all(np.isfinite(theta)):
            raise ValueError(f"non-finite parameter update at iteration {it}")
        cur = score(theta, eval_seed)
        if cur > best_score:
            best_score = cur
            best_theta = theta.copy()
        quiet = quiet + 1 if norm < cfg.convergence_tol else 0
        if quiet >= cfg.convergence_patience:
            break
    return LinearProgramPolicy(best_theta, sketch)
