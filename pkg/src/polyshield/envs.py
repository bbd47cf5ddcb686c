"""Environment transition systems with polynomial dynamics.

An environment is an infinite-state transition system: polynomial vector
field f over (state, action), a box of initial states, an unsafe set given
as the complement of a closed safe box, and a fixed Euler time step.  The
safe box is closed, so boundary states count as safe; the unsafe set is the
open complement, realized as the union of 2n violated-bound half-spaces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .poly import DimensionError, Polynomial


@dataclass(frozen=True)
class BoxSet:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise DimensionError("box bounds length mismatch")
        for lo, hi in zip(self.lower, self.upper):
            if lo > hi:
                raise ValueError(f"empty box: lower {lo} > upper {hi}")

    @staticmethod
    def make(lower, upper) -> "BoxSet":
        return BoxSet(tuple(float(v) for v in lower),
                      tuple(float(v) for v in upper))

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_width(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def contains(self, s) -> bool:
        s = np.asarray(s, dtype=float)
        return bool(np.all(s >= self.lo) and np.all(s <= self.hi))

    def contains_many(self, S: np.ndarray) -> np.ndarray:
        return np.all((S >= self.lo) & (S <= self.hi), axis=1)

    def clip(self, s) -> np.ndarray:
        return np.clip(np.asarray(s, dtype=float), self.lo, self.hi)

    def intersect(self, other: "BoxSet") -> "BoxSet | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            return None
        return BoxSet.make(lo, hi)

    def inflate(self, factor: float) -> "BoxSet":
        """Grow around the center by `factor` of the half-width per dimension."""
        hw = self.half_width * (1.0 + factor)
        return BoxSet.make(self.center - hw, self.center + hw)

    def sample(self, rng: np.random.Generator, count: int | None = None):
        if count is None:
            return rng.uniform(self.lo, self.hi)
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))

    def grid(self, per_dim: int) -> np.ndarray:
        axes = [np.linspace(lo, hi, per_dim)
                for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class UnsafeSet:
    """Complement of a closed safe box: unsafe iff some coordinate bound is violated."""

    safe_box: BoxSet

    def contains(self, s) -> bool:
        return not self.safe_box.contains(s)

    def contains_many(self, S: np.ndarray) -> np.ndarray:
        return ~self.safe_box.contains_many(S)

    def halfspaces(self) -> list[tuple[int, int, float]]:
        """(dimension, sign, bound): unsafe side is sign*(s[dim] - bound) >= 0."""
        out = []
        for i, (lo, hi) in enumerate(zip(self.safe_box.lower,
                                         self.safe_box.upper)):
            out.append((i, +1, hi))
            out.append((i, -1, lo))
        return out

    def halfspace_polys(self, nvars: int) -> list[Polynomial]:
        """g(s) with g >= 0 exactly on the unsafe side of each violated bound."""
        polys = []
        for dim, sign, bound in self.halfspaces():
            g = Polynomial.variable(dim, nvars).scale(float(sign)) - sign * bound
            polys.append(g)
        return polys


# -- rewards ----------------------------------------------------------

def _quadratic_reward(s, a):
    s = np.asarray(s)
    a = np.asarray(a)
    return -float(s @ s) - 0.01 * float(a @ a)


REWARDS = {
    "quadratic": _quadratic_reward,
}


@dataclass(frozen=True)
class EnvironmentSpec:
    """Polynomial control environment: dynamics, sets, step size, disturbance."""

    n: int
    m: int
    f: tuple[Polynomial, ...]
    s0_set: BoxSet
    unsafe: UnsafeSet
    dt: float
    horizon: int
    disturbance: tuple[float, ...] | None = None
    reward_name: str = "quadratic"
    name: str = ""

    def __post_init__(self):
        if self.dt <= 0 or self.horizon < 1:
            raise ValueError("need dt > 0 and horizon >= 1")
        if len(self.f) != self.n:
            raise DimensionError("need one dynamics polynomial per state dim")
        for fi in self.f:
            if fi.nvars != self.n + self.m:
                raise DimensionError(
                    f"dynamics must use {self.n + self.m} variables")
        if self.s0_set.dim != self.n or self.unsafe.safe_box.dim != self.n:
            raise DimensionError("set dimension mismatch")
        if self.disturbance is not None:
            if len(self.disturbance) != self.n:
                raise DimensionError("disturbance bound length mismatch")
            if any(b < 0 for b in self.disturbance):
                raise ValueError("disturbance bounds must be >= 0")
        if self.reward_name not in REWARDS:
            raise ValueError(f"unknown reward {self.reward_name!r}")

    @property
    def reward(self):
        return REWARDS[self.reward_name]

    @property
    def disturbance_bounds(self) -> np.ndarray:
        if self.disturbance is None:
            return np.zeros(self.n)
        return np.array(self.disturbance)

    def active_disturbance_dims(self) -> list[int]:
        return [i for i, b in enumerate(self.disturbance_bounds) if b > 0]

    def restrict_s0(self, region: BoxSet) -> "EnvironmentSpec":
        inter = self.s0_set.intersect(region)
        if inter is None:
            raise ValueError("restricted initial region is empty")
        return replace(self, s0_set=inter)

    # dynamics fast path: stacked coefficient tables shared by all f_i
    def _tables(self):
        if not hasattr(self, "_cached_tables"):
            tables = []
            for fi in self.f:
                coeffs = np.array([c for c in fi.terms.values()])
                expmat = np.zeros((len(fi.terms), self.n + self.m),
                                  dtype=np.int64)
                for r, mono in enumerate(fi.terms):
                    for var, exp in mono.exps:
                        expmat[r, var] = exp
                tables.append((coeffs, expmat))
            object.__setattr__(self, "_cached_tables", tables)
        return self._cached_tables

    def dynamics(self, s: np.ndarray, a: np.ndarray) -> np.ndarray:
        x = np.concatenate([s, a])
        out = np.empty(self.n)
        for i, (coeffs, expmat) in enumerate(self._tables()):
            out[i] = coeffs @ np.prod(x[None, :] ** expmat, axis=1) \
                if coeffs.size else 0.0
        return out

    def dynamics_many(self, S: np.ndarray, A: np.ndarray) -> np.ndarray:
        X = np.concatenate([S, A], axis=1)
        out = np.zeros((S.shape[0], self.n))
        for i, (coeffs, expmat) in enumerate(self._tables()):
            if coeffs.size:
                out[:, i] = np.prod(X[:, None, :] ** expmat[None], axis=2) @ coeffs
        return out


@dataclass
class Trajectory:
    states: list[np.ndarray]
    actions: list[np.ndarray]
    unsafe_hit: int | None = None

    def __post_init__(self):
        if len(self.actions) != len(self.states) - 1:
            raise ValueError("need exactly one action per transition")

    @property
    def length(self) -> int:
        return len(self.actions)

    def state_array(self) -> np.ndarray:
        return np.stack(self.states)


def is_unsafe(env: EnvironmentSpec, s) -> bool:
    s = np.asarray(s, dtype=float)
    if s.shape != (env.n,):
        raise DimensionError(f"state length {s.shape} for n={env.n}")
    return env.unsafe.contains(s)


def euler_step(env: EnvironmentSpec, s, a, d=None) -> np.ndarray:
    """One forward-Euler transition s' = s + (f(s, a) + d) * dt."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if s.shape != (env.n,) or a.shape != (env.m,):
        raise DimensionError("state/action dimension mismatch")
    if d is None:
        d = np.zeros(env.n)
    else:
        d = np.asarray(d, dtype=float)
        if d.shape != (env.n,):
            raise DimensionError("disturbance dimension mismatch")
        if np.any(np.abs(d) > env.disturbance_bounds + 1e-12):
            raise ValueError("disturbance outside declared bounds")
    return s + (env.dynamics(s, a) + d) * env.dt


class DisturbanceSampler:
    """Uniform per-step disturbance on the declared bound box, seeded."""

    def __init__(self, env: EnvironmentSpec, seed: int):
        self.bounds = env.disturbance_bounds
        self.rng = np.random.default_rng(seed)

    def __call__(self) -> np.ndarray:
        if not np.any(self.bounds):
            return np.zeros(len(self.bounds))
        return self.rng.uniform(-self.bounds, self.bounds)


def rollout(env: EnvironmentSpec, policy, s0, steps: int,
            disturbance_sampler=None) -> Trajectory:
    """Iterate euler_step under `policy`, stopping early at the first unsafe state."""
    if steps > env.horizon:
        raise ValueError(f"steps {steps} exceeds horizon {env.horizon}")
    s = np.asarray(s0, dtype=float)
    if s.shape != (env.n,):
        raise DimensionError("initial state dimension mismatch")
    states = [s]
    actions: list[np.ndarray] = []
    if is_unsafe(env, s):
        return Trajectory(states, actions, unsafe_hit=0)
    for _ in range(steps):
        a = np.atleast_1d(np.asarray(policy(s), dtype=float))
        if not np.all(np.isfinite(a)):
            raise ValueError("policy returned a non-finite action")
        d = disturbance_sampler() if disturbance_sampler is not None else None
        s = euler_step(env, s, a, d)
        states.append(s)
        actions.append(a)
        if is_unsafe(env, s):
            return Trajectory(states, actions, unsafe_hit=len(states) - 1)
    return Trajectory(states, actions)


def rollout_batch(env: EnvironmentSpec, policy_many, S0: np.ndarray,
                  steps: int, disturbance_rng: np.random.Generator | None = None):
    """Vectorized rollouts for synthesis/training loops.

    Returns (states (steps+1, B, n), actions (steps, B, m), alive mask history
    (steps+1, B)).  Trajectories freeze at their first unsafe state.
    """
    B = S0.shape[0]
    S = np.array(S0, dtype=float)
    alive = ~env.unsafe.contains_many(S)
    states = [S.copy()]
    actions = []
    alive_hist = [alive.copy()]
    bounds = env.disturbance_bounds
    for _ in range(steps):
        A = np.atleast_2d(np.asarray(policy_many(S), dtype=float))
        if A.shape[0] != B:
            A = A.reshape(B, env.m)
        D = (disturbance_rng.uniform(-bounds, bounds, size=(B, env.n))
             if disturbance_rng is not None and np.any(bounds)
             else np.zeros((B, env.n)))
        S_next = S + (env.dynamics_many(S, A) + D) * env.dt
        S = np.where(alive[:, None], S_next, S)
        alive = alive & ~env.unsafe.contains_many(S)
        states.append(S.copy())
        actions.append(A)
        alive_hist.append(alive.copy())
    return np.stack(states), np.stack(actions), np.stack(alive_hist)


def sample_initial(env: EnvironmentSpec, region: BoxSet, seed: int) -> np.ndarray:
    """Uniform sample from region ∩ S0; reproducible under a fixed seed."""
    inter = env.s0_set.intersect(region)
    if inter is None:
        raise ValueError("sampling region does not intersect the initial set")
    rng = np.random.default_rng(seed)
    return inter.sample(rng)


# -- config files ------------------------------------------------------

CONFIG_VERSION = "polyshield-env-1"


def env_to_dict(env: EnvironmentSpec) -> dict:
    return {
        "version": CONFIG_VERSION,
        "name": env.name,
        "n": env.n,
        "m": env.m,
        "dynamics": [fi.to_string() for fi in env.f],
        "s0_box": {"lower": list(env.s0_set.lower),
                   "upper": list(env.s0_set.upper)},
        "safe_box": {"lower": list(env.unsafe.safe_box.lower),
                     "upper": list(env.unsafe.safe_box.upper)},
        "dt": env.dt,
        "horizon": env.horizon,
        "disturbance_bounds": (list(env.disturbance)
                               if env.disturbance is not None else None),
        "reward_name": env.reward_name,
        "angle_unit": "rad",
    }


def env_from_dict(data: dict) -> EnvironmentSpec:
    if data.get("version") != CONFIG_VERSION:
        raise ValueError(f"unsupported config version {data.get('version')!r}")
    n, m = int(data["n"]), int(data["m"])
    unit = data.get("angle_unit", "rad")
    if unit not in ("rad", "deg"):
        raise ValueError(f"unknown angle unit {unit!r}")
    conv = math.pi / 180.0 if unit == "deg" else 1.0

    def box(d):
        return BoxSet.make([v * conv for v in d["lower"]],
                           [v * conv for v in d["upper"]])

    f = tuple(Polynomial.from_string(s, n + m) for s in data["dynamics"])
    dist = data.get("disturbance_bounds")
    return EnvironmentSpec(
        n=n, m=m, f=f,
        s0_set=box(data["s0_box"]),
        unsafe=UnsafeSet(box(data["safe_box"])),
        dt=float(data["dt"]),
        horizon=int(data["horizon"]),
        disturbance=tuple(float(v) for v in dist) if dist else None,
        reward_name=data.get("reward_name", "quadratic"),
        name=data.get("name", ""),
    )


def save_env(env: EnvironmentSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(env_to_dict(env), fh, indent=2)


def load_env(path) -> EnvironmentSpec:
    with open(path) as fh:
        return env_from_dict(json.load(fh))
