"""Runtime shield: monitor the neural policy, override with the verified
program when the model-predicted next state would leave the invariant union.

Each step predicts the Euler successor of the neural action for every corner
of the disturbance box (a single zero-disturbance prediction when none is
declared) and accepts the neural action only if every prediction stays inside
some invariant with a small safety margin.  Corner checking is conservative
for steps affine in the disturbance but not complete for the nonlinear
invariants, hence the margin.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .cegis import Abort, ShieldPolicy, shield_program_eval
from .envs import EnvironmentSpec, euler_step


@dataclass
class ShieldedRunMetrics:
    episodes: int
    steps_per_episode: int
    unsafe_entries_shielded: int        # episodes that ever left the safe box
    unsafe_entries_unshielded: int
    interventions: int                  # total overridden steps, shielded run
    intervention_rate: float            # interventions / executed shielded steps
    overhead_fraction: float            # mean shielded step time ratio - 1
    steps_to_steady_shielded: float     # mean over episodes, capped at steps
    steps_to_steady_program: float

    def as_record(self) -> dict:
        return dict(self.__dict__)


def _disturbance_corners(env: EnvironmentSpec) -> list[np.ndarray | None]:
    bounds = env.disturbance_bounds
    active = env.active_disturbance_dims()
    if not active:
        return [None]
    if len(active) > 6:
        raise ValueError("corner prediction supports at most 6 disturbance "
                         "dimensions")
    corners = []
    for signs in itertools.product((-1.0, 1.0), repeat=len(active)):
        d = np.zeros(env.n)
        for dim, sg in zip(active, signs):
            d[dim] = sg * bounds[dim]
        corners.append(d)
    return corners


def shield_step(s, env: EnvironmentSpec, oracle, sp: ShieldPolicy,
                corners=None, margin_fraction: float = 1e-3
                ) -> tuple[np.ndarray, bool]:
    """Neural action if all corner predictions stay covered, else program."""
    s = np.asarray(s, dtype=float)
    if corners is None:
        corners = _disturbance_corners(env)
    a_nn = np.atleast_1d(np.asarray(oracle(s), dtype=float))
    for d in corners:
        pred = euler_step(env, s, a_nn, d)
        if not any(cert.E.eval(pred) <= -margin_fraction * cert.scale_hint
                   for _, cert in sp.entries):
            a = shield_program_eval(sp, s)
            if isinstance(a, Abort):
                raise RuntimeError(
                    "shield fallthrough: state outside every invariant "
                    f"(invariant breach at {np.array2string(s, precision=4)})")
            return a, True
    return a_nn, False


def _steady_at(states: list[np.ndarray], env: EnvironmentSpec, cap: int,
               threshold_fraction: float = 0.05, window: int = 50) -> int:
    """First step index from which the state stays small for `window` steps;
    `cap` if it never settles (including episodes cut short by an unsafe
    state)."""
    hw = env.unsafe.safe_box.half_width
    ok = [bool(np.all(np.abs(s) <= threshold_fraction * hw)) for s in states]
    run = 0
    for t, good in enumerate(ok):
        run = run + 1 if good else 0
        if run >= window:
            return t - window + 1
    return cap


def _episode(env, act, s0, steps, dist_rng):
    """Sequential closed-loop run; returns (states, unsafe, elapsed, extras).

    `act(s) -> (action, info)`; stops early on an unsafe state.
    """
    bounds = env.disturbance_bounds
    active = env.active_disturbance_dims()
    s = np.asarray(s0, dtype=float)
    states = [s]
    infos = []
    unsafe = False
    t0 = time.perf_counter()
    for _ in range(steps):
        a, info = act(s)
        infos.append(info)
        d = None
        if active:
            d = np.zeros(env.n)
            d[active] = dist_rng.uniform(-bounds[active], bounds[active])
        s = euler_step(env, s, a, d)
        states.append(s)
        if env.unsafe.contains(s):
            unsafe = True
            break
    return states, unsafe, time.perf_counter() - t0, infos


def run_shielded(env: EnvironmentSpec, oracle, sp: ShieldPolicy,
                 episodes: int, steps: int, seed: int = 0,
                 log_path=None) -> ShieldedRunMetrics:
    """Paired shielded / unshielded / program-only runs with shared seeds."""
    if episodes < 1 or steps < 1:
        raise ValueError("episodes and steps must be >= 1")
    corners = _disturbance_corners(env)
    s0_rng = np.random.default_rng(seed)
    starts = env.s0_set.sample(s0_rng, episodes)

    unsafe_sh = unsafe_un = 0
    interventions = 0
    shielded_steps = 0
    time_sh = time_un = 0.0
    steady_sh, steady_pr = [], []
    log = open(log_path, "w") if log_path is not None else None
    if log is not None:
        log.write("episode,step,intervened," +
                  ",".join(f"s{i}" for i in range(env.n)) + "\n")
    try:
        for ep in range(episodes):
            s0 = starts[ep]

            def shielded(s):
                return shield_step(s, env, oracle, sp, corners)

            states, unsafe, dt_sh, flags = _episode(
                env, shielded, s0, steps, np.random.default_rng(seed + 7 * ep))
            unsafe_sh += unsafe
            interventions += sum(flags)
            shielded_steps += len(flags)
            time_sh += dt_sh
            steady_sh.append(_steady_at(states, env, steps))
            if log is not None:
                for t, (st, fl) in enumerate(zip(states, [False] + flags)):
                    log.write(f"{ep},{t},{int(fl)}," +
                              ",".join(f"{v:.6g}" for v in st) + "\n")

            def neural(s):
                return np.atleast_1d(np.asarray(oracle(s), dtype=float)), None

            _, unsafe, dt_un, _ = _episode(
                env, neural, s0, steps, np.random.default_rng(seed + 7 * ep))
            unsafe_un += unsafe
            time_un += dt_un

            def program(s):
                a = shield_program_eval(sp, s)
                if isinstance(a, Abort):
                    raise RuntimeError("program-only run left the invariant")
                return a, None

            states, _, _, _ = _episode(
                env, program, s0, steps, np.random.default_rng(seed + 7 * ep))
            steady_pr.append(_steady_at(states, env, steps))
    finally:
        if log is not None:
            log.close()
    return ShieldedRunMetrics(
        episodes=episodes,
        steps_per_episode=steps,
        unsafe_entries_shielded=unsafe_sh,
        unsafe_entries_unshielded=unsafe_un,
        interventions=interventions,
        intervention_rate=interventions / max(1, shielded_steps),
        overhead_fraction=time_sh / max(time_un, 1e-12) - 1.0,
        steps_to_steady_shielded=float(np.mean(steady_sh)),
        steps_to_steady_program=float(np.mean(steady_pr)))
