"""Shipped benchmark environments with tuned presets.

Four systems: a 1-D integrator toy, the Duffing oscillator, a torque-limited
inverted pendulum restricted to a narrow angle band, and a frictionless
cart-pole.  Trigonometric dynamics are pre-expanded to cubic Taylor
polynomials so every transition is polynomial.  Each entry bundles the
environment with training, distillation, and loop presets plus a hand-tuned
reference program used by verification-focused tests and examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cegis import CegisConfig
from .envs import BoxSet, EnvironmentSpec, UnsafeSet
from .oracle import TrainConfig
from .poly import Polynomial
from .synthesis import LinearProgramPolicy, LinearSketch, SynthConfig


@dataclass
class BenchmarkDef:
    name: str
    env: EnvironmentSpec
    train: TrainConfig
    synth: SynthConfig
    cegis: CegisConfig
    hidden: tuple[int, ...] = (16,)
    action_scale: float = 10.0
    reference_theta: tuple[tuple[float, ...], ...] | None = None
    notes: str = ""

    def reference_program(self) -> LinearProgramPolicy:
        if self.reference_theta is None:
            raise ValueError(f"benchmark {self.name} has no reference program")
        return LinearProgramPolicy(np.array(self.reference_theta),
                                   LinearSketch(self.env.n, self.env.m))


def _v(i: int, nvars: int) -> Polynomial:
    return Polynomial.variable(i, nvars)


def _toy1d() -> BenchmarkDef:
    # s' = s + (s + a) dt: unstable scalar plant, safe band [-2, 2]
    f = (_v(0, 2) + _v(1, 2),)
    env = EnvironmentSpec(
        n=1, m=1, f=f,
        s0_set=BoxSet.make([-1.0], [1.0]),
        unsafe=UnsafeSet(BoxSet.make([-2.0], [2.0])),
        dt=0.01, horizon=1000, reward_name="quadratic", name="toy1d")
    return BenchmarkDef(
        name="toy1d", env=env, hidden=(8,),
        train=TrainConfig(iterations=80, horizon=200),
        synth=SynthConfig(iterations=120, rollout_length=150),
        cegis=CegisConfig(degree_bound=2,
                          synth=SynthConfig(iterations=120,
                                            rollout_length=150)),
        reference_theta=((-2.0, 0.0),),
        notes="smoke-test scale; every pipeline stage finishes in seconds")


def _duffing() -> BenchmarkDef:
    # x' = y, y' = -0.6 y - x - x^3 + a, bounded disturbance on y
    f = (_v(1, 3),
         _v(1, 3).scale(-0.6) - _v(0, 3) - _v(0, 3) * _v(0, 3) * _v(0, 3)
         + _v(2, 3))
    env = EnvironmentSpec(
        n=2, m=1, f=f,
        s0_set=BoxSet.make([-2.5, -2.0], [2.5, 2.0]),
        unsafe=UnsafeSet(BoxSet.make([-5.0, -5.0], [5.0, 5.0])),
        dt=0.01, horizon=5000, disturbance=(0.0, 0.05),
        reward_name="quadratic", name="duffing")
    return BenchmarkDef(
        name="duffing", env=env,
        train=TrainConfig(iterations=150, horizon=300),
        synth=SynthConfig(iterations=150, rollout_length=250),
        cegis=CegisConfig(degree_bound=4,
                          synth=SynthConfig(iterations=150,
                                            rollout_length=250)),
        reference_theta=((0.39, -1.41, 0.0),),
        notes="degree-4 loop typically covers S0 with two entries")


def _pendulum() -> BenchmarkDef:
    # eta' = omega, omega' = 9.8 (eta - eta^3/6) + a  (unit mass and length,
    # sin eta expanded to cubic), angle restricted to a 23-degree band
    f = (_v(1, 3),
         (_v(0, 3) - (_v(0, 3) * _v(0, 3) * _v(0, 3)).scale(1.0 / 6.0))
         .scale(9.8) + _v(2, 3))
    env = EnvironmentSpec(
        n=2, m=1, f=f,
        s0_set=BoxSet.make([-math.radians(20.0), -0.35],
                           [math.radians(20.0), 0.35]),
        unsafe=UnsafeSet(BoxSet.make([-math.radians(23.0), -math.pi / 2],
                                     [math.radians(23.0), math.pi / 2])),
        dt=0.01, horizon=5000, disturbance=(0.0, 0.05),
        reward_name="quadratic", name="pendulum")
    return BenchmarkDef(
        name="pendulum", env=env, action_scale=3.0,
        # torque limit 3 < the ~3.4 needed to recover from the worst initial
        # corner, so the trained oracle is good but not perfect; the affine
        # program has no clamp and can always recover
        train=TrainConfig(iterations=350, step_size=0.3, noise_scale=0.15,
                          rollouts_per_eval=8, horizon=400),
        synth=SynthConfig(iterations=200, rollout_length=250),
        cegis=CegisConfig(degree_bound=4,
                          synth=SynthConfig(iterations=200,
                                            rollout_length=250)),
        # underdamped gains: trajectories graze the angle bound, so a
        # quadratic invariant does not exist but a quartic one does
        reference_theta=((-12.0, -1.5, 0.0),),
        notes="tight angle band; quadratic invariants fail, quartic succeed")


def _cartpole() -> BenchmarkDef:
    # state (x, x_dot, theta, omega), force action; standard frictionless
    # cart-pole (M=1, m=0.1, l=0.5, g=9.8) with sine/cosine expanded so both
    # accelerations are cubic in (theta, omega, F)
    nv = 5
    x, xd, th, om, F = (_v(i, nv) for i in range(nv))
    th3 = th * th * th
    om2 = om * om
    thdd = (th.scale(15.77560975609756)
            + th3.scale(-3.783581201665675)
            + (th * om2).scale(-0.07317073170731707)
            + F.scale(-1.4634146341463414)
            + (F * th * th).scale(0.8387864366448543))
    xdd = (th.scale(-0.7170731707317073)
           + th3.scale(0.5305175490779298)
           + (th * om2).scale(0.04878048780487805)
           + F.scale(0.975609756097561)
           + (F * th * th).scale(-0.07138607971445568))
    env = EnvironmentSpec(
        n=4, m=1, f=(xd, xdd, om, thdd),
        s0_set=BoxSet.make([-0.05, -0.05, -0.05, -0.05],
                           [0.05, 0.05, 0.05, 0.05]),
        unsafe=UnsafeSet(BoxSet.make([-0.3, -2.0, -math.pi / 6, -2.0],
                                     [0.3, 2.0, math.pi / 6, 2.0])),
        dt=0.01, horizon=5000, reward_name="quadratic", name="cartpole")
    return BenchmarkDef(
        name="cartpole", env=env,
        train=TrainConfig(iterations=200, horizon=300),
        synth=SynthConfig(iterations=250, rollout_length=250),
        cegis=CegisConfig(degree_bound=4,
                          synth=SynthConfig(iterations=250,
                                            rollout_length=250)),
        reference_theta=((1.8, 2.9, 25.0, 5.5, 0.0),),
        notes="4-D registry entry; certificate synthesis is slow at n=4")


_BUILDERS = {
    "toy1d": _toy1d,
    "duffing": _duffing,
    "pendulum": _pendulum,
    "cartpole": _cartpole,
}


def benchmark_names() -> list[str]:
    return sorted(_BUILDERS)


def get_benchmark(name: str) -> BenchmarkDef:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; "
                       f"available: {', '.join(benchmark_names())}") from None
