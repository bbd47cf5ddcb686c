"""Counterexample-guided assembly of a guarded shield program.

The outer loop keeps a union of verified invariants (the cover), searches the
initial box for a point outside the cover, restricts the initial set to a
shrinking box around that point, distills a program for the restricted
environment, and tries to certify it.  Verified (program, certificate) pairs
accumulate in synthesis order; dispatch at runtime is first-match over the
invariants.  The loop ends when no sampled point of the initial set escapes
the cover.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import certificate as cert_mod
from .certificate import BarrierCertificate, CertConfig, _refine
from .envs import BoxSet, EnvironmentSpec
from .poly import DimensionError, Polynomial
from .synthesis import (LinearProgramPolicy, LinearSketch, SynthConfig,
                        synthesize)


@dataclass(frozen=True)
class Abort:
    """Typed fallthrough result: the state satisfied no entry's invariant."""

    state: np.ndarray


@dataclass
class ShieldPolicy:
    """Ordered (program, certificate) entries; the first entry whose
    invariant holds at a state governs it."""

    entries: list[tuple[LinearProgramPolicy, BarrierCertificate]]

    @property
    def n(self) -> int:
        return self.entries[0][0].sketch.n

    def covers(self) -> list[Polynomial]:
        return [c.E for _, c in self.entries]

    def dispatch(self, s) -> int | None:
        """Index of the governing entry, or None if no invariant holds."""
        s = np.asarray(s, dtype=float)
        for i, (_, cert) in enumerate(self.entries):
            if cert.holds(s):
                return i
        return None

    def covered_many(self, S: np.ndarray) -> np.ndarray:
        out = np.zeros(S.shape[0], dtype=bool)
        for _, cert in self.entries:
            out |= cert.holds_many(S)
        return out


def shield_program_eval(sp: ShieldPolicy, s) -> np.ndarray | Abort:
    """First-match action of the guarded program; Abort iff no guard holds."""
    s = np.asarray(s, dtype=float)
    if sp.entries and s.shape != (sp.n,):
        raise DimensionError("state dimension mismatch")
    i = sp.dispatch(s)
    if i is None:
        return Abort(s)
    return sp.entries[i][0](s)


@dataclass
class CegisConfig:
    degree_bound: int = 4
    max_outer_iterations: int = 12
    r_min: float = 1e-3                 # componentwise radius floor
    coverage_grid: int = 25             # grid points per dimension
    coverage_samples: int = 2000        # extra uniform random probes
    synth: SynthConfig = field(default_factory=SynthConfig)
    cert: CertConfig = field(default_factory=CertConfig)
    seed: int = 0

    def __post_init__(self):
        if self.r_min <= 0:
            raise ValueError("r_min must be > 0")
        if self.degree_bound < 2 or self.degree_bound % 2 != 0:
            raise ValueError("degree bound must be even and >= 2")


class CegisError(RuntimeError):
    """Loop abort; `partial` carries the entries verified so far."""

    def __init__(self, reason: str, partial: ShieldPolicy):
        super().__init__(reason)
        self.reason = reason
        self.partial = partial


def coverage_counterexample(s0_set: BoxSet, covers, cfg: CegisConfig,
                            seed: int | None = None,
                            resolution_scale: float = 1.0
                            ) -> np.ndarray | None:
    """A point of s0_set outside every cover (min_i E_i > 0), or None.

    Searches a dense grid plus uniform random probes, then runs coordinate
    ascent on min_i E_i from the best candidate.  With no covers yet, any
    point qualifies, so the choice is uniformly random.  Sampling-based and
    therefore incomplete; callers re-check at doubled resolution.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    polys = [c.E if isinstance(c, BarrierCertificate) else c for c in covers]
    if not polys:
        return s0_set.sample(rng)

    def min_e_many(S):
        return np.min(np.stack([p.eval_many(S) for p in polys]), axis=0)

    per_dim = max(2, round(cfg.coverage_grid * resolution_scale))
    count = max(1, round(cfg.coverage_samples * resolution_scale))
    points = np.vstack([s0_set.grid(per_dim), s0_set.sample(rng, count)])
    vals = min_e_many(points)
    best = int(np.argmax(vals))
    if vals[best] <= 0.0:
        # no sampled escape; try to push the best candidate out by ascent
        x, v = _refine(lambda s: min_e_many(s[None, :])[0], points[best],
                       s0_set.lo, s0_set.hi)
        return x if v > 0.0 else None
    return points[best]


def cegis(oracle, sketch: LinearSketch, env: EnvironmentSpec,
          cfg: CegisConfig) -> ShieldPolicy:
    """Partition the initial set until verified programs cover it.

    Each outer iteration pins an uncovered initial point, restricts the
    initial box to that point plus/minus a per-dimension radius (starting at
    the full half-width, halved componentwise on verification failure),
    distills a program on the restriction, and certifies it.  Raises
    CegisError when the radius hits the floor (the sketch is insufficient or
    the point is effectively unsafe) or the iteration budget runs out.
    """
    entries: list[tuple[LinearProgramPolicy, BarrierCertificate]] = []
    s0_set = env.s0_set
    for outer in range(cfg.max_outer_iterations):
        s0 = coverage_counterexample(s0_set, [c for _, c in entries], cfg,
                                     seed=cfg.seed + outer)
        if s0 is None:
            return ShieldPolicy(entries)
        r = s0_set.half_width.copy()
        inner = 0
        while True:
            region = s0_set.intersect(BoxSet.make(s0 - r, s0 + r))
            assert region is not None
            env_r = env.restrict_s0(region)
            synth_cfg = dataclasses.replace(
                cfg.synth, seed=cfg.synth.seed + 101 * outer + inner)
            program = synthesize(oracle, sketch, env_r, synth_cfg)
            result = cert_mod.synthesize_certificate(
                region, env, program, cfg.degree_bound, cfg.cert)
            if isinstance(result, BarrierCertificate):
                entries.append((program, result))
                break
            r = r / 2.0
            inner += 1
            if np.max(r) < cfg.r_min:
                raise CegisError(
                    "radius floor reached around "
                    f"{np.array2string(s0, precision=4)}: sketch insufficient "
                    "or unsafe initial state "
                    f"(last verifier answer: {result.reason})",
                    ShieldPolicy(entries))
    final = coverage_counterexample(s0_set, [c for _, c in entries], cfg,
                                    seed=cfg.seed + cfg.max_outer_iterations)
    if final is None:
        return ShieldPolicy(entries)
    raise CegisError("outer iteration budget exhausted before full coverage",
                     ShieldPolicy(entries))


# -- shield files ------------------------------------------------------

SHIELD_VERSION = "polyshield-shield-1"


def save_shield(sp: ShieldPolicy, path) -> None:
    entries = []
    for program, cert in sp.entries:
        entries.append({
            "theta": program.theta.tolist(),
            "includes_bias": program.sketch.includes_bias,
            "invariant": cert.E.to_string(),
            "degree": cert.degree,
            "epsilon": cert.epsilon,
            "region_lo": cert.region.lo.tolist(),
            "region_hi": cert.region.hi.tolist(),
            "contraction": cert.contraction,
            "mult_degree": cert.mult_degree,
            "scale_hint": cert.scale_hint,
        })
    with open(path, "w") as fh:
        json.dump({"version": SHIELD_VERSION, "entries": entries}, fh,
                  indent=2)


def load_shield(path) -> ShieldPolicy:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("version") != SHIELD_VERSION:
        raise ValueError("not a recognized shield file")
    entries = []
    for e in data["entries"]:
        theta = np.asarray(e["theta"], dtype=float)
        m, cols = theta.shape
        n = cols - (1 if e["includes_bias"] else 0)
        program = LinearProgramPolicy(
            theta, LinearSketch(n, m, e["includes_bias"]))
        cert = BarrierCertificate(
            E=Polynomial.from_string(e["invariant"], n),
            degree=int(e["degree"]),
            epsilon=float(e["epsilon"]),
            region=BoxSet.make(e["region_lo"], e["region_hi"]),
            contraction=float(e["contraction"]),
            mult_degree=int(e["mult_degree"]),
            scale_hint=float(e["scale_hint"]))
        entries.append((program, cert))
    return ShieldPolicy(entries)
