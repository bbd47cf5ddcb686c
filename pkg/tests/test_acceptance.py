"""Acceptance suite: one criterion per test, one printed pass/fail line each.

Heavy artifacts (trained oracles, verified shields) come from the session
fixtures in conftest and are shared across criteria; the shielded-run metrics
are computed once per benchmark at the protocol scale (100 episodes x 1000
steps) and reused.
"""

import dataclasses
import sys
import time

import numpy as np
import pytest

from polyshield.certificate import (BarrierCertificate, NotFound, closed_loop,
                                    falsify, synthesize_certificate)
from polyshield.envs import BoxSet
from polyshield.poly import Monomial, Polynomial, gram_match, \
    monomials_up_to_degree
from polyshield.sdp import SdpProblem, SdpStatus, solve
from polyshield.shield import run_shielded
from polyshield.synthesis import (LinearProgramPolicy, LinearSketch,
                                  SynthConfig, synthesize)


REPORT_LINES: list = []


def report(criterion: int, ok: bool, detail: str):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    REPORT_LINES.append(line)
    print(line, file=sys.__stdout__, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def duffing_metrics(duffing_artifacts):
    b = duffing_artifacts.bench
    return run_shielded(b.env, duffing_artifacts.oracle,
                        duffing_artifacts.shield_policy,
                        episodes=100, steps=1000, seed=3)


@pytest.fixture(scope="module")
def pendulum_metrics(pendulum_artifacts):
    b = pendulum_artifacts.bench
    return run_shielded(b.env, pendulum_artifacts.oracle,
                        pendulum_artifacts.shield_policy,
                        episodes=100, steps=1000, seed=3)


def test_criterion_1_duffing_end_to_end(duffing_artifacts, duffing_metrics):
    """train -> verify loop (degree 4) -> simulate on the Duffing oscillator."""
    sp = duffing_artifacts.shield_policy
    grid = duffing_artifacts.bench.env.s0_set.grid(100)     # 10^4 samples
    covered = sp.covered_many(grid).all()
    total = duffing_artifacts.train_seconds + duffing_artifacts.cegis_seconds
    ok = (len(sp.entries) >= 1 and covered and total < 900
          and duffing_metrics.episodes == 100)
    report(1, ok, f"{len(sp.entries)} verified entries, "
                  f"10^4-grid coverage={bool(covered)}, "
                  f"train+loop={total:.0f}s (< 900s)")


def test_criterion_2_shield_soundness(duffing_metrics, pendulum_metrics):
    """Zero shielded unsafe entries; the bare pendulum oracle does fail."""
    ok = (duffing_metrics.unsafe_entries_shielded == 0
          and pendulum_metrics.unsafe_entries_shielded == 0
          and pendulum_metrics.unsafe_entries_unshielded >= 1)
    report(2, ok,
           f"shielded unsafe: duffing={duffing_metrics.unsafe_entries_shielded}"
           f" pendulum={pendulum_metrics.unsafe_entries_shielded} (exact 0); "
           f"unshielded pendulum={pendulum_metrics.unsafe_entries_unshielded}"
           " (>= 1)")


def test_criterion_3_certificate_validity(toy_artifacts, duffing_artifacts,
                                          pendulum_artifacts):
    """10^5-sample falsification per accepted certificate, plus midpoint
    convexity: the verification conditions are linear in the coefficients,
    so the average of two accepted certificates must also pass."""
    checked = 0
    worst_time = 0.0
    for art in (toy_artifacts, duffing_artifacts, pendulum_artifacts):
        env = art.bench.env
        active = env.active_disturbance_dims()
        bounds = env.disturbance_bounds[active]
        dist_box = BoxSet.make(-bounds, bounds) if active else None
        for program, cert in art.shield_policy.entries:
            t0 = time.time()
            cx = falsify(cert.E, cert.region, env.unsafe,
                         closed_loop(env, program), samples=100_000,
                         eps_num=1e-7,
                         domain=env.unsafe.safe_box.inflate(0.10),
                         dist_box=dist_box, contraction=cert.contraction)
            worst_time = max(worst_time, time.time() - t0)
            assert cx is None, (art.bench.name, cx)
            assert worst_time < 30.0
            checked += 1

    # two distinct certificates of the same toy instance and their midpoint
    env = toy_artifacts.bench.env
    program = toy_artifacts.bench.reference_program()
    e1 = synthesize_certificate(env.s0_set, env, program, 2)
    e2 = synthesize_certificate(env.s0_set, env, program, 4)
    assert isinstance(e1, BarrierCertificate)
    assert isinstance(e2, BarrierCertificate)
    assert e1.E != e2.E
    mid = (e1.E + e2.E).scale(0.5)
    cx = falsify(mid, env.s0_set, env.unsafe, closed_loop(env, program),
                 samples=100_000, eps_num=1e-7,
                 domain=env.unsafe.safe_box.inflate(0.10),
                 contraction=max(e1.contraction, e2.contraction))
    midpoint_ok = cx is None
    report(3, checked >= 3 and midpoint_ok,
           f"{checked} certificates falsification-clean at 1e5 samples "
           f"(slowest {worst_time:.1f}s < 30s); midpoint of two accepted "
           "certificates also passes")


def test_criterion_4_sos_sdp_suite(toy_artifacts):
    """Hand-checkable SOS instances plus solver quality bounds."""
    x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)

    def gram_problem(p):
        prob = SdpProblem()
        basis = [Monomial.var(0), Monomial.var(1)]
        blk = prob.add_psd_block(2)
        for c in gram_match(p, basis):
            prob.add_constraint([(blk, i, j, 1.0) for i, j in c.entries],
                                rhs=c.value)
        return solve(prob)

    sos = gram_problem(x * x + (x * y).scale(2.0) + (y * y).scale(2.0))
    not_sos = gram_problem(x * x - y * y)
    cert = toy_artifacts.shield_policy.entries[0][1]
    c2 = cert.E.coeff(Monomial.var(0, 2))
    k = -cert.E.coeff(Monomial.one()) / c2
    ok = (sos.status is SdpStatus.OPTIMAL
          and sos.min_eigenvalue() >= -1e-8 and sos.primal_residual <= 1e-6
          and not_sos.status is SdpStatus.INFEASIBLE
          and c2 > 0 and 2.0 < k < 4.0)
    report(4, ok, f"x^2+2xy+2y^2 SOS-certified, x^2-y^2 infeasible, "
                  f"toy invariant s^2 - k with k={k:.5f} in (2,4)")


def test_criterion_5_gradient_estimator():
    """Two-sided sampled difference aligns with the true gradient."""
    rng = np.random.default_rng(0)
    theta_star = np.array([1.0, -2.0, 0.5])
    theta = np.array([0.0, 0.0, 0.0])
    nu = 0.05

    def g(t):
        d = t - theta_star
        return -float(d @ d)

    est = np.zeros(3)
    for _ in range(10_000):
        delta = rng.standard_normal(3)
        est += delta * (g(theta + nu * delta) - g(theta - nu * delta)) \
            / (2.0 * nu)
    est /= 10_000
    grad = -2.0 * (theta - theta_star)
    cos = est @ grad / (np.linalg.norm(est) * np.linalg.norm(grad))
    report(5, cos >= 0.95,
           f"cosine(mean estimate, true gradient) = {cos:.4f} >= 0.95")


def test_criterion_6_distillation_convergence(toy_bench):
    """Search recovers a linear oracle; a brute-force grid agrees."""
    env = toy_bench.env
    oracle = lambda s: np.array([-2.0 * s[0]])
    cfg = SynthConfig(iterations=500, rollout_length=150, seed=0)
    program = synthesize(oracle, LinearSketch(1, 1), env, cfg)
    err = float(np.max(np.abs(program.theta - np.array([[-2.0, 0.0]]))))

    # brute force the same sampled proximity objective over a theta grid
    from polyshield.synthesis import _batched_distance
    rng = np.random.default_rng(123)
    S0 = env.s0_set.sample(rng, 20)
    best, best_theta = -np.inf, None
    for t1 in np.linspace(-3.0, -1.0, 41):
        for t0 in np.linspace(-0.5, 0.5, 21):
            cand = LinearProgramPolicy(np.array([[t1, t0]]),
                                       LinearSketch(1, 1))
            val = _batched_distance(env, oracle, cand, S0, 150, 1e4,
                                    np.random.default_rng(5))
            if val > best:
                best, best_theta = val, (t1, t0)
    grid_err = max(abs(best_theta[0] + 2.0), abs(best_theta[1]))
    ok = err <= 0.1 and grid_err <= 0.1
    report(6, ok, f"search error {err:.3f} <= 0.1 within 500 iterations; "
                  f"grid optimum at theta={best_theta} agrees")


def test_criterion_7_basis_combinatorics():
    n4 = len(monomials_up_to_degree(2, 4))
    n2 = len(monomials_up_to_degree(2, 2))
    report(7, n4 == 15 and n2 == 6,
           f"two-variable bases: degree 4 -> {n4} monomials (15), "
           f"degree 2 -> {n2} (6)")


def test_criterion_8_degree_tuning(pendulum_bench):
    """Quadratic invariants fail on the pendulum band, quartic succeed;
    a degree-8 invariant costs more to evaluate per shield step."""
    bench = pendulum_bench
    env = dataclasses.replace(bench.env, disturbance=None)
    program = bench.reference_program()
    r2 = synthesize_certificate(env.s0_set, env, program, 2)
    r4 = synthesize_certificate(env.s0_set, env, program, 4)
    r8 = synthesize_certificate(env.s0_set, env, program, 8)
    ok = isinstance(r2, NotFound) and isinstance(r4, BarrierCertificate)
    detail = (f"degree 2 {'fails' if isinstance(r2, NotFound) else 'FOUND'}, "
              f"degree 4 {'succeeds' if ok else 'fails'}")
    if isinstance(r8, BarrierCertificate):
        S = env.unsafe.safe_box.sample(np.random.default_rng(0), 2000)

        def step_cost(E):
            t0 = time.perf_counter()
            for s in S:
                E.eval(s)
            return time.perf_counter() - t0

        step_cost(r4.E)                       # warm up
        c4, c8 = step_cost(r4.E), step_cost(r8.E)
        ok = ok and c8 > c4
        detail += (f"; degree 8 succeeds with {c8 / c4:.1f}x the "
                   "per-step evaluation cost of degree 4")
    else:
        detail += "; degree 8 did not verify (cost comparison skipped)"
    report(8, ok, detail)


def test_criterion_9_performance_gap(duffing_metrics, pendulum_metrics):
    """Shielded neural policy settles no later than the program alone."""
    ok = (duffing_metrics.steps_to_steady_shielded
          <= duffing_metrics.steps_to_steady_program
          and pendulum_metrics.steps_to_steady_shielded
          <= pendulum_metrics.steps_to_steady_program)
    report(9, ok,
           "steps to steady state (shielded NN vs program): duffing "
           f"{duffing_metrics.steps_to_steady_shielded:.0f} vs "
           f"{duffing_metrics.steps_to_steady_program:.0f}, pendulum "
           f"{pendulum_metrics.steps_to_steady_shielded:.0f} vs "
           f"{pendulum_metrics.steps_to_steady_program:.0f}")
