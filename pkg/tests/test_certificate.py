"""Barrier certificates: closed-loop composition, SOS conditions, search."""

import numpy as np
import pytest

from polyshield.certificate import (BarrierCertificate, Counterexample,
                                    InvariantSketch, NotFound, build_vcs,
                                    closed_loop, falsify,
                                    synthesize_certificate)
from polyshield.envs import BoxSet, EnvironmentSpec, UnsafeSet
from polyshield.poly import Monomial, Polynomial
from polyshield.sdp import SdpStatus, solve
from polyshield.synthesis import LinearProgramPolicy, LinearSketch


def toy_env(**kw):
    f = (Polynomial.variable(0, 2) + Polynomial.variable(1, 2),)
    defaults = dict(n=1, m=1, f=f,
                    s0_set=BoxSet.make([-1.0], [1.0]),
                    unsafe=UnsafeSet(BoxSet.make([-2.0], [2.0])),
                    dt=0.01, horizon=100)
    defaults.update(kw)
    return EnvironmentSpec(**defaults)


def program(*rows):
    theta = np.atleast_2d(np.array(rows))
    return LinearProgramPolicy(theta, LinearSketch(theta.shape[1] - 1,
                                                   theta.shape[0]))


class TestClosedLoop:
    def test_toy_composition(self):
        # a = -2s: s' = s + (s - 2s) dt = 0.99 s
        env = toy_env()
        next_polys = closed_loop(env, program([-2.0, 0.0]))
        assert len(next_polys) == 1
        assert next_polys[0].nvars == 1
        assert next_polys[0].coeff(Monomial.var(0)) == pytest.approx(0.99)

    def test_disturbance_appends_variables(self):
        env = toy_env(disturbance=(0.1,))
        next_polys = closed_loop(env, program([-2.0, 0.0]))
        assert next_polys[0].nvars == 2
        # d enters as + dt * d
        assert next_polys[0].coeff(Monomial.var(1)) == pytest.approx(0.01)

    def test_bias_becomes_constant(self):
        env = toy_env()
        next_polys = closed_loop(env, program([-2.0, 0.5]))
        assert next_polys[0].coeff(Monomial.one()) == pytest.approx(0.005)


class TestSketch:
    def test_even_degree_required(self):
        with pytest.raises(ValueError):
            InvariantSketch.make(2, 3)

    def test_build_matches_unknown_count(self):
        sk = InvariantSketch.make(2, 4)
        assert sk.unknowns == 15
        c = np.zeros(15)
        c[0] = -1.0
        E = sk.build(c)
        assert E.eval(np.zeros(2)) == pytest.approx(-1.0)


class TestBuildVcs:
    def test_toy_program_solves_with_positive_margin(self):
        env = toy_env()
        next_polys = closed_loop(env, program([-2.0, 0.0]))
        sketch = InvariantSketch.make(1, 2)
        domain = env.unsafe.safe_box.inflate(0.10)
        prog = build_vcs(env.s0_set, env.unsafe, next_polys, sketch,
                         mult_degree=0, epsilon=1e-3, domain=domain,
                         contraction=0.999)
        sol = solve(prog.problem)
        assert sol.status is SdpStatus.OPTIMAL
        assert prog.margin(sol) > 0
        # every SOS identity must reconstruct to the matched target
        for meta in prog.constraints:
            target = meta.target(prog.extract_coeffs(sol), prog.margin(sol))
            recon = meta.reconstruct(sol)
            diff = target - recon
            assert diff.max_abs_coeff() <= 1e-6 * max(
                1.0, target.max_abs_coeff())

    def test_odd_multiplier_degree_rejected(self):
        env = toy_env()
        next_polys = closed_loop(env, program([-2.0, 0.0]))
        with pytest.raises(ValueError):
            build_vcs(env.s0_set, env.unsafe, next_polys,
                      InvariantSketch.make(1, 2), mult_degree=1,
                      epsilon=1e-3, domain=env.unsafe.safe_box)


class TestFalsify:
    def setup_method(self):
        self.env = toy_env()
        self.next = closed_loop(self.env, program([-2.0, 0.0]))
        self.domain = self.env.unsafe.safe_box.inflate(0.10)

    def test_planted_violation_on_unsafe_side(self):
        # E = s^2 - 9 is negative at s = 2.1, inside the unsafe half-space
        E = Polynomial.variable(0, 1).pow(2) - 9.0
        cx = falsify(E, self.env.s0_set, self.env.unsafe, self.next,
                     samples=2000, eps_num=1e-7, domain=self.domain)
        assert isinstance(cx, Counterexample)
        assert cx.condition == "unsafe-positivity"

    def test_planted_violation_on_initial_set(self):
        E = Polynomial.variable(0, 1).pow(2).scale(10.0) - 1.0
        cx = falsify(E, self.env.s0_set, self.env.unsafe, self.next,
                     samples=2000, eps_num=1e-7, domain=self.domain)
        assert cx is not None
        assert cx.condition == "initial-containment"

    def test_planted_induction_violation(self):
        # expanding uncontrolled dynamics break non-increase of s^2 - 3.6
        growing = closed_loop(self.env, program([0.0, 0.0]))
        E = Polynomial.variable(0, 1).pow(2) - 3.6
        cx = falsify(E, self.env.s0_set, self.env.unsafe, growing,
                     samples=4000, eps_num=1e-7, domain=self.domain,
                     contraction=0.999)
        assert cx is not None
        assert cx.condition == "induction"

    def test_valid_certificate_passes(self):
        E = Polynomial.variable(0, 1).pow(2).scale(13.6) - 34.0
        cx = falsify(E, self.env.s0_set, self.env.unsafe, self.next,
                     samples=5000, eps_num=1e-7, domain=self.domain,
                     contraction=0.999)
        assert cx is None


class TestSynthesizeCertificate:
    def test_toy_quadratic_found(self):
        env = toy_env()
        result = synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]),
                                        degree_bound=2)
        assert isinstance(result, BarrierCertificate)
        assert result.degree == 2
        # E proportional to s^2 - k with 2 < k < 4
        c2 = result.E.coeff(Monomial.var(0, 2))
        c0 = result.E.coeff(Monomial.one())
        assert c2 > 0
        k = -c0 / c2
        assert 2.0 < k < 4.0
        assert result.holds(np.array([1.0]))
        assert not result.holds(np.array([2.0]))

    def test_unstable_program_not_certified(self):
        env = toy_env()
        result = synthesize_certificate(env.s0_set, env, program([1.0, 0.0]),
                                        degree_bound=2)
        assert isinstance(result, NotFound)

    def test_odd_degree_rejected(self):
        env = toy_env()
        with pytest.raises(ValueError):
            synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]),
                                   degree_bound=3)

    def test_restricted_region_recorded(self):
        env = toy_env()
        region = BoxSet.make([-0.5], [0.5])
        result = synthesize_certificate(region, env, program([-2.0, 0.0]),
                                        degree_bound=2)
        assert isinstance(result, BarrierCertificate)
        np.testing.assert_allclose(result.region.lo, region.lo)
        S = region.sample(np.random.default_rng(0), 200)
        assert result.holds_many(S).all()

    def test_deterministic(self):
        env = toy_env()
        r1 = synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]), 2)
        r2 = synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]), 2)
        assert r1.E == r2.E

    def test_holds_many_matches_holds(self):
        env = toy_env()
        cert = synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]), 2)
        S = np.linspace(-2.5, 2.5, 101)[:, None]
        np.testing.assert_array_equal(cert.holds_many(S),
                                      [cert.holds(s) for s in S])


class TestDisturbance:
    def test_toy_certified_with_disturbance(self):
        env = toy_env(disturbance=(0.05,))
        result = synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]),
                                        degree_bound=2)
        assert isinstance(result, BarrierCertificate)

    def test_overwhelming_disturbance_rejected(self):
        # disturbance larger than the stabilizing pull near the boundary
        env = toy_env(disturbance=(5.0,))
        result = synthesize_certificate(env.s0_set, env, program([-2.0, 0.0]),
                                        degree_bound=2)
        assert isinstance(result, NotFound)
