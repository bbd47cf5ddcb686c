"""Coverage search, the partition-and-verify loop, and shield files."""

import numpy as np
import pytest

from polyshield.cegis import (Abort, CegisConfig, CegisError, ShieldPolicy,
                              cegis, coverage_counterexample, load_shield,
                              save_shield, shield_program_eval)
from polyshield.certificate import falsify, closed_loop
from polyshield.envs import BoxSet, EnvironmentSpec, UnsafeSet
from polyshield.poly import Polynomial
from polyshield.synthesis import LinearSketch, SynthConfig


def toy_env(**kw):
    f = (Polynomial.variable(0, 2) + Polynomial.variable(1, 2),)
    defaults = dict(n=1, m=1, f=f,
                    s0_set=BoxSet.make([-1.0], [1.0]),
                    unsafe=UnsafeSet(BoxSet.make([-2.0], [2.0])),
                    dt=0.01, horizon=100)
    defaults.update(kw)
    return EnvironmentSpec(**defaults)


def unit_disc_cover():
    x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    return x * x + y * y - 1.0


def fast_cfg(**kw):
    defaults = dict(degree_bound=2,
                    synth=SynthConfig(iterations=100, rollout_length=120))
    defaults.update(kw)
    return CegisConfig(**defaults)


class TestCoverageCounterexample:
    def test_contained_box_has_no_escape(self):
        box = BoxSet.make([-0.5, -0.5], [0.5, 0.5])
        assert coverage_counterexample(box, [unit_disc_cover()],
                                       fast_cfg()) is None

    def test_large_box_escapes_near_corner(self):
        box = BoxSet.make([-2, -2], [2, 2])
        pt = coverage_counterexample(box, [unit_disc_cover()], fast_cfg())
        assert pt is not None
        assert pt @ pt > 1.0
        assert box.contains(pt)

    def test_empty_covers_returns_any_point(self):
        box = BoxSet.make([3.0], [4.0])
        pt = coverage_counterexample(box, [], fast_cfg())
        assert box.contains(pt)

    def test_union_of_covers(self):
        # two unit discs centred at x = -1 and x = 1 cover [-1.2, 1.2] x {0}
        # but miss the corners of the square
        x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
        left = (x + 1.0) * (x + 1.0) + y * y - 1.0
        right = (x - 1.0) * (x - 1.0) + y * y - 1.0
        box = BoxSet.make([-1.5, -1.5], [1.5, 1.5])
        pt = coverage_counterexample(box, [left, right], fast_cfg())
        assert pt is not None
        assert min(left.eval(pt), right.eval(pt)) > 0


class TestLoop:
    def test_toy_terminates_and_covers(self):
        env = toy_env()
        oracle = lambda s: np.array([-2.0 * s[0]])
        cfg = fast_cfg()
        sp = cegis(oracle, LinearSketch(1, 1), env, cfg)
        assert len(sp.entries) >= 1
        assert coverage_counterexample(env.s0_set,
                                       [c for _, c in sp.entries], cfg,
                                       resolution_scale=2.0) is None

    def test_every_entry_passes_falsification(self):
        env = toy_env()
        oracle = lambda s: np.array([-2.0 * s[0]])
        sp = cegis(oracle, LinearSketch(1, 1), env, fast_cfg())
        for program, cert in sp.entries:
            cx = falsify(cert.E, cert.region, env.unsafe,
                         closed_loop(env, program), samples=5000,
                         eps_num=1e-7,
                         domain=env.unsafe.safe_box.inflate(0.10),
                         contraction=cert.contraction)
            assert cx is None

    def test_deterministic(self):
        env = toy_env()
        oracle = lambda s: np.array([-2.0 * s[0]])
        sp1 = cegis(oracle, LinearSketch(1, 1), env, fast_cfg())
        sp2 = cegis(oracle, LinearSketch(1, 1), env, fast_cfg())
        assert len(sp1.entries) == len(sp2.entries)
        for (p1, c1), (p2, c2) in zip(sp1.entries, sp2.entries):
            np.testing.assert_array_equal(p1.theta, p2.theta)
            assert c1.E == c2.E

    def test_unsafe_initial_point_aborts(self):
        # S0 reaches into the unsafe region: no certificate can exist there
        env = toy_env(s0_set=BoxSet.make([1.5], [2.5]))
        oracle = lambda s: np.array([-2.0 * s[0]])
        cfg = fast_cfg(r_min=0.2, max_outer_iterations=3,
                       synth=SynthConfig(iterations=25, rollout_length=60))
        with pytest.raises(CegisError) as exc:
            cegis(oracle, LinearSketch(1, 1), env, cfg)
        assert isinstance(exc.value.partial, ShieldPolicy)

    def test_budget_abort_keeps_partial(self):
        env = toy_env(s0_set=BoxSet.make([1.5], [2.5]))
        oracle = lambda s: np.array([-2.0 * s[0]])
        cfg = fast_cfg(r_min=1e-6, max_outer_iterations=1,
                       synth=SynthConfig(iterations=10, rollout_length=40))
        with pytest.raises(CegisError):
            cegis(oracle, LinearSketch(1, 1), env, cfg)


class TestDispatch:
    def make_shield(self, toy_artifacts):
        return toy_artifacts.shield_policy

    def test_first_match_governs(self, toy_artifacts):
        sp = toy_artifacts.shield_policy
        s = np.array([0.2])
        idx = sp.dispatch(s)
        assert idx == 0
        action = shield_program_eval(sp, s)
        np.testing.assert_allclose(action, sp.entries[0][0](s))

    def test_abort_outside_all_invariants(self, toy_artifacts):
        sp = toy_artifacts.shield_policy
        result = shield_program_eval(sp, np.array([50.0]))
        assert isinstance(result, Abort)

    def test_single_entry_matches_program(self, toy_artifacts):
        sp = ShieldPolicy(toy_artifacts.shield_policy.entries[:1])
        s = np.array([-0.4])
        np.testing.assert_allclose(shield_program_eval(sp, s),
                                   sp.entries[0][0](s))


class TestSerialization:
    def test_roundtrip(self, tmp_path, toy_artifacts):
        sp = toy_artifacts.shield_policy
        path = tmp_path / "shield.json"
        save_shield(sp, path)
        loaded = load_shield(path)
        assert len(loaded.entries) == len(sp.entries)
        for (p1, c1), (p2, c2) in zip(sp.entries, loaded.entries):
            np.testing.assert_array_equal(p1.theta, p2.theta)
            assert c1.degree == c2.degree
            S = np.linspace(-2, 2, 50)[:, None]
            np.testing.assert_allclose(c1.E.eval_many(S), c2.E.eval_many(S),
                                       rtol=1e-12)

    def test_bad_version_rejected(self, tmp_path):
        path = tmp_path / "shield.json"
        path.write_text('{"version": "other", "entries": []}')
        with pytest.raises(ValueError):
            load_shield(path)
