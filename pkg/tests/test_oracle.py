"""Neural oracle: forward pass, flat parameters, reward, training, files."""

import numpy as np
import pytest

from polyshield.envs import BoxSet, EnvironmentSpec, UnsafeSet
from polyshield.oracle import (TrainConfig, cumulative_reward, init_policy,
                               load_weights, save_weights, train, zero_policy)
from polyshield.poly import Polynomial


def toy_env(**kw):
    f = (Polynomial.variable(0, 2) + Polynomial.variable(1, 2),)
    defaults = dict(n=1, m=1, f=f,
                    s0_set=BoxSet.make([-1.0], [1.0]),
                    unsafe=UnsafeSet(BoxSet.make([-2.0], [2.0])),
                    dt=0.01, horizon=200)
    defaults.update(kw)
    return EnvironmentSpec(**defaults)


class TestForward:
    def test_zero_policy_outputs_zero(self):
        p = zero_policy([2, 4, 1], 5.0)
        np.testing.assert_allclose(p(np.array([0.3, -0.7])), [0.0])

    def test_output_clamped(self):
        p = zero_policy([1, 1], 2.0)
        p.biases[-1][:] = 100.0
        assert p(np.array([0.0]))[0] == pytest.approx(2.0)
        p.biases[-1][:] = -100.0
        assert p(np.array([0.0]))[0] == pytest.approx(-2.0)

    def test_forward_many_matches_forward(self):
        p = init_policy([2, 8, 1], 10.0, seed=5)
        rng = np.random.default_rng(6)
        S = rng.normal(size=(25, 2))
        many = p.forward_many(S)
        for k in range(25):
            np.testing.assert_allclose(many[k], p(S[k]), rtol=1e-12)

    def test_single_layer_is_linear_inside_clamp(self):
        p = zero_policy([1, 1], 100.0)
        p.weights[0][0, 0] = -2.0
        assert p(np.array([0.5]))[0] == pytest.approx(-1.0)

    def test_nonfinite_input_rejected(self):
        p = zero_policy([1, 1], 1.0)
        with pytest.raises(ValueError):
            p(np.array([np.nan]))


class TestFlatParameters:
    def test_roundtrip(self):
        p = init_policy([2, 4, 1], 10.0, seed=7)
        q = p.with_flat(p.get_flat())
        for W1, W2 in zip(p.weights, q.weights):
            np.testing.assert_array_equal(W1, W2)
        for b1, b2 in zip(p.biases, q.biases):
            np.testing.assert_array_equal(b1, b2)

    def test_flat_length(self):
        p = init_policy([2, 4, 1], 10.0, seed=8)
        assert p.get_flat().size == 2 * 4 + 4 * 1 + 4 + 1


class TestReward:
    def test_hand_value_two_steps(self):
        env = toy_env()
        policy = zero_policy([1, 1], 10.0)
        # uncontrolled: s0=0.5 -> 0.505 -> 0.51005; reward sums -s_t^2
        r = cumulative_reward(env, policy, np.array([[0.5]]), 2)
        assert r[0] == pytest.approx(-(0.5 ** 2) - (0.505 ** 2))

    def test_action_cost_weighted(self):
        env = toy_env()

        class Const:
            def __call__(self, s):
                return np.array([2.0])

        r = cumulative_reward(env, Const(), np.array([[0.0]]), 1)
        # one step from the origin: -0 - 0.01 * 2^2
        assert r[0] == pytest.approx(-0.04)

    def test_unsafe_exit_pays_more_than_surviving(self):
        env = toy_env()
        policy = zero_policy([1, 1], 10.0)    # uncontrolled, diverges
        stabilized = zero_policy([1, 1], 10.0)
        stabilized.weights[0][0, 0] = -2.0
        r_dead = cumulative_reward(env, policy, np.array([[1.5]]), 200)
        r_alive = cumulative_reward(env, stabilized, np.array([[1.5]]), 200)
        assert r_dead < r_alive


class TestTrain:
    def test_deterministic(self):
        env = toy_env()
        cfg = TrainConfig(iterations=15, horizon=60, seed=3)
        r1 = train(env, [4], cfg)
        r2 = train(env, [4], cfg)
        np.testing.assert_array_equal(r1.policy.get_flat(),
                                      r2.policy.get_flat())
        assert r1.curve == r2.curve

    def test_curve_is_best_so_far(self):
        env = toy_env()
        res = train(env, [4], TrainConfig(iterations=25, horizon=60, seed=3))
        assert all(b >= a for a, b in zip(res.curve, res.curve[1:]))

    def test_improves_on_toy(self):
        env = toy_env()
        res = train(env, [8], TrainConfig(iterations=60, horizon=150, seed=0))
        assert res.curve[-1] > res.curve[0]


class TestWeightFiles:
    def test_roundtrip_exact(self, tmp_path):
        p = init_policy([2, 4, 1], 10.0, seed=9)
        path = tmp_path / "w.txt"
        save_weights(p, path)
        q = load_weights(path)
        assert q.layer_dims == p.layer_dims
        rng = np.random.default_rng(10)
        for s in rng.normal(size=(10, 2)):
            np.testing.assert_array_equal(q(s), p(s))

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("not a weight file\n")
        with pytest.raises(ValueError):
            load_weights(path)

    def test_rejects_truncated(self, tmp_path):
        p = init_policy([2, 4, 1], 10.0, seed=9)
        path = tmp_path / "w.txt"
        save_weights(p, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]))
        with pytest.raises(ValueError):
            load_weights(path)
