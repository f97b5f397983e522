import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtuav.ddqn import (QNetwork, ReplayMemory, ToyMDP, TrainConfig, ddqn_target, dqn_target, load_checkpoint,
                        save_checkpoint, select_action, sync_target, train, train_step, write_curve_csv)
from dtuav.oracles import TOY_TRAIN, gradient_check, overestimation_instance, target_rules, toy_mdp


def fixed_q(values):
    """One-layer net that outputs ``values`` for the input [1]."""
    return QNetwork([np.array([values], dtype=float)], [np.zeros(len(values))])


def test_zero_weights_give_zero_q():
    net = QNetwork.zeros([5, 8, 3])
    assert np.all(net.forward(np.ones(5)) == 0.0)


def test_identity_net():
    net = QNetwork([np.eye(1)], [np.zeros(1)])
    assert net.forward(np.array([0.7]))[0] == pytest.approx(0.7)


def test_greedy_and_tie_rule(rng):
    assert select_action(fixed_q([1.0, 3.0, 2.0]), [1.0], 0.0, rng) == 1
    assert select_action(fixed_q([2.0, 2.0, 0.0]), [1.0], 0.0, rng) == 0


def test_uniform_exploration_chi_square():
    net = fixed_q([0.0, 5.0, 1.0, 2.0])
    rng = np.random.default_rng(7)
    counts = np.bincount([select_action(net, [1.0], 1.0, rng) for _ in range(100_000)], minlength=4)
    expected = 25_000
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    assert chi2 < 16.27  # 3 dof, p = 0.001


def test_target_values():
    online = fixed_q([0.0, 5.0])
    target = fixed_q([7.0, 2.0])
    assert ddqn_target(-1.0, [[1.0]], False, online, target, 0.9) == pytest.approx(0.8)
    assert ddqn_target(-1.0, [[1.0]], True, online, target, 0.9) == -1.0
    assert dqn_target(-1.0, [[1.0]], True, target, 0.9) == -1.0


def test_double_target_below_max_target():
    online, target, s2 = overestimation_instance()
    assert ddqn_target(0.0, s2, False, online, target, 0.9) < dqn_target(0.0, s2, False, target, 0.9)
    res = target_rules()
    assert res.passed, res.detail


@given(st.floats(-10, 10), st.floats(0, 1), st.integers(0, 100))
def test_equal_nets_give_equal_targets(r, w, seed):
    net = QNetwork.init([3, 4, 2], np.random.default_rng(seed))
    s2 = np.random.default_rng(seed + 1).random((1, 3))
    assert ddqn_target(r, s2, False, net, net, w) == pytest.approx(dqn_target(r, s2, False, net, w))


def _batch(rng, n=32, dim=4, actions=3):
    return (rng.random((n, dim)), rng.integers(actions, size=n), rng.normal(size=n),
            rng.random((n, dim)), np.zeros(n))


def test_zero_error_leaves_parameters_unchanged(rng):
    net = QNetwork.init([4, 6, 3], rng)
    s, a, _, _, _ = _batch(rng)
    y = net.forward(s)[np.arange(len(s)), a]
    loss, gw, gb = net.loss_and_grads(s, a, y)
    before = net.copy()
    net.sgd(gw, gb, 0.1)
    assert loss == 0.0
    assert all(np.array_equal(w0, w1) for w0, w1 in zip(before.weights, net.weights))


def test_loss_descends_on_frozen_batch(rng):
    net = QNetwork.init([4, 16, 3], rng)
    target = net.copy()
    batch = _batch(rng)
    losses = [train_step(net, target, batch, 0.05, 0.0) for _ in range(100)]
    assert losses[-1] < losses[0]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(losses, losses[1:]))


def test_small_batch_rejected(rng):
    net = QNetwork.init([4, 6, 3], rng)
    with pytest.raises(ValueError):
        train_step(net, net.copy(), _batch(rng, n=8), 0.01, 0.5, batch_size=32)


def test_gradient_oracle():
    res = gradient_check(nets=5)
    assert res.passed, res.detail


def test_sync_is_exact_copy(rng):
    online = QNetwork.init([4, 6, 3], rng)
    target = QNetwork.init([4, 6, 3], rng)
    x = rng.random((20, 4))
    assert not np.allclose(online.forward(x), target.forward(x))
    target = sync_target(online)
    assert np.array_equal(online.forward(x), target.forward(x))
    assert np.array_equal(sync_target(target).forward(x), target.forward(x))
    online.weights[0][0, 0] += 1.0
    assert not np.array_equal(online.forward(x), target.forward(x))


def test_checkpoint_round_trip(tmp_path, rng):
    for dtype in ("float64", "float32"):
        net = QNetwork.init([4, 6, 3], rng, dtype)
        save_checkpoint(tmp_path / "c.json", net, {"design": "proposed"})
        back = load_checkpoint(tmp_path / "c.json")
        x = rng.random((5, 4))
        assert back.dtype == net.dtype
        assert np.array_equal(back.forward(x), net.forward(x))


def test_replay_memory_ring(rng):
    mem = ReplayMemory(3, 2)
    for i in range(5):
        mem.push(np.full(2, i), i % 2, float(i), np.full(2, i + 1), False)
    assert len(mem) == 3 and mem.full
    s, a, r, s2, done = mem.sample(3, rng)
    assert sorted(r) == [2.0, 3.0, 4.0]


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(discount=1.5)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=64, memory=32)
    with pytest.raises(ValueError):
        TrainConfig(epsilon=0.1, epsilon_floor=0.5)


def test_epsilon_schedule_nonincreasing_with_floor():
    res = train(ToyMDP(), TrainConfig(**{**TOY_TRAIN, "episodes": 40, "epsilon_decrement": 0.01}))
    eps = [c[2] for c in res.curve]
    assert all(b <= a for a, b in zip(eps, eps[1:]))
    assert min(eps) >= TOY_TRAIN["epsilon_floor"]
    assert eps[-1] == TOY_TRAIN["epsilon_floor"]


def test_same_seed_same_curve(tmp_path):
    cfg = TrainConfig(**{**TOY_TRAIN, "episodes": 30})
    a = train(ToyMDP(seed=1), cfg).curve
    b = train(ToyMDP(seed=1), cfg).curve
    write_curve_csv(tmp_path / "a.csv", a)
    write_curve_csv(tmp_path / "b.csv", b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_toy_mdp_reaches_q_star():
    res = toy_mdp(seeds=2)
    assert res.passed, res.detail


def test_zero_discount_learns_immediate_rewards():
    res = train(ToyMDP(), TrainConfig(**{**TOY_TRAIN, "discount": 0.0}))
    q = res.online.forward(np.eye(2))
    rewards = np.array([[0.0, 1.0], [2.0, -1.0]])
    assert np.max(np.abs(q - rewards)) <= 0.05


def test_unknown_rule():
    with pytest.raises(ValueError):
        train(ToyMDP(), TrainConfig(**TOY_TRAIN), rule="sarsa")
