"""Numpy value network, replay memory and the (double) DQN training loop."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import derive_rng

CHECKPOINT_VERSION = 1


class QNetwork:
    """Fully connected net: ReLU on hidden layers, identity on the output."""

    def __init__(self, weights, biases, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self.weights = [np.asarray(w, dtype=self.dtype) for w in weights]
        self.biases = [np.asarray(b, dtype=self.dtype) for b in biases]

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, dtype=np.float64) -> "QNetwork":
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            ws.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            bs.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(ws, bs, dtype)

    @classmethod
    def zeros(cls, sizes) -> "QNetwork":
        return cls([np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
                   [np.zeros(b) for b in sizes[1:]])

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def forward(self, x):
        h = np.asarray(x, dtype=self.dtype)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = h @ w
            h += b
            np.maximum(h, 0.0, out=h)
        return h @ self.weights[-1] + self.biases[-1]

    __call__ = forward

    def _activations(self, x):
        acts = [x]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(np.maximum(z, 0.0) if i < last else z)
        return acts

    def loss_and_grads(self, x, actions, targets, acts=None):
        """MSE between ``targets`` and the Q-values of the taken ``actions``
        over a batch, with gradients for every parameter.  ``acts`` may carry
        the layer activations of ``x`` when the caller already has them."""
        if acts is None:
            acts = self._activations(np.atleast_2d(np.asarray(x, dtype=self.dtype)))
        q = acts[-1]
        n = len(q)
        rows = np.arange(n)
        err = q[rows, actions] - targets
        loss = float(np.mean(err ** 2))
        delta = np.zeros_like(q)
        delta[rows, actions] = 2.0 * err / n
        gw, gb = [None] * len(self.weights), [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            gw[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return loss, gw, gb

    def sgd(self, gw, gb, lr: float) -> None:
        for w, b, dw, db in zip(self.weights, self.biases, gw, gb):
            w -= lr * dw
            b -= lr * db

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.dtype)

    def is_finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.weights + self.biases)

    def to_dict(self) -> dict:
        return {"version": CHECKPOINT_VERSION, "sizes": self.sizes, "dtype": self.dtype.name,
                "weights": [w.tolist() for w in self.weights], "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_dict(cls, data: dict) -> "QNetwork":
        if data.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data.get('version')!r}")
        return cls(data["weights"], data["biases"], data.get("dtype", "float64"))


def sync_target(online: QNetwork) -> QNetwork:
    return online.copy()


def save_checkpoint(path, net: QNetwork, meta: dict | None = None) -> None:
    data = net.to_dict()
    data["meta"] = meta or {}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)


def load_checkpoint(path) -> QNetwork:
    with open(path, encoding="utf-8") as fh:
        return QNetwork.from_dict(json.load(fh))


class ReplayMemory:
    """Ring buffer of (s, a, r, s', done)."""

    def __init__(self, capacity: int, obs_dim: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.s = np.zeros((capacity, obs_dim))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s2 = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity, dtype=bool)
        self.size = 0
        self._next = 0

    def __len__(self):
        return self.size

    @property
    def full(self) -> bool:
        return self.size == self.capacity

    def push(self, s, a, r, s2, done) -> None:
        i = self._next
        self.s[i], self.a[i], self.r[i], self.s2[i], self.done[i] = s, a, r, s2, done
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        if batch > self.size:
            raise ValueError(f"batch {batch} larger than memory size {self.size}")
        idx = rng.choice(self.size, size=batch, replace=False)
        return self.s[idx], self.a[idx], self.r[idx], self.s2[idx], self.done[idx]


def select_action(net: QNetwork, obs, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; greedy ties go to the lowest index."""
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(net.sizes[-1]))
    return int(np.argmax(net.forward(obs)))


def ddqn_target(r, s_next, done, online: QNetwork, target: QNetwork, discount: float):
    """r + w * Q_target(s', argmax_a Q_online(s', a)); bootstrap dropped at
    terminal transitions.  Works on scalars or batches."""
    s_next = np.atleast_2d(s_next)
    best = np.argmax(online.forward(s_next), axis=1)
    boot = target.forward(s_next)[np.arange(len(s_next)), best]
    out = np.asarray(r, dtype=float) + discount * boot * (1.0 - np.asarray(done, dtype=float))
    return float(out[0]) if np.ndim(r) == 0 else out


def dqn_target(r, s_next, done, target: QNetwork, discount: float):
    """r + w * max_a Q_target(s', a)."""
    s_next = np.atleast_2d(s_next)
    boot = target.forward(s_next).max(axis=1)
    out = np.asarray(r, dtype=float) + discount * boot * (1.0 - np.asarray(done, dtype=float))
    return float(out[0]) if np.ndim(r) == 0 else out


def train_step(online: QNetwork, target: QNetwork, batch, lr: float, discount: float,
               rule: str = "ddqn", batch_size: int | None = None) -> float:
    """One gradient-descent step on the MSE loss; returns the loss before the
    update."""
    s, a, r, s2, done = batch
    if batch_size is not None and len(s) < batch_size:
        raise ValueError(f"batch has {len(s)} samples, need {batch_size}")
    acts = None
    if rule == "ddqn":
        # one online pass over s and s' together: activations for the loss
        # and the argmax for the double target
        n = len(s)
        both = online._activations(np.concatenate([s, s2]).astype(online.dtype, copy=False))
        best = np.argmax(both[-1][n:], axis=1)
        boot = target.forward(s2)[np.arange(n), best]
        y = np.asarray(r, dtype=float) + discount * boot * (1.0 - np.asarray(done, dtype=float))
        acts = [layer[:n] for layer in both]
    elif rule == "dqn":
        y = dqn_target(r, s2, done, target, discount)
    else:
        raise ValueError(f"unknown target rule {rule!r}")
    loss, gw, gb = online.loss_and_grads(s, a, np.atleast_1d(y), acts)
    online.sgd(gw, gb, lr)
    return loss


@dataclass(frozen=True)
class TrainConfig:
    epsilon: float = 0.95
    epsilon_decrement: float = 1e-4  # per slot
    epsilon_floor: float = 0.01
    discount: float = 0.5
    learning_rate: float = 1e-3
    batch_size: int = 32
    memory: int = 10_000
    target_sync: int = 200  # gradient steps between target copies
    episodes: int = 300
    hidden: tuple = (128, 128)
    seed: int = 0
    dtype: str = "float32"  # network precision; float32 halves the matmul cost

    def __post_init__(self):
        if not 0 <= self.discount <= 1:
            raise ValueError("discount must lie in [0, 1]")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning rate must lie in (0, 1]")
        if self.batch_size > self.memory:
            raise ValueError("batch size cannot exceed the memory size")
        if not 0 <= self.epsilon_floor <= self.epsilon <= 1:
            raise ValueError("need 0 <= epsilon_floor <= epsilon <= 1")
        if self.episodes < 0 or self.target_sync <= 0:
            raise ValueError("episodes must be >= 0 and target_sync > 0")


@dataclass
class TrainResult:
    online: QNetwork
    target: QNetwork
    curve: list = field(default_factory=list)  # (episode, total_reward, epsilon, loss)
    train_steps: int = 0

    def policy(self):
        net = self.online
        return lambda env, obs: int(np.argmax(net.forward(obs)))


def _truncated(info) -> bool:
    return bool(info.get("truncated", False)) if isinstance(info, dict) else False


def train(env, cfg: TrainConfig, rule: str = "ddqn", online: QNetwork | None = None,
          episode_offset: int = 0) -> TrainResult:
    """Epsilon-greedy experience-replay training.

    The environment follows ``reset(episode) -> obs`` and ``step(a) -> (obs,
    reward, done, info)``.  One gradient step and one epsilon decrement are
    taken per slot (``env.steps_per_slot`` sub-steps), and only once the
    memory is full.
    """
    if rule not in ("ddqn", "dqn"):
        raise ValueError(f"unknown target rule {rule!r}")
    rng = derive_rng(cfg.seed, "agent", rule)
    if online is None:
        online = QNetwork.init([env.obs_dim, *cfg.hidden, env.n_actions], derive_rng(cfg.seed, "net"), cfg.dtype)
    target = sync_target(online)
    memory = ReplayMemory(cfg.memory, env.obs_dim)
    per_slot = getattr(env, "steps_per_slot", 1)
    eps, steps, sub = cfg.epsilon, 0, 0
    result = TrainResult(online, target)

    for ep in range(cfg.episodes):
        obs = env.reset(episode_offset + ep)
        done, total, losses = False, 0.0, []
        while not done:
            a = select_action(online, obs, eps, rng)
            nxt, r, done, info = env.step(a)
            memory.push(obs, a, r, nxt, done and not _truncated(info))
            obs, total = nxt, total + r
            sub += 1
            if sub % per_slot:
                continue
            if memory.full:
                losses.append(train_step(online, target, memory.sample(cfg.batch_size, rng),
                                         cfg.learning_rate, cfg.discount, rule))
                steps += 1
                if steps % cfg.target_sync == 0:
                    target = sync_target(online)
            eps = max(cfg.epsilon_floor, eps - cfg.epsilon_decrement)
        result.curve.append((ep, total, eps, float(np.mean(losses)) if losses else float("nan")))
    result.target, result.train_steps = target, steps
    return result


def write_curve_csv(path, curve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "total_reward", "epsilon", "loss"])
        for ep, total, eps, loss in curve:
            w.writerow([ep, f"{total:.9g}", f"{eps:.6f}", f"{loss:.9g}"])


class ToyMDP:
    """Two-state, two-action deterministic MDP for checking the learner.

    ``transitions[s][a] = (next_state, reward)``; episodes are cut after
    ``horizon`` steps without marking a terminal state.
    """

    transitions = {0: {0: (0, 0.0), 1: (1, 1.0)}, 1: {0: (0, 2.0), 1: (1, -1.0)}}
    obs_dim = 2
    n_actions = 2

    def __init__(self, horizon: int = 20, seed: int = 0):
        self.horizon = horizon
        self.seed = seed
        self.s = 0
        self.t = 0

    def _obs(self):
        o = np.zeros(2)
        o[self.s] = 1.0
        return o

    def reset(self, episode=0):
        self.s = int(derive_rng(self.seed, "toy", episode).integers(2))
        self.t = 0
        return self._obs()

    def step(self, a):
        self.s, r = self.transitions[self.s][int(a)]
        self.t += 1
        done = self.t >= self.horizon
        return self._obs(), r, done, {"truncated": done}

    @classmethod
    def q_star(cls, discount: float, tol: float = 1e-12) -> np.ndarray:
        """Value iteration."""
        q = np.zeros((2, 2))
        while True:
            new = np.array([[cls.transitions[s][a][1] + discount * q[cls.transitions[s][a][0]].max()
                             for a in range(2)] for s in range(2)])
            if np.max(np.abs(new - q)) < tol:
                return new
            q = new


__all__ = ["QNetwork", "ReplayMemory", "TrainConfig", "TrainResult", "ToyMDP", "select_action",
           "ddqn_target", "dqn_target", "train_step", "sync_target", "train", "save_checkpoint",
           "load_checkpoint", "write_curve_csv"]
