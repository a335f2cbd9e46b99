"""Numpy double deep Q-learning: network, Adam, replay buffer, exploration.

Everything runs in float64 on CPU. Networks are small (``N -> 32 -> 32 -> 5``)
so the per-step cost is dominated by numpy call overhead, not arithmetic.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .thompson import N_ACTIONS, ActionId


class NonFiniteLossError(FloatingPointError):
    pass


@dataclass(frozen=True)
class AgentHyperparams:
    gamma: float = 0.99
    tau: float = 0.01
    learning_rate: float = 0.0005
    episodes: int = 5000
    steps_per_episode: int = 32
    buffer_capacity: int = 100_000
    minibatch: int = 128
    min_minibatch: int = 25
    hidden: int = 32
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    initial_epsilon: float = 1.0
    review_period: int = 50
    # "printed": target <- tau*target + (1-tau)*online
    # "polyak":  target <- (1-tau)*target + tau*online
    soft_update_convention: str = "printed"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        for name in ("learning_rate", "episodes", "steps_per_episode", "buffer_capacity",
                     "minibatch", "min_minibatch", "hidden", "review_period"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.soft_update_convention not in ("printed", "polyak"):
            raise ValueError("soft_update_convention must be 'printed' or 'polyak'")

    def to_dict(self) -> dict:
        return asdict(self)


# -- network ------------------------------------------------------------------


class QNetwork:
    """Fully connected net with a rectifier after every layer, output included."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases):
            raise ValueError("one bias vector per weight matrix")
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)


def init_network(sizes, rng_seed) -> QNetwork:
    """Uniform Xavier weights with gain 0.5; biases uniform on [0, 1)."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        a = 0.5 * math.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-a, a, size=(n_in, n_out)))
        biases.append(rng.uniform(0.0, 1.0, size=n_out))
    return QNetwork(weights, biases)


def forward(net: QNetwork, x) -> np.ndarray:
    h = np.asarray(x, dtype=float)
    if h.shape[-1] != net.weights[0].shape[0]:
        raise ValueError(f"input width {h.shape[-1]} != network input {net.weights[0].shape[0]}")
    if not np.all(np.isfinite(h)):
        raise ValueError("non-finite network input")
    for w, b in zip(net.weights, net.biases):
        h = h @ w + b
        np.maximum(h, 0.0, out=h)
    return h


def _forward_cached(net: QNetwork, x: np.ndarray):
    acts = [x]
    h = x
    for w, b in zip(net.weights, net.biases):
        h = h @ w + b
        np.maximum(h, 0.0, out=h)
        acts.append(h)
    return acts


def td_loss_and_grads(net: QNetwork, states, actions, targets):
    """Mean squared TD error over the batch and its gradient per parameter."""
    states = np.asarray(states, dtype=float)
    acts = _forward_cached(net, states)
    q = acts[-1]
    rows = np.arange(states.shape[0])
    diff = q[rows, actions] - targets
    loss = float(np.mean(diff * diff))
    delta = np.zeros_like(q)
    delta[rows, actions] = 2.0 * diff / states.shape[0]
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        delta = delta * (acts[layer + 1] > 0.0)
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer:
            delta = delta @ net.weights[layer].T
    grads = []
    for gw, gb in zip(grads_w, grads_b):
        grads += [gw, gb]
    return loss, grads


class Adam:
    def __init__(self, params, lr=0.0005, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * math.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= scale * m / (np.sqrt(v) + self.eps)


# -- replay -------------------------------------------------------------------


class ReplayBuffer:
    """Bounded FIFO of transitions stored column-wise in preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = int(capacity)
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, state, action, reward, next_state, terminal) -> None:
        i = self._next
        self.states[i] = state
        self.actions[i] = int(action)
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.terminals[i] = terminal
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def order(self) -> np.ndarray:
        """Storage indices from oldest to newest."""
        start = (self._next - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def sample(self, rng: np.random.Generator, batch_size: int):
        """Uniform draw with replacement."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.terminals[idx])


# -- DDQN ---------------------------------------------------------------------


def ddqn_targets(online: QNetwork, target: QNetwork, rewards, next_states, terminals, gamma: float):
    """``r + gamma * Q_target(s', argmax_a Q_online(s', a))``; just ``r`` when terminal."""
    rewards = np.asarray(rewards, dtype=float)
    terminals = np.asarray(terminals, dtype=bool)
    if gamma == 0.0 or np.all(terminals):
        return rewards.copy()
    q_online = forward(online, next_states)
    best = np.argmax(q_online, axis=1)
    q_eval = forward(target, next_states)[np.arange(best.size), best]
    return np.where(terminals, rewards, rewards + gamma * q_eval)


def backward_and_step(online: QNetwork, batch, target: QNetwork, hyper: AgentHyperparams, opt: Adam) -> float:
    states, actions, rewards, next_states, terminals = batch
    if len(rewards) < 1:
        raise ValueError("empty minibatch")
    y = ddqn_targets(online, target, rewards, next_states, terminals, hyper.gamma)
    loss, grads = td_loss_and_grads(online, states, actions, y)
    if not math.isfinite(loss):
        raise NonFiniteLossError(
            f"non-finite TD loss {loss!r} at Adam step {opt.t}; "
            f"target range [{np.min(y)!r}, {np.max(y)!r}]"
        )
    opt.step(online.params, grads)
    return loss


def soft_update(target: QNetwork, online: QNetwork, tau: float, convention: str = "printed") -> QNetwork:
    """In-place blend of ``online`` into ``target``; returns ``target``."""
    if target.sizes != online.sizes:
        raise ValueError(f"shape mismatch {target.sizes} vs {online.sizes}")
    keep = tau if convention == "printed" else 1.0 - tau
    for pt, po in zip(target.params, online.params):
        pt *= keep
        pt += (1.0 - keep) * po
    return target


def greedy_action(q_values) -> ActionId:
    # np.argmax returns the first maximiser: lowest index wins ties
    return ActionId(int(np.argmax(q_values)))


def select_action(net: QNetwork, state, epsilon: float, rng: np.random.Generator) -> ActionId:
    """Epsilon-greedy; one uniform draw decides, a second picks the random action."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    if rng.random() < epsilon:
        return ActionId(int(rng.integers(N_ACTIONS)))
    return greedy_action(forward(net, state))


@dataclass
class EpsilonSchedule:
    r_initial: float
    epsilon: float = 1.0
    review_period: int = 50
    r_threshold: float = field(init=False)
    r_max: float = field(init=False)

    def __post_init__(self):
        if self.r_initial >= 1.0:
            raise ValueError("r_initial = 1 makes the epsilon update undefined")
        self.r_threshold = self.r_initial
        self.r_max = self.r_initial

    def update(self, episodes_done: int, latest_reward: float) -> "EpsilonSchedule":
        """Record an episode reward; on review points, shrink epsilon if ``r_max`` rose.

        ``episodes_done`` counts completed episodes, so the first review happens
        after episode 50.
        """
        if episodes_done < 0:
            raise ValueError("episodes_done must be >= 0")
        self.r_max = max(self.r_max, latest_reward)
        if episodes_done > 0 and episodes_done % self.review_period == 0 and self.r_max > self.r_threshold:
            self.r_threshold = self.r_max
            eps = 1.0 - (self.r_max - self.r_initial) / (1.0 - self.r_initial)
            self.epsilon = min(max(eps, 0.0), 1.0)
        return self


# -- checkpoints ----------------------------------------------------------------

_MAGIC = b"GDDQCKPT1\n"


def save_checkpoint(path, online: QNetwork, target: QNetwork, meta: dict) -> None:
    """Write ``MAGIC``, a little-endian u32 header length, a JSON header, then
    every parameter array of ``online`` and ``target`` as little-endian float64
    in C order (per layer: weights ``(n_in, n_out)`` then biases)."""
    header = dict(meta)
    header["sizes"] = online.sizes
    header["dtype"] = "<f8"
    header["order"] = "online W0 b0 W1 b1 ..., then target in the same order; C order"
    raw = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for net in (online, target):
            for p in net.params:
                fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_checkpoint(path):
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path} is not a checkpoint file")
    pos = len(_MAGIC)
    (n,) = struct.unpack("<I", data[pos: pos + 4])
    pos += 4
    header = json.loads(data[pos: pos + n])
    pos += n
    sizes = header["sizes"]
    nets = []
    for _ in range(2):
        weights, biases = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(data, dtype="<f8", count=n_in * n_out, offset=pos).reshape(n_in, n_out)
            pos += w.nbytes
            b = np.frombuffer(data, dtype="<f8", count=n_out, offset=pos)
            pos += b.nbytes
            weights.append(w.astype(float))
            biases.append(b.astype(float))
        nets.append(QNetwork(weights, biases))
    if pos != len(data):
        raise ValueError("trailing bytes in checkpoint")
    return nets[0], nets[1], header
