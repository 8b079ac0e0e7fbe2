"""Small feed-forward stack with exact reverse-mode gradients, on numpy only.

Three networks cover the agent: a shared trunk feeding a discrete-logits head
and a Gaussian-mean head (with a state-independent learnable log-std), and a
critic.  Forward passes cache inputs and pre-activations so the backward pass
is exact, which keeps the whole trainer dependency-free and easy to verify
against finite differences.  Parameters live in plain dicts of float64 arrays
updated in place by the Adam optimizer.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

_LOG_2PI = float(np.log(2.0 * np.pi))

_CHECKPOINT_MAGIC = b"ARISNET1"


def _act_forward(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "tanh":
        return np.tanh(z)
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "linear":
        return z
    raise ValueError(f"unknown activation tag: {tag!r}")


def _act_deriv(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if tag == "relu":
        return (z > 0.0).astype(float)
    if tag == "linear":
        return np.ones_like(z)
    raise ValueError(f"unknown activation tag: {tag!r}")


def orthogonal(rng: np.random.Generator, n_in: int, n_out: int, gain: float) -> np.ndarray:
    """Orthogonal (in, out) weight matrix scaled by `gain`."""
    a = rng.standard_normal((n_in, n_out))
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    q = u if u.shape == (n_in, n_out) else vt
    return gain * q


class Mlp:
    """Fully-connected layers; forward returns a cache for exact backward.

    Weight i maps size[i] -> size[i+1] and is stored (in, out), so a batch
    flows as x @ w + b.
    """

    def __init__(
        self,
        sizes: tuple[int, ...],
        activations: tuple[str, ...],
        rng: np.random.Generator,
        gains: tuple[float, ...] | None = None,
    ):
        if len(activations) != len(sizes) - 1:
            raise ValueError(
                f"need one activation per layer: {len(sizes) - 1} layers, "
                f"{len(activations)} activations"
            )
        if gains is None:
            gains = tuple(
                np.sqrt(2.0) if act in ("tanh", "relu") else 1.0 for act in activations
            )
        self.sizes = tuple(int(s) for s in sizes)
        self.activations = tuple(activations)
        self.weights = [
            orthogonal(rng, self.sizes[i], self.sizes[i + 1], gains[i])
            for i in range(len(self.sizes) - 1)
        ]
        self.biases = [np.zeros(self.sizes[i + 1]) for i in range(len(self.sizes) - 1)]

    @property
    def params(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.sizes[0]:
            raise ValueError(f"input width {x.shape[1]} != expected {self.sizes[0]}")
        cache = []
        for w, b, act in zip(self.weights, self.biases, self.activations):
            z = x @ w + b
            cache.append((x, z))
            x = _act_forward(act, z)
        return x, cache

    def backward(
        self, cache: list, grad_out: np.ndarray
    ) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Gradients of a scalar loss given d loss / d output; returns grad_in too."""
        if len(cache) != len(self.weights):
            raise ValueError("cache does not match this network's layer count")
        g = np.atleast_2d(np.asarray(grad_out, dtype=float))
        grads: dict[str, np.ndarray] = {}
        for i in reversed(range(len(self.weights))):
            x, z = cache[i]
            dz = g * _act_deriv(self.activations[i], z)
            grads[f"w{i}"] = x.T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            g = dz @ self.weights[i].T
        return grads, g


# ---- distributions ----------------------------------------------------------


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.atleast_2d(np.asarray(logits, dtype=float))
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def categorical_logp(logits: np.ndarray, index: np.ndarray) -> np.ndarray:
    lp = log_softmax(logits)
    index = np.atleast_1d(np.asarray(index, dtype=int))
    return lp[np.arange(lp.shape[0]), index]


def categorical_logp_grad(logits: np.ndarray, index: np.ndarray) -> np.ndarray:
    """d logp(index) / d logits, per sample: onehot - softmax."""
    p = softmax(logits)
    index = np.atleast_1d(np.asarray(index, dtype=int))
    g = -p
    g[np.arange(p.shape[0]), index] += 1.0
    return g


def categorical_entropy(logits: np.ndarray) -> np.ndarray:
    lp = log_softmax(logits)
    return -(np.exp(lp) * lp).sum(axis=-1)


def categorical_entropy_grad(logits: np.ndarray) -> np.ndarray:
    """d entropy / d logits, per sample: p * (-entropy - log p)."""
    lp = log_softmax(logits)
    p = np.exp(lp)
    h = -(p * lp).sum(axis=-1, keepdims=True)
    return p * (-h - lp)


def gaussian_logp(x: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Sum of independent Gaussian log-densities over the last axis."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mean = np.atleast_2d(np.asarray(mean, dtype=float))
    z = (x - mean) / np.exp(log_std)
    return (-0.5 * z * z - log_std - 0.5 * _LOG_2PI).sum(axis=-1)


def gaussian_logp_grad(
    x: np.ndarray, mean: np.ndarray, log_std: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(d logp / d mean, d logp / d log_std), per sample."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mean = np.atleast_2d(np.asarray(mean, dtype=float))
    inv_var = np.exp(-2.0 * log_std)
    d_mean = (x - mean) * inv_var
    d_log_std = ((x - mean) ** 2) * inv_var - 1.0
    return d_mean, d_log_std


def gaussian_entropy(log_std: np.ndarray) -> float:
    """Entropy of the diagonal Gaussian; depends on log_std only."""
    log_std = np.asarray(log_std, dtype=float)
    return float((log_std + 0.5 * (_LOG_2PI + 1.0)).sum())


# ---- policy and value networks ---------------------------------------------


@dataclass(frozen=True)
class PolicyOutput:
    """Heads of the policy for a batch: maneuver logits and Gaussian params."""

    logits: np.ndarray  # (B, num_maneuvers)
    mean: np.ndarray  # (B, cont_dim)
    log_std: np.ndarray  # (cont_dim,), already clamped


def log_prob_and_entropy(
    out: PolicyOutput, index: np.ndarray, continuous: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """(logp_discrete, logp_continuous, entropy_discrete, entropy_continuous).

    Continuous log-probs are densities of the raw (pre-squash) values.
    """
    logp_d = categorical_logp(out.logits, index)
    logp_c = gaussian_logp(continuous, out.mean, out.log_std)
    return logp_d, logp_c, categorical_entropy(out.logits), gaussian_entropy(out.log_std)


class PolicyNetwork:
    """Shared tanh trunk with a discrete head and a Gaussian head.

    With `include_value_head` the critic rides on the same trunk (one linear
    unit); otherwise a separate ValueNetwork is expected.
    """

    def __init__(
        self,
        obs_dim: int,
        cont_dim: int,
        rng: np.random.Generator,
        hidden: int = 64,
        num_maneuvers: int = 5,
        include_value_head: bool = False,
    ):
        self.obs_dim = obs_dim
        self.cont_dim = cont_dim
        self.num_maneuvers = num_maneuvers
        self.hidden = hidden
        self.trunk = Mlp((obs_dim, hidden, hidden), ("tanh", "tanh"), rng)
        # Near-zero output layers keep the initial policy close to uniform.
        self.dhead_w = orthogonal(rng, hidden, num_maneuvers, 0.01)
        self.dhead_b = np.zeros(num_maneuvers)
        self.chead_w = orthogonal(rng, hidden, cont_dim, 0.01)
        self.chead_b = np.zeros(cont_dim)
        self.log_std = np.zeros(cont_dim)
        self.vhead_w: np.ndarray | None = None
        self.vhead_b: np.ndarray | None = None
        if include_value_head:
            self.vhead_w = orthogonal(rng, hidden, 1, 1.0)
            self.vhead_b = np.zeros(1)

    @property
    def params(self) -> dict[str, np.ndarray]:
        out = {f"trunk.{k}": v for k, v in self.trunk.params.items()}
        out["dhead.w"] = self.dhead_w
        out["dhead.b"] = self.dhead_b
        out["chead.w"] = self.chead_w
        out["chead.b"] = self.chead_b
        out["log_std"] = self.log_std
        if self.vhead_w is not None:
            out["vhead.w"] = self.vhead_w
            out["vhead.b"] = self.vhead_b
        return out

    def forward(self, obs: np.ndarray) -> tuple[PolicyOutput, dict]:
        h, trunk_cache = self.trunk.forward(obs)
        out = PolicyOutput(
            logits=h @ self.dhead_w + self.dhead_b,
            mean=h @ self.chead_w + self.chead_b,
            log_std=np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX),
        )
        return out, {"trunk": trunk_cache, "h": h}

    def values_from_cache(self, cache: dict) -> np.ndarray:
        if self.vhead_w is None:
            raise ValueError("this policy network has no value head")
        return (cache["h"] @ self.vhead_w + self.vhead_b)[:, 0]

    def backward(
        self,
        cache: dict,
        d_logits: np.ndarray,
        d_mean: np.ndarray,
        d_log_std: np.ndarray,
        d_values: np.ndarray | None = None,
    ) -> dict[str, np.ndarray]:
        """Accumulate head and trunk gradients for a batch.

        d_logits/d_mean are (B, dim) per-sample gradients of the scalar loss;
        d_log_std is the already-summed (cont_dim,) gradient.
        """
        h = cache["h"]
        d_logits = np.atleast_2d(d_logits)
        d_mean = np.atleast_2d(d_mean)
        grads: dict[str, np.ndarray] = {
            "dhead.w": h.T @ d_logits,
            "dhead.b": d_logits.sum(axis=0),
            "chead.w": h.T @ d_mean,
            "chead.b": d_mean.sum(axis=0),
        }
        # Clamp is flat outside its range, so no gradient flows there.
        in_range = (self.log_std > LOG_STD_MIN) & (self.log_std < LOG_STD_MAX)
        grads["log_std"] = np.asarray(d_log_std, dtype=float) * in_range
        d_h = d_logits @ self.dhead_w.T + d_mean @ self.chead_w.T
        if d_values is not None:
            if self.vhead_w is None:
                raise ValueError("value gradient given but no value head present")
            dv = np.asarray(d_values, dtype=float)[:, None]
            grads["vhead.w"] = h.T @ dv
            grads["vhead.b"] = dv.sum(axis=0)
            d_h = d_h + dv @ self.vhead_w.T
        trunk_grads, _ = self.trunk.backward(cache["trunk"], d_h)
        grads.update({f"trunk.{k}": v for k, v in trunk_grads.items()})
        return grads


class ValueNetwork:
    """Separate critic: tanh trunk ending in one linear unit."""

    def __init__(self, obs_dim: int, rng: np.random.Generator, hidden: int = 64):
        self.obs_dim = obs_dim
        self.hidden = hidden
        self.net = Mlp(
            (obs_dim, hidden, hidden, 1),
            ("tanh", "tanh", "linear"),
            rng,
            gains=(np.sqrt(2.0), np.sqrt(2.0), 1.0),
        )

    @property
    def params(self) -> dict[str, np.ndarray]:
        return {f"critic.{k}": v for k, v in self.net.params.items()}

    def forward(self, obs: np.ndarray) -> tuple[np.ndarray, list]:
        out, cache = self.net.forward(obs)
        return out[:, 0], cache

    def backward(self, cache: list, d_values: np.ndarray) -> dict[str, np.ndarray]:
        grads, _ = self.net.backward(cache, np.asarray(d_values, dtype=float)[:, None])
        return {f"critic.{k}": v for k, v in grads.items()}


# ---- optimizer ---------------------------------------------------------------


class AdamOptimizer:
    """Standard Adam with bias correction over a dict of parameter arrays.

    Updates are in place.  A step with any non-finite gradient is skipped
    (with a warning) rather than poisoning the moments.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 2.75e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict[str, np.ndarray]) -> bool:
        """Apply one update; returns False when skipped on non-finite input."""
        for k in self.params:
            if k in grads and not np.all(np.isfinite(grads[k])):
                warnings.warn(
                    f"non-finite gradient for {k!r}; Adam step skipped", RuntimeWarning
                )
                return False
        self.step_count += 1
        bc1 = 1.0 - self.beta1**self.step_count
        bc2 = 1.0 - self.beta2**self.step_count
        for k, p in self.params.items():
            g = grads.get(k)
            if g is None:
                g = np.zeros_like(p)
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return True

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {f"adam.m.{k}": v for k, v in self.m.items()}
        out.update({f"adam.v.{k}": v for k, v in self.v.items()})
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], step_count: int) -> None:
        for k in self.m:
            self.m[k][...] = arrays[f"adam.m.{k}"]
            self.v[k][...] = arrays[f"adam.v.{k}"]
        self.step_count = int(step_count)


# ---- complexity accounting ----------------------------------------------------


def weight_multiply_count(sizes: tuple[int, ...] | list[int]) -> int:
    """Multiplications of one forward pass through a dense stack: sum of
    consecutive width products.  Equals the weight-element count."""
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be positive, got {sizes}")
    return sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))


def parameter_count(
    shared_sizes: list[int],
    discrete_sizes: list[int],
    continuous_sizes: list[int],
    critic_sizes: list[int] | None = None,
) -> dict[str, int]:
    """Weight-multiply totals per sub-network; critic reported separately.

    The actor total is the shared trunk plus both heads, matching the
    instantiated weight-matrix element counts exactly (biases excluded).
    """
    shared = weight_multiply_count(shared_sizes)
    discrete = weight_multiply_count(discrete_sizes)
    continuous = weight_multiply_count(continuous_sizes)
    out = {
        "shared": shared,
        "discrete": discrete,
        "continuous": continuous,
        "actor_total": shared + discrete + continuous,
    }
    if critic_sizes is not None:
        out["critic"] = weight_multiply_count(critic_sizes)
    return out


# ---- checkpoint I/O ------------------------------------------------------------


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Versioned binary dump: magic, JSON header, raw little-endian buffers.

    Layout: 8-byte magic, 8-byte little-endian header length, UTF-8 canonical
    JSON header {"meta": ..., "arrays": [{name, dtype, shape}...]}, then each
    array's bytes in header order.  Arrays are written sorted by name and in
    C order, so identical contents give identical files.
    """
    names = sorted(arrays)
    specs = []
    buffers = []
    for name in names:
        a = np.ascontiguousarray(arrays[name])
        if a.dtype == np.float64:
            dtype = "<f8"
        elif a.dtype == np.int64:
            dtype = "<i8"
        else:
            a = a.astype(np.float64)
            dtype = "<f8"
        a = a.astype(np.dtype(dtype), copy=False)
        specs.append({"name": name, "dtype": dtype, "shape": list(a.shape)})
        buffers.append(a.tobytes())
    header = json.dumps(
        {"meta": meta, "arrays": specs}, sort_keys=True, separators=(",", ":")
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for buf in buffers:
            fh.write(buf)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file (bad magic {magic!r})")
        header_len = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(header_len).decode())
        arrays: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            dt = np.dtype(spec["dtype"])
            buf = fh.read(count * dt.itemsize)
            arrays[spec["name"]] = np.frombuffer(buf, dtype=dt).reshape(shape).copy()
    return arrays, header["meta"]
