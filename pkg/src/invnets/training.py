"""First-order training loop shared by every net family.

Mean-squared-error regression on paired (input, target) data with either
plain gradient descent or Adam.  Runs are a pure function of (data,
initial parameters, config): batch order comes from the package RNG, and
the best-so-far parameters by recorded loss are returned alongside the
full loss history (initial loss first, one entry per step after).
"""

import math
from dataclasses import dataclass

from invnets.backend import k
from invnets.errors import DivergenceError, ParameterError, ShapeError
from invnets.nets import Bindings
from invnets.rng import CounterRng
from invnets.tape import Tape
from invnets.tensor import Tensor


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    steps: int = 0
    optimizer: str = "adam"  # "adam" | "sgd"
    batch_size: int = 0  # 0 = full batch
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ParameterError(f"learning rate must be positive, got {self.learning_rate}")
        if self.steps < 0:
            raise ParameterError(f"steps must be nonnegative, got {self.steps}")
        if self.optimizer not in ("adam", "sgd"):
            raise ParameterError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.batch_size < 0:
            raise ParameterError(f"batch size must be nonnegative, got {self.batch_size}")


@dataclass
class TrainResult:
    params: object  # best-so-far ParamSet
    history: list  # recorded loss per step, initial first
    best_step: int  # step whose parameters are returned (0 = initial)
    final_params: object


class Optimizer:
    """Adam or plain gradient steps over the trainable entries of ParamSets."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, param_sets, grads):
        self.t += 1
        cfg = self.cfg
        for ps in param_sets:
            for name in ps.trainable_names():
                g = grads.get(name)
                if g is None:
                    continue
                p = ps.get(name)
                if cfg.optimizer == "sgd":
                    ps.set_value(name, Tensor(p.shape, k.sgd_step(p.data, g.data, cfg.learning_rate)))
                    continue
                m = self._m.get(name)
                if m is None:
                    m = self._m[name] = k.zeros(p.size)
                    self._v[name] = k.zeros(p.size)
                new = k.adam_step(
                    p.data, g.data, m, self._v[name],
                    cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, self.t,
                )
                ps.set_value(name, Tensor(p.shape, new))


def stack_columns(tensors):
    """1-D tensors of equal length -> (n, B) matrix, one column per tensor."""
    n = tensors[0].shape[0]
    cols = len(tensors)
    data = k.zeros(n * cols)
    for j, t in enumerate(tensors):
        if t.shape != (n,):
            raise ShapeError(f"stack_columns needs equal 1-D shapes, got {t.shape}")
        for i in range(n):
            data[i * cols + j] = t.data[i]
    return Tensor((n, cols), data)


def mse_loss(tape, pred, target_node):
    diff = tape.sub(pred, target_node)
    return tape.scale(tape.sumsq(diff), 1.0 / tape.value(pred).size)


def _batch_indices(n, cfg, rng):
    if cfg.batch_size == 0 or cfg.batch_size >= n:
        return list(range(n))
    order = list(range(n))
    rng.shuffle(order)
    return order[: cfg.batch_size]


def _batch_loss(net, params, pairs, vector_mode):
    """One tape evaluating the MSE of ``net`` on ``pairs``; returns all parts."""
    tape = Tape()
    bindings = Bindings(tape, params)
    if vector_mode:
        x = tape.constant(stack_columns([g for g, _ in pairs]))
        y = tape.constant(stack_columns([f for _, f in pairs]))
        pred, _ = net.forward(bindings, x)
        loss = mse_loss(tape, pred, y)
    else:
        total = None
        size = 0
        for g, f in pairs:
            x = tape.constant(g)
            pred, _ = net.forward(bindings, x)
            term = tape.sumsq(tape.sub(pred, tape.constant(f)))
            size += tape.value(pred).size
            total = term if total is None else tape.add(total, term)
        loss = tape.scale(total, 1.0 / size)
    return tape, loss


def train(net, params, data, cfg):
    """Fit ``net``'s trainable parameters to paired (input, target) data.

    Returns a TrainResult whose ``params`` are the best recorded state;
    ``history[0]`` is the initial full-data loss and ``history[i]`` the
    batch loss observed at step i (pre-update).  A non-finite loss raises
    DivergenceError with the offending step.
    """
    if not data:
        raise ParameterError("training data must be nonempty")
    net.validate(params)
    for g, _ in data:
        if g.shape != net.in_shape:
            raise ShapeError(f"sample shape {g.shape} vs net input {net.in_shape}")
    vector_mode = len(net.in_shape) == 1
    rng = CounterRng(cfg.seed)
    opt = Optimizer(cfg)

    tape, loss = _batch_loss(net, params, data, vector_mode)
    initial = tape.value(loss).item()
    if not math.isfinite(initial):
        raise DivergenceError("initial loss is not finite", 0)
    history = [initial]
    best = (initial, params.copy(), 0)

    for step in range(1, cfg.steps + 1):
        idx = _batch_indices(len(data), cfg, rng)
        pairs = [data[i] for i in idx]
        tape, loss = _batch_loss(net, params, pairs, vector_mode)
        value = tape.value(loss).item()
        if not math.isfinite(value):
            raise DivergenceError(f"loss diverged at step {step}", step)
        history.append(value)
        if value < best[0]:
            best = (value, params.copy(), step)
        grads = tape.leaf_grads(tape.backward(loss))
        opt.step([params], grads)

    return TrainResult(best[1], history, best[2], params)


def evaluate_mse(net, params, data):
    """Full-data MSE without touching parameters."""
    vector_mode = len(net.in_shape) == 1
    tape, loss = _batch_loss(net, params, data, vector_mode)
    return tape.value(loss).item()
