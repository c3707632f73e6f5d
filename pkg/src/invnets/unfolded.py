"""ISTA for l1-regularized inversion and its unfolding into a trainable net.

The solver minimizes

    J(f) = ||g - H f||^2 + l1_weight * ||f||_1

by proximal-gradient steps written in the filter/bias form

    f_{k+1} = shrink( step * H^T g + (I - step * H^T H) f_k, threshold ),

with threshold = l1_weight * step / 2 (the data term carries no 1/2, so
its gradient is 2 H^T(Hf - g) and the effective proximal scale halves).
Convergence requires step <= 1 / eigmax(H^T H), enforced via power
iteration unless explicitly overridden.

``unfold`` freezes K iterations into a network: a shared input operator
W0 = step * H^T, per-layer filters W_k = I - step * H^T H and per-layer
shrinkage thresholds.  At initialization the network reproduces K solver
iterations exactly; training then adapts the operators (all layers tied
to one filter, or each layer free).  Thresholds are trained in log space
so they stay positive.
"""

import math
from dataclasses import dataclass

from invnets.backend import k
from invnets.errors import ParameterError, ShapeError
from invnets.linop import power_iteration
from invnets.nets import Bindings
from invnets.tape import Tape
from invnets.tensor import ParamSet, Tensor, soft_threshold
from invnets.training import stack_columns, train


@dataclass(frozen=True)
class IstaConfig:
    l1_weight: float
    step_size: float | None = None  # None: 1 / eigmax(H^T H)
    max_iters: int = 200
    tol: float = 0.0  # stop when ||f_next - f||_2 <= tol
    allow_unsafe_step: bool = False

    def __post_init__(self):
        if self.l1_weight < 0.0:
            raise ParameterError(f"l1 weight must be nonnegative, got {self.l1_weight}")
        if self.step_size is not None and self.step_size <= 0.0:
            raise ParameterError(f"step size must be positive, got {self.step_size}")
        if self.max_iters < 0:
            raise ParameterError(f"max_iters must be nonnegative, got {self.max_iters}")


@dataclass
class IstaResult:
    f: Tensor
    objectives: list  # J at f_0 = 0 and after every iteration
    iterations: int
    converged: bool


def _resolve_step(h, cfg):
    lip = power_iteration(h)
    if cfg.step_size is None:
        if lip <= 0.0:
            return 1.0
        return 1.0 / lip
    if not cfg.allow_unsafe_step and cfg.step_size * lip > 1.0 + 1e-9:
        raise ParameterError(
            f"step size {cfg.step_size} exceeds the stable bound "
            f"1/eigmax(H^T H) = {1.0 / lip:.6g}; set allow_unsafe_step to override"
        )
    return cfg.step_size


def _objective(h, g, f, l1):
    r = h.apply(f) - g
    return k.dot(r.data, r.data) + l1 * k.abs_sum(f.data)


def ista_solve(h, g, cfg):
    """Iterate ISTA from f = 0; returns the estimate and objective history."""
    if g.shape != h.out_shape:
        raise ShapeError(f"data shape {g.shape} vs operator output {h.out_shape}")
    step = _resolve_step(h, cfg)
    thresh = cfg.l1_weight * step / 2.0
    f = Tensor.zeros(h.in_shape)
    objectives = [_objective(h, g, f, cfg.l1_weight)]
    bias = h.apply_adjoint(g) * step
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        z = f - h.apply_adjoint(h.apply(f)) * step + bias
        f_next = soft_threshold(z, thresh)
        objectives.append(_objective(h, g, f_next, cfg.l1_weight))
        delta = math.sqrt(k.dot(k.sub(f_next.data, f.data), k.sub(f_next.data, f.data)))
        f = f_next
        if cfg.tol > 0.0 and delta <= cfg.tol:
            converged = True
            break
    return IstaResult(f, objectives, it, converged)


class UnfoldedNet:
    """K shrinkage layers with a shared input operator.

    Parameter names: "W0" (input operator), "W" or "W1..WK" (filters,
    tied/untied), "log_theta" or "log_theta1..K" (log thresholds).
    """

    def __init__(self, n_layers, tied, in_dim, out_dim):
        if n_layers < 1:
            raise ParameterError(f"layer count must be >= 1, got {n_layers}")
        self.n_layers = n_layers
        self.tied = tied
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.in_shape = (in_dim,)

    def filter_name(self, layer):
        return "W" if self.tied else f"W{layer + 1}"

    def threshold_name(self, layer):
        return "log_theta" if self.tied else f"log_theta{layer + 1}"

    def param_names(self):
        names = ["W0"]
        for kk in range(self.n_layers):
            for n in (self.filter_name(kk), self.threshold_name(kk)):
                if n not in names:
                    names.append(n)
        return names

    def validate(self, params):
        for name in self.param_names():
            if name not in params:
                raise ShapeError(f"missing unfolded parameter {name!r}")
        if params.get("W0").shape != (self.out_dim, self.in_dim):
            raise ShapeError("W0 must map data space to estimate space")
        return (self.out_dim,)

    def forward(self, bindings, g_node):
        """Batched forward pass; g may be (m,) or (m, B)."""
        tape = bindings.tape
        bias = tape.matmul(bindings.node("W0"), g_node)
        f = None
        outs = []
        for layer in range(self.n_layers):
            theta = tape.exp(bindings.node(self.threshold_name(layer)))
            if f is None:
                z = bias
            else:
                z = tape.add(tape.matmul(bindings.node(self.filter_name(layer)), f), bias)
            f = tape.soft_threshold(z, theta)
            outs.append(f)
        return f, outs


def unfold(h, n_layers, cfg, tied=True):
    """Freeze ``n_layers`` ISTA iterations of ``h`` into an UnfoldedNet.

    The returned (net, params) reproduce the truncated solver exactly at
    initialization, for any data batch.
    """
    if n_layers < 1:
        raise ParameterError(f"layer count must be >= 1, got {n_layers}")
    if cfg.l1_weight <= 0.0:
        raise ParameterError("unfolding requires a positive l1 weight")
    step = _resolve_step(h, cfg)
    thresh = cfg.l1_weight * step / 2.0
    m, n = h.n_out, h.n_in
    hmat = h.materialize()
    w0 = Tensor((n, m), k.scale(hmat.transpose().data, step))
    gram = k.matmul_tn(hmat.data, hmat.data, m, n, n)
    wdata = k.scale(gram, -step)
    for i in range(n):
        wdata[i * n + i] += 1.0
    w = Tensor((n, n), wdata)
    log_theta = Tensor.scalar(math.log(thresh))

    net = UnfoldedNet(n_layers, tied, m, n)
    params = ParamSet()
    params.add("W0", w0)
    if tied:
        params.add("W", w)
        params.add("log_theta", log_theta)
    else:
        for kk in range(n_layers):
            params.add(f"W{kk + 1}", w)
            params.add(f"log_theta{kk + 1}", log_theta)
    return net, params


def unfolded_apply(net, params, g):
    """Plain forward pass for a single data vector or a (m, B) batch."""
    tape = Tape()
    bindings = Bindings(tape, params)
    out, _ = net.forward(bindings, tape.constant(g))
    return tape.value(out)


def unfolded_mse(net, params, data):
    """Mean squared error against ground truth over (g, f*) pairs."""
    g = stack_columns([p[0] for p in data])
    f_true = stack_columns([p[1] for p in data])
    pred = unfolded_apply(net, params, g)
    diff = k.sub(pred.data, f_true.data)
    return k.dot(diff, diff) / len(diff)


def lista_train(net, params, data, cfg, eval_data=None):
    """Supervised training of an unfolded net on (g, f*) pairs.

    Returns (TrainResult, metrics) where metrics has the per-step training
    loss and, when ``eval_data`` is given, before/after MSE on it.
    """
    initial = params.copy()
    result = train(net, params, data, cfg)
    metrics = {"history": result.history}
    if eval_data is not None:
        metrics["eval_mse_initial"] = unfolded_mse(net, initial, eval_data)
        metrics["eval_mse_trained"] = unfolded_mse(net, result.params, eval_data)
    return result, metrics
