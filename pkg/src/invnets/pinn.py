"""Physics-informed losses and their trainer.

Five loss families over a scalar-field network u:

* explicit operator: re-apply H to the net output and penalize the data
  misfit ||g - H f_hat||^2, optionally split into a noise-weighted misfit
  plus a prior-deviation term, or the trace form whose terms are the
  traces of empirical residual/deviation covariance accumulators.
* classic regression on (t, u) samples.
* first-order dynamics (du/dt = rhs(t, u)) with the rhs known, carrying
  unknown scalar coefficients (rhs = a u + b), or modeled by a second net.
* 1-D advection (du/dt + du/dx = u) with initial- and boundary-condition
  terms on a space-time box.

Input derivatives come from the tangent-carrying forward pass, so every
loss is exactly differentiable with respect to all trainable parameters
(and the rhs coefficients).  For loss-correctness tests an
AnalyticEvaluator can stand in for a net: it supplies exact u and du
values as tape constants.
"""

import math
from array import array
from dataclasses import dataclass, field

from invnets.backend import k
from invnets.errors import DivergenceError, ParameterError, ShapeError, StructureError
from invnets.nets import Bindings, basis_tangent, forward_with_tangents
from invnets.tape import Tape
from invnets.tensor import ParamSet, Tensor
from invnets.training import Optimizer


# ------------------------------------------------------------------- models


class NetModel:
    """A (NetSpec, ParamSet) pair evaluated on batched column inputs."""

    def __init__(self, net, params):
        self.net = net
        self.params = params
        self.in_dim = net.in_shape[0]
        if len(net.in_shape) != 1:
            raise ShapeError("PINN models take vector inputs")

    def bind(self, tape):
        return _BoundNet(self, Bindings(tape, self.params))


class _BoundNet:
    def __init__(self, model, bindings):
        self.model = model
        self.bindings = bindings

    def outputs(self, x, coords=()):
        """Evaluate at points ``x`` ((d, B) tensor); returns (u, {c: du_c}).

        ``coords`` lists the input coordinates whose derivative is
        propagated in-graph.
        """
        tape = self.bindings.tape
        x_node = tape.constant(x)
        ncol = x.shape[1] if x.ndim == 2 else None
        if not coords:
            out, _ = self.model.net.forward(self.bindings, x_node)
            return out, {}
        seeds = [
            tape.constant(basis_tangent(self.model.net.in_shape, (c,), ncol))
            for c in coords
        ]
        out, tans, _ = forward_with_tangents(self.model.net, self.bindings, x_node, seeds)
        return out, dict(zip(coords, tans))


class AnalyticEvaluator:
    """Closed-form field injected in place of a net (test mode).

    ``fn(*point)`` gives u; ``grad_fns[i](*point)`` gives du/d(coord i).
    Values enter the tape as constants, so losses evaluate exactly but
    nothing is trainable.
    """

    def __init__(self, in_dim, fn, grad_fns=()):
        self.in_dim = in_dim
        self.fn = fn
        self.grad_fns = tuple(grad_fns)

    def bind(self, tape):
        return _BoundAnalytic(self, tape)


class _BoundAnalytic:
    def __init__(self, model, tape):
        self.model = model
        self.tape = tape

    def outputs(self, x, coords=()):
        d = self.model.in_dim
        if x.ndim == 1:
            cols = [[x.data[i]] for i in range(d)] if d > 1 else [list(x.data)]
            ncols = 1 if d > 1 else x.shape[0]
        else:
            ncols = x.shape[1]
            cols = [
                [x.data[i * ncols + j] for j in range(ncols)] for i in range(d)
            ]
        pts = list(zip(*cols))
        u = Tensor((1, len(pts)), array("d", (self.model.fn(*p) for p in pts)))
        out = self.tape.constant(u)
        tans = {}
        for c in coords:
            if c >= len(self.model.grad_fns):
                raise IndexError(f"no analytic derivative for coordinate {c}")
            gfn = self.model.grad_fns[c]
            dv = Tensor((1, len(pts)), array("d", (gfn(*p) for p in pts)))
            tans[c] = self.tape.constant(dv)
        return out, tans


def bind_model(model, tape):
    return model.bind(tape)


# ------------------------------------------------------------ shared pieces


def row_matrix(vec):
    """1-D tensor -> (1, n) row matrix (batched scalar signal)."""
    if vec.ndim == 2:
        return vec
    return vec.reshape((1, vec.shape[0]))


def linear_rhs(a_node, b_node):
    """rhs(t, u) = a*u + b as a tape callable."""

    def rhs(tape, t_node, u_node):
        return tape.sadd(tape.smul(u_node, a_node), b_node)

    return rhs


def _apply_operator(tape, h, f_node):
    if h.kind == "matrix":
        return tape.matmul(tape.constant(h.payload), f_node)
    if h._adjoint:
        raise ShapeError("adjoint-flagged convolution operators are not supported here")
    return tape.conv2d(f_node, tape.constant(h.payload))


@dataclass
class PinnLossStats:
    """Per-term breakdown of a physics-informed loss evaluation."""

    data_term: float = 0.0
    prior_term: float = 0.0
    physics_term: float = 0.0
    ic_term: float = 0.0
    bc_term: float = 0.0
    total: float = 0.0
    sigma_eps: Tensor | None = None
    sigma_f: Tensor | None = None


# ------------------------------------------------------- explicit-operator


def loss_explicit(tape, bound, h, g):
    """||g - H net(g)||^2 for one data tensor."""
    if g.shape != h.out_shape:
        raise ShapeError(f"data shape {g.shape} vs operator output {h.out_shape}")
    f_hat, _ = bound.outputs(g)
    g_hat = _apply_operator(tape, h, f_hat)
    return tape.sumsq(tape.sub(tape.constant(g), g_hat))


def loss_two_part(tape, bound, h, batch, sigma_eps, sigma_f, f_bar):
    """Noise-weighted data misfit plus prior deviation over a batch.

    (1/sigma_eps^2) sum_i ||g_i - H f_i||^2 + (1/sigma_f^2) sum_i ||f_i - f_bar||^2
    """
    if not batch:
        raise ParameterError("batch must be nonempty")
    if sigma_eps <= 0.0 or sigma_f <= 0.0:
        raise ParameterError("sigma_eps and sigma_f must be positive")
    data_term = None
    prior_term = None
    fbar_node = tape.constant(f_bar)
    for g in batch:
        f_hat, _ = bound.outputs(g)
        g_hat = _apply_operator(tape, h, f_hat)
        dt = tape.sumsq(tape.sub(tape.constant(g), g_hat))
        pt = tape.sumsq(tape.sub(f_hat, fbar_node))
        data_term = dt if data_term is None else tape.add(data_term, dt)
        prior_term = pt if prior_term is None else tape.add(prior_term, pt)
    total = tape.add(
        tape.scale(data_term, 1.0 / sigma_eps**2),
        tape.scale(prior_term, 1.0 / sigma_f**2),
    )
    return total, {"data": data_term, "prior": prior_term}


def loss_trace(tape, bound, h, batch, f_bar):
    """Trace of the empirical residual and deviation covariances.

    The loss node equals Tr(Sigma_eps) + Tr(Sigma_f) exactly (trace of a
    sum of outer products is the sum of squared norms); the accumulated
    covariance matrices are returned in the stats for downstream use.
    """
    if not batch:
        raise ParameterError("batch must be nonempty")
    total, terms = loss_two_part(tape, bound, h, batch, 1.0, 1.0, f_bar)
    m = h.n_out
    n = h.n_in
    sig_eps = k.zeros(m * m)
    sig_f = k.zeros(n * n)
    fbar = f_bar
    for g in batch:
        f_hat, _ = bound.outputs(g)
        g_hat = _apply_operator(tape, h, f_hat)
        r = k.sub(g.data, tape.value(g_hat).data)
        sig_eps = k.add(sig_eps, k.matmul_nt(r, r, m, 1, m))
        d = k.sub(tape.value(f_hat).data, fbar.data)
        sig_f = k.add(sig_f, k.matmul_nt(d, d, n, 1, n))
    stats = PinnLossStats(
        data_term=tape.value(terms["data"]).item(),
        prior_term=tape.value(terms["prior"]).item(),
        total=tape.value(total).item(),
        sigma_eps=Tensor((m, m), sig_eps),
        sigma_f=Tensor((n, n), sig_f),
    )
    return total, stats


# ------------------------------------------------------------ ODE losses


def ode_residual(tape, bound, t_points, rhs):
    """Residual du/dt - rhs(t, u) at each collocation time; a (1, B) node."""
    t_row = row_matrix(t_points)
    u, tans = bound.outputs(t_row, coords=(0,))
    t_node = tape.constant(t_row)
    return tape.sub(tans[0], rhs(tape, t_node, u))


def loss_classic(tape, bound, t_data, u_data):
    """Plain output-error loss sum_j (u_j - u_hat_j)^2."""
    u_hat, _ = bound.outputs(row_matrix(t_data))
    return tape.sumsq(tape.sub(u_hat, tape.constant(row_matrix(u_data))))


def loss_ode(tape, bound, t_data, u_data, t_colloc, rhs):
    """Output error plus squared dynamics residual at collocation times."""
    data = loss_classic(tape, bound, t_data, u_data)
    if t_colloc is None or t_colloc.size == 0:
        return data, {"data": data, "physics": None}
    res = ode_residual(tape, bound, t_colloc, rhs)
    phys = tape.sumsq(res)
    return tape.add(data, phys), {"data": data, "physics": phys}


def loss_parametric(tape, bound, a_node, b_node, t_data, u_data, t_colloc):
    """Dynamics loss with rhs = a u + b; gradients reach a and b too."""
    return loss_ode(tape, bound, t_data, u_data, t_colloc, linear_rhs(a_node, b_node))


def loss_nonparametric(tape, bound_u, bound_f, t_data, u_data, t_colloc):
    """Dynamics loss with the rhs modeled by a second net taking (u, t)."""
    f_model = getattr(bound_f, "model", None)
    if f_model is not None and f_model.in_dim != 2:
        raise StructureError("rhs net must take the two inputs (u, t)")
    data = loss_classic(tape, bound_u, t_data, u_data)
    if t_colloc is None or t_colloc.size == 0:
        return data, {"data": data, "physics": None}
    t_row = row_matrix(t_colloc)
    u, tans = bound_u.outputs(t_row, coords=(0,))
    stacked_shape = tape.vstack2(u, tape.constant(t_row))
    f_hat = _forward_on_node(bound_f, stacked_shape)
    res = tape.sub(tans[0], f_hat)
    phys = tape.sumsq(res)
    return tape.add(data, phys), {"data": data, "physics": phys}


def _forward_on_node(bound, x_node):
    # like bound.outputs but for an existing tape node (keeps grad path to u)
    out, _ = bound.model.net.forward(bound.bindings, x_node)
    return out


# ------------------------------------------------------------ PDE loss


def advection_residual(tape, bound, points):
    """du/dt + du/dx - u at (x, t) points given as a (2, B) tensor."""
    u, tans = bound.outputs(points, coords=(0, 1))
    return tape.sub(tape.add(tans[1], tans[0]), u)


def loss_pde(
    tape,
    bound,
    data_points=None,
    data_values=None,
    colloc_points=None,
    ic_points=None,
    ic_values=None,
    bc_points=None,
    bc_values=None,
    bc_verbatim_plus=False,
):
    """Four-term advection loss: data + physics + IC + BC.

    Any term whose point set is None is skipped.  The boundary term is
    (u_bc - u_hat)^2 by default; ``bc_verbatim_plus`` flips it to the
    plus-sign form (u_bc + u_hat)^2.
    """
    terms = {}
    total = None

    def accumulate(name, node):
        nonlocal total
        terms[name] = node
        total = node if total is None else tape.add(total, node)

    if data_points is not None:
        u_hat, _ = bound.outputs(data_points)
        accumulate(
            "data", tape.sumsq(tape.sub(u_hat, tape.constant(row_matrix(data_values))))
        )
    if colloc_points is not None:
        accumulate("physics", tape.sumsq(advection_residual(tape, bound, colloc_points)))
    if ic_points is not None:
        u_ic, _ = bound.outputs(ic_points)
        accumulate(
            "ic", tape.sumsq(tape.sub(u_ic, tape.constant(row_matrix(ic_values))))
        )
    if bc_points is not None:
        u_bc, _ = bound.outputs(bc_points)
        ref = tape.constant(row_matrix(bc_values))
        node = tape.add(u_bc, ref) if bc_verbatim_plus else tape.sub(u_bc, ref)
        accumulate("bc", tape.sumsq(node))
    if total is None:
        raise ParameterError("loss_pde needs at least one active term")
    return total, terms


# ----------------------------------------------------------- collocation


def uniform_points(lo, hi, count):
    """Deterministic uniform grid on [lo, hi] including both ends."""
    if count < 1:
        raise ParameterError(f"collocation count must be >= 1, got {count}")
    if count == 1:
        return Tensor((1,), array("d", [0.5 * (lo + hi)]))
    step = (hi - lo) / (count - 1)
    return Tensor((count,), array("d", (lo + i * step for i in range(count))))


def sampled_points(lo, hi, count, rng):
    """Seeded uniform collocation sample on [lo, hi]."""
    if count < 1:
        raise ParameterError(f"collocation count must be >= 1, got {count}")
    return Tensor((count,), array("d", (lo + (hi - lo) * rng.uniform() for _ in range(count))))


def interior_grid(x_range, t_range, nx, nt):
    """(2, nx*nt) interior collocation points of a space-time box."""
    x0, x1 = x_range
    t0, t1 = t_range
    pts = array("d", bytes(8 * 2 * nx * nt))
    b = nx * nt
    idx = 0
    for i in range(nx):
        x = x0 + (i + 1) * (x1 - x0) / (nx + 1)
        for j in range(nt):
            t = t0 + (j + 1) * (t1 - t0) / (nt + 1)
            pts[idx] = x
            pts[b + idx] = t
            idx += 1
    return Tensor((2, b), pts)


def boundary_points(axis, fixed, lo, hi, count):
    """(2, n) points with one coordinate pinned (axis 0 fixes x, 1 fixes t)."""
    var = uniform_points(lo, hi, count)
    pts = array("d", bytes(8 * 2 * count))
    for j in range(count):
        if axis == 0:
            pts[j] = fixed
            pts[count + j] = var.data[j]
        else:
            pts[j] = var.data[j]
            pts[count + j] = fixed
    return Tensor((2, count), pts)


# -------------------------------------------------------------- problems


@dataclass(frozen=True)
class OdeParametricProblem:
    """Fit (t, u) samples while inferring rhs coefficients a, b."""

    t_data: Tensor
    u_data: Tensor
    t_colloc: Tensor
    init_a: float = 0.0
    init_b: float = 0.0


@dataclass(frozen=True)
class OdeKnownRhsProblem:
    t_data: Tensor
    u_data: Tensor
    t_colloc: Tensor | None
    rhs: object  # tape callable (tape, t_node, u_node) -> node


@dataclass(frozen=True)
class OdeNonparametricProblem:
    t_data: Tensor
    u_data: Tensor
    t_colloc: Tensor


@dataclass(frozen=True)
class AdvectionPdeProblem:
    data_points: Tensor | None
    data_values: Tensor | None
    colloc_points: Tensor | None
    ic_points: Tensor | None = None
    ic_values: Tensor | None = None
    bc_points: Tensor | None = None
    bc_values: Tensor | None = None
    bc_verbatim_plus: bool = False


@dataclass(frozen=True)
class ExplicitOperatorProblem:
    h: object
    batch: tuple
    sigma_eps: float = 1.0
    sigma_f: float = 1.0
    f_bar: Tensor | None = None
    use_trace: bool = False


@dataclass
class PinnTrainResult:
    models: dict  # tag -> best ParamSet (or evaluator, unchanged)
    history: dict  # term name -> list of values per step
    best_step: int
    theta: tuple | None = None  # (a, b) at the best step, when parametric


def _loss_for(problem, tape, bounds, theta_nodes):
    if isinstance(problem, OdeParametricProblem):
        return loss_parametric(
            tape, bounds["u"], theta_nodes[0], theta_nodes[1],
            problem.t_data, problem.u_data, problem.t_colloc,
        )
    if isinstance(problem, OdeKnownRhsProblem):
        return loss_ode(
            tape, bounds["u"], problem.t_data, problem.u_data,
            problem.t_colloc, problem.rhs,
        )
    if isinstance(problem, OdeNonparametricProblem):
        return loss_nonparametric(
            tape, bounds["u"], bounds["f"],
            problem.t_data, problem.u_data, problem.t_colloc,
        )
    if isinstance(problem, AdvectionPdeProblem):
        return loss_pde(
            tape, bounds["u"],
            problem.data_points, problem.data_values,
            problem.colloc_points,
            problem.ic_points, problem.ic_values,
            problem.bc_points, problem.bc_values,
            problem.bc_verbatim_plus,
        )
    if isinstance(problem, ExplicitOperatorProblem):
        fbar = problem.f_bar
        if fbar is None:
            fbar = Tensor.zeros(problem.h.in_shape)
        if problem.use_trace:
            total, stats = loss_trace(tape, bounds["u"], problem.h, list(problem.batch), fbar)
            return total, {"data": None, "stats": stats}
        total, terms = loss_two_part(
            tape, bounds["u"], problem.h, list(problem.batch),
            problem.sigma_eps, problem.sigma_f, fbar,
        )
        return total, terms
    raise ParameterError(f"unknown problem type {type(problem).__name__}")


def train_pinn(problem, models, cfg):
    """Optimize all trainable state of a physics-informed problem.

    ``models`` maps tags to NetModel/AnalyticEvaluator instances ("u",
    plus "f" for the nonparametric variant).  For the parametric variant
    a coefficient ParamSet {a, b} is created from the problem's initial
    values.  Deterministic per config seed; the per-term loss history and
    the best-so-far state (by total loss) are returned.  A non-finite
    total raises DivergenceError with the step index.
    """
    theta_params = None
    if isinstance(problem, OdeParametricProblem):
        theta_params = ParamSet()
        theta_params.add("ode_a", Tensor.scalar(problem.init_a))
        theta_params.add("ode_b", Tensor.scalar(problem.init_b))

    param_sets = [m.params for m in models.values() if isinstance(m, NetModel)]
    names = [n for ps in param_sets for n in ps.names()]
    if theta_params is not None:
        param_sets.append(theta_params)
        names += theta_params.names()
    if len(names) != len(set(names)):
        raise StructureError(
            "parameter names must be disjoint across models; use name prefixes"
        )

    opt = Optimizer(cfg)
    history = {}
    best = None

    def record(step, total_value, terms, tape):
        history.setdefault("total", []).append(total_value)
        for name, node in terms.items():
            if name == "stats":
                continue
            v = None if node is None else tape.value(node).item()
            history.setdefault(name, []).append(v)

    n_steps = cfg.steps
    for step in range(n_steps + 1):
        tape = Tape()
        bounds = {tag: m.bind(tape) for tag, m in models.items()}
        theta_nodes = None
        if theta_params is not None:
            tb = Bindings(tape, theta_params)
            theta_nodes = (tb.node("ode_a"), tb.node("ode_b"))
        total, terms = _loss_for(problem, tape, bounds, theta_nodes)
        value = tape.value(total).item()
        if not math.isfinite(value):
            raise DivergenceError(f"loss diverged at step {step}", step)
        record(step, value, terms, tape)
        if best is None or value < best[0]:
            snap = {tag: (m.params.copy() if isinstance(m, NetModel) else m)
                    for tag, m in models.items()}
            if theta_params is not None:
                snap["theta"] = theta_params.copy()
            best = (value, snap, step)
        if step == n_steps:
            break
        grads = tape.leaf_grads(tape.backward(total))
        opt.step(param_sets, grads)

    theta = None
    if theta_params is not None:
        ts = best[1]["theta"]
        theta = (ts.get("ode_a").item(), ts.get("ode_b").item())
    return PinnTrainResult({t: v for t, v in best[1].items()}, history, best[2], theta)
