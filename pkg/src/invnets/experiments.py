"""Registered end-to-end experiments.

Every experiment is a pure function of (config, seed): inputs are built
procedurally from the seeded package RNG, outputs are written under one
directory, and a ``manifest.txt`` lists each emitted file with its SHA-256
digest.  Running the same config and seed twice reproduces every digest.
"""

import hashlib
import math
import os
from array import array

from invnets import config as cfglib
from invnets.acoustics import ArrayGeometry, acoustic_synthesize, beamformer_psf, delay_and_sum
from invnets.bayes import map_estimate
from invnets.builders import build_analytic_net, build_transform_net
from invnets.errors import ConfigError
from invnets.forward_models import (
    IRParams,
    gaussian_psf,
    ir_forward,
    ir_phi,
    ir_phi_floor,
    ir_phi_inverse,
)
from invnets.imageio import write_csv_matrix, write_csv_table, write_pgm
from invnets.linop import LinearOp, conv1d_matrix
from invnets.nets import Bindings, NetSpec, init_mlp
from invnets.pinn import (
    AdvectionPdeProblem,
    NetModel,
    OdeParametricProblem,
    boundary_points,
    interior_grid,
    train_pinn,
    uniform_points,
)
from invnets.rng import CounterRng
from invnets.serialize import save_state
from invnets.tape import Tape
from invnets.tensor import ParamSet, Tensor
from invnets.training import TrainConfig, evaluate_mse, train
from invnets.unfolded import IstaConfig, ista_solve, lista_train, unfold, unfolded_mse


class RunContext:
    def __init__(self, out_dir, seed):
        self.out_dir = out_dir
        self.seed = seed
        self.files = []

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out_dir, name)


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def run_experiment(cfg, out_dir=None, seed=None):
    """Dispatch a config to its experiment; returns (name, manifest rows)."""
    name = cfglib.experiment_name(cfg)
    seed = cfglib.experiment_seed(cfg, seed)
    if out_dir is None:
        out_dir = cfg.get("experiment", {}).get("out", os.path.join("runs", name))
    os.makedirs(out_dir, exist_ok=True)
    ctx = RunContext(out_dir, seed)
    _REGISTRY[name](cfg, ctx)
    rows = []
    for fname in sorted(ctx.files):
        rows.append((fname, _digest(os.path.join(out_dir, fname))))
    with open(os.path.join(out_dir, "manifest.txt"), "w", encoding="ascii") as fh:
        for fname, dig in rows:
            fh.write(f"{fname}\t{dig}\n")
    return name, rows


# ------------------------------------------------------------- IR imaging


def _ir_params(cfg):
    return IRParams(
        emissivity=cfglib.take_number(cfg, "ir.emissivity", 0.85, lo=1e-9, hi=1.0),
        background_temp=cfglib.take_number(cfg, "ir.background_temp", 295.0, lo=1e-9),
        attenuation=cfglib.take_number(cfg, "ir.attenuation", 0.01, lo=0.0),
        distance=cfglib.take_number(cfg, "ir.distance", 5.0, lo=0.0),
        air_temp=cfglib.take_number(cfg, "ir.air_temp", 290.0, lo=1e-9),
        exponent=cfglib.take_number(cfg, "ir.exponent", 4.0, lo=1e-9),
    )


def _ir_phantom(size, rng, base, spread, n_blobs):
    """Procedural scene: uniform background plus rectangular hot regions."""
    data = array("d", [base]) * (size * size)
    for _ in range(n_blobs):
        h = 2 + rng.below(size // 3)
        w = 2 + rng.below(size // 3)
        r0 = rng.below(size - h)
        c0 = rng.below(size - w)
        temp = base + spread * (0.3 + 0.7 * rng.uniform())
        for i in range(r0, r0 + h):
            for j in range(c0, c0 + w):
                data[i * size + j] = temp
    return Tensor((size, size), data)


def _ir_pipeline(cfg, ctx):
    size = cfglib.take_number(cfg, "ir.size", 64, integer=True, lo=4, hi=512)
    psf_size = cfglib.take_number(cfg, "ir.psf_size", 11, integer=True, lo=1, hi=63)
    psf_sigma = cfglib.take_number(cfg, "ir.psf_sigma", 1.5, lo=1e-9)
    noise_sd = cfglib.take_number(cfg, "ir.noise_sd", 0.4, lo=0.0)
    base = cfglib.take_number(cfg, "ir.base_temp", 300.0, lo=1e-9)
    spread = cfglib.take_number(cfg, "ir.hot_spread", 60.0, lo=0.0)
    n_blobs = cfglib.take_number(cfg, "ir.blobs", 3, integer=True, lo=0, hi=64)
    params = _ir_params(cfg)
    rng = CounterRng(ctx.seed)
    f = _ir_phantom(size, rng, base, spread, n_blobs)
    phi = ir_phi(f, params)
    psf = gaussian_psf(psf_size, psf_sigma)
    g = ir_forward(f, params, psf, noise_sd, seed=ctx.seed + 1)
    return f, phi, psf, g, params, noise_sd


def exp_ir_simulate(cfg, ctx):
    f, phi, psf, g, params, noise_sd = _ir_pipeline(cfg, ctx)
    write_csv_matrix(ctx.path("f.csv"), f)
    write_csv_matrix(ctx.path("g.csv"), g)
    write_pgm(ctx.path("f.pgm"), f)
    write_pgm(ctx.path("phi.pgm"), phi)
    write_pgm(ctx.path("g.pgm"), g)
    rows = [
        ("f_min", min(f.data)), ("f_max", max(f.data)),
        ("phi_min", min(phi.data)), ("phi_max", max(phi.data)),
        ("g_min", min(g.data)), ("g_max", max(g.data)),
        ("noise_sd", noise_sd),
        ("emissivity", params.emissivity),
    ]
    write_csv_table(ctx.path("metrics.csv"), ["metric", "value"], rows)


def exp_ir_invert(cfg, ctx):
    size = cfglib.take_number(cfg, "ir.size", 32, integer=True, lo=4, hi=512)
    if size & (size - 1):
        raise ConfigError(f"field 'ir.size' must be a power of two for inversion, got {size}")
    cfg = dict(cfg)
    cfg.setdefault("ir", {})
    cfg["ir"] = dict(cfg["ir"])
    cfg["ir"]["size"] = size
    f, phi, psf, g, params, noise_sd = _ir_pipeline(cfg, ctx)
    lam = cfglib.take_number(cfg, "invert.lam", 1e-2, lo=0.0)
    h = LinearOp.from_kernel(psf.kernel, (size, size))
    phi_hat = map_estimate(h, g, lam)
    floor = ir_phi_floor(params) + 1e-9
    clamped = Tensor(phi_hat.shape, array("d", (v if v > floor else floor for v in phi_hat.data)))
    f_hat = ir_phi_inverse(clamped, params)

    # the closed-form net must agree with the direct solve
    net, nparams = build_analytic_net(h, lam, "A")
    tape = Tape()
    out, _ = net.forward(Bindings(tape, nparams), tape.constant(g))
    net_dev = max(abs(a - b) for a, b in zip(tape.value(out).data, phi_hat.data))

    n = size * size
    mse = sum((a - b) ** 2 for a, b in zip(f_hat.data, f.data)) / n
    blur_mse = sum((a - b) ** 2 for a, b in zip(g.data, phi.data)) / n
    write_csv_matrix(ctx.path("g.csv"), g)
    write_csv_matrix(ctx.path("fhat.csv"), f_hat)
    write_pgm(ctx.path("g.pgm"), g)
    write_pgm(ctx.path("fhat.pgm"), f_hat)
    write_pgm(ctx.path("f.pgm"), f)
    rows = [
        ("lam", lam),
        ("mse_fhat_vs_f", mse),
        ("mse_g_vs_phi", blur_mse),
        ("analytic_net_max_dev", net_dev),
    ]
    write_csv_table(ctx.path("metrics.csv"), ["metric", "value"], rows)


# ------------------------------------------------------------- acoustics


def _geometry(cfg, default_grid):
    n_mics = cfglib.take_number(cfg, "acoustic.mics", 8, integer=True, lo=2, hi=256)
    radius = cfglib.take_number(cfg, "acoustic.radius", 0.25, lo=1e-6)
    grid = cfglib.take_number(cfg, "acoustic.grid", default_grid, integer=True, lo=2, hi=128)
    pitch = cfglib.take_number(cfg, "acoustic.pitch", 0.05, lo=1e-6)
    standoff = cfglib.take_number(cfg, "acoustic.standoff", 1.0, lo=0.0)
    freq = cfglib.take_number(cfg, "acoustic.freq", 2000.0, lo=1.0)
    fs = cfglib.take_number(cfg, "acoustic.sample_rate", 48000.0, lo=1.0)
    mics = []
    for m in range(n_mics):
        ang = 2.0 * math.pi * m / n_mics
        mics.append((radius * math.cos(ang), radius * math.sin(ang)))
    return ArrayGeometry(
        tuple(mics), grid, grid, pitch, standoff,
        sample_rate=fs, omega=2.0 * math.pi * freq,
    )


def _sources(cfg, geom):
    default = [[geom.grid_ny // 2, geom.grid_nx // 2, 1.0]]
    entries = cfglib.take_list(cfg, "acoustic.sources", default)
    src = Tensor.zeros(geom.grid_shape)
    data = array("d", src.data)
    for e, entry in enumerate(entries):
        if len(entry) != 3:
            raise ConfigError(f"field 'acoustic.sources[{e}]' must be [row, col, intensity]")
        r, c, s = int(entry[0]), int(entry[1]), float(entry[2])
        if not (0 <= r < geom.grid_ny and 0 <= c < geom.grid_nx):
            raise ConfigError(
                f"field 'acoustic.sources[{e}]' cell ({r}, {c}) outside grid "
                f"{geom.grid_shape}"
            )
        if s < 0:
            raise ConfigError(f"field 'acoustic.sources[{e}]' intensity must be >= 0")
        data[r * geom.grid_nx + c] = s
    return Tensor(geom.grid_shape, data)


def _peaks(bmap, count):
    flat = sorted(range(bmap.size), key=lambda i: -bmap.data[i])[:count]
    ny, nx = bmap.shape
    return [(i // nx, i % nx, bmap.data[i]) for i in flat]


def exp_acoustic_bf(cfg, ctx):
    geom = _geometry(cfg, default_grid=11)
    duration = cfglib.take_number(cfg, "acoustic.duration", 0.03, lo=1e-4)
    noise_sd = cfglib.take_number(cfg, "acoustic.noise_sd", 0.0, lo=0.0)
    sources = _sources(cfg, geom)
    signals = acoustic_synthesize(sources, geom, duration, seed=ctx.seed, noise_sd=noise_sd)
    bmap = delay_and_sum(signals, geom)
    write_csv_matrix(ctx.path("sources.csv"), sources)
    write_csv_matrix(ctx.path("b.csv"), bmap)
    write_pgm(ctx.path("b.pgm"), bmap, lo=0.0)
    write_csv_table(
        ctx.path("mics.csv"), ["x", "y"], [(x, y) for x, y in geom.mic_positions]
    )
    n_src = sum(1 for v in sources.data if v > 0)
    write_csv_table(
        ctx.path("peaks.csv"), ["row", "col", "power"], _peaks(bmap, max(n_src, 1))
    )


def exp_acoustic_deconv(cfg, ctx):
    geom = _geometry(cfg, default_grid=16)
    if geom.grid_nx & (geom.grid_nx - 1):
        raise ConfigError(
            f"field 'acoustic.grid' must be a power of two for deconvolution, "
            f"got {geom.grid_nx}"
        )
    duration = cfglib.take_number(cfg, "acoustic.duration", 0.03, lo=1e-4)
    noise_sd = cfglib.take_number(cfg, "acoustic.noise_sd", 0.0, lo=0.0)
    lam = cfglib.take_number(cfg, "invert.lam", 1e-3, lo=1e-12)
    sources = _sources(cfg, geom)
    signals = acoustic_synthesize(sources, geom, duration, seed=ctx.seed, noise_sd=noise_sd)
    bmap = delay_and_sum(signals, geom)
    center = (geom.grid_ny // 2, geom.grid_nx // 2)
    psf_map = beamformer_psf(geom, center, duration)
    h = LinearOp.from_kernel(psf_map, geom.grid_shape)
    f_hat = map_estimate(h, bmap, lam)
    n_src = max(sum(1 for v in sources.data if v > 0), 1)
    write_csv_matrix(ctx.path("b.csv"), bmap)
    write_csv_matrix(ctx.path("psf.csv"), psf_map)
    write_csv_matrix(ctx.path("fhat.csv"), f_hat)
    write_pgm(ctx.path("b.pgm"), bmap, lo=0.0)
    write_pgm(ctx.path("fhat.pgm"), f_hat)
    write_csv_table(
        ctx.path("peaks.csv"),
        ["row", "col", "power"],
        _peaks(f_hat, n_src),
    )


# ----------------------------------------------------- sparse deconvolution


def _sparse_dataset(h, n, count, sparsity, noise_sd, rng):
    data = []
    for _ in range(count):
        f = array("d", bytes(8 * n))
        placed = 0
        while placed < sparsity:
            i = rng.below(n)
            if f[i] == 0.0:
                sign = 1.0 if rng.uniform() < 0.5 else -1.0
                f[i] = sign * (0.5 + rng.uniform())
                placed += 1
        ft = Tensor((n,), f)
        g = h.apply(ft)
        gd = array("d", g.data)
        for i in range(n):
            gd[i] += noise_sd * rng.normal()
        data.append((Tensor((n,), gd), ft))
    return data


def exp_lista_vs_ista(cfg, ctx):
    n = cfglib.take_number(cfg, "lista.dim", 32, integer=True, lo=4, hi=256)
    kernel = cfglib.take_list(cfg, "lista.kernel", [0.25, 0.5, 1.0, 0.5, 0.25])
    sparsity = cfglib.take_number(cfg, "lista.sparsity", 4, integer=True, lo=1, hi=n)
    n_train = cfglib.take_number(cfg, "lista.train", 120, integer=True, lo=1)
    n_test = cfglib.take_number(cfg, "lista.test", 30, integer=True, lo=1)
    layers = cfglib.take_number(cfg, "lista.layers", 4, integer=True, lo=1, hi=64)
    l1 = cfglib.take_number(cfg, "lista.l1_weight", 0.1, lo=1e-9)
    noise_sd = cfglib.take_number(cfg, "lista.noise_sd", 0.01, lo=0.0)
    epochs = cfglib.take_number(cfg, "lista.epochs", 120, integer=True, lo=0)
    lr = cfglib.take_number(cfg, "lista.learning_rate", 2e-3, lo=1e-12)

    hmat = conv1d_matrix(Tensor((len(kernel),), [float(v) for v in kernel]), n)
    h = LinearOp.from_matrix(hmat)
    rng = CounterRng(ctx.seed)
    train_data = _sparse_dataset(h, n, n_train, sparsity, noise_sd, rng)
    test_data = _sparse_dataset(h, n, n_test, sparsity, noise_sd, rng)

    icfg = IstaConfig(l1_weight=l1, max_iters=4000, tol=1e-10)
    ista_mse = 0.0
    for g, f_true in test_data:
        sol = ista_solve(h, g, icfg)
        d = sol.f - f_true
        ista_mse += d.norm2() / n
    ista_mse /= len(test_data)

    tcfg = TrainConfig(learning_rate=lr, steps=epochs, optimizer="adam", seed=ctx.seed)
    results = {}
    for tied in (True, False):
        net, params = unfold(h, layers, icfg, tied=tied)
        before = unfolded_mse(net, params, test_data)
        res, metrics = lista_train(net, params, train_data, tcfg, eval_data=test_data)
        tag = "tied" if tied else "untied"
        results[tag] = (before, metrics["eval_mse_trained"], res, net)
        write_csv_table(
            ctx.path(f"loss_{tag}.csv"),
            ["step", "train_loss"],
            list(enumerate(res.history)),
        )
        save_state(
            ctx.path(f"unfolded_{tag}.state"),
            {"net": net, "params": res.params},
        )
    write_csv_table(
        ctx.path("summary.csv"),
        ["method", "test_mse"],
        [
            ("ista_converged", ista_mse),
            ("unfolded_untrained", results["tied"][0]),
            ("unfolded_tied_trained", results["tied"][1]),
            ("unfolded_untied_trained", results["untied"][1]),
        ],
    )


# ------------------------------------------------------ transform denoiser


def _smooth_signals(n, count, n_modes, rng):
    out = []
    for _ in range(count):
        coeffs = [(rng.normal(), rng.normal()) for _ in range(n_modes)]
        data = array("d", bytes(8 * n))
        for i in range(n):
            t = 2.0 * math.pi * i / n
            v = 0.0
            for m, (a, b) in enumerate(coeffs):
                v += a * math.cos((m + 1) * t) + b * math.sin((m + 1) * t)
            data[i] = v
        out.append(Tensor((n,), data))
    return out


def exp_transform_denoise(cfg, ctx):
    n = cfglib.take_number(cfg, "transform.dim", 64, integer=True, lo=4, hi=4096)
    if n & (n - 1):
        raise ConfigError(f"field 'transform.dim' must be a power of two, got {n}")
    kind = cfglib.take_choice(cfg, "transform.kind", ("fft", "haar"), "fft")
    levels = cfglib.take_number(cfg, "transform.levels", 1, integer=True, lo=1)
    n_train = cfglib.take_number(cfg, "transform.train", 160, integer=True, lo=1)
    n_val = cfglib.take_number(cfg, "transform.val", 40, integer=True, lo=1)
    n_modes = cfglib.take_number(cfg, "transform.modes", 3, integer=True, lo=1, hi=n // 2)
    noise_sd = cfglib.take_number(cfg, "transform.noise_sd", 0.5, lo=0.0)
    steps = cfglib.take_number(cfg, "transform.steps", 300, integer=True, lo=0)
    lr = cfglib.take_number(cfg, "transform.learning_rate", 2e-2, lo=1e-12)

    rng = CounterRng(ctx.seed)
    clean = _smooth_signals(n, n_train + n_val, n_modes, rng)
    pairs = []
    for c in clean:
        noisy = array("d", c.data)
        for i in range(n):
            noisy[i] += noise_sd * rng.normal()
        pairs.append((Tensor((n,), noisy), c))
    train_data, val_data = pairs[:n_train], pairs[n_train:]

    net, params = build_transform_net(kind, levels, Tensor.full((n,), 1.0))
    identity_mse = evaluate_mse(net, params, val_data)
    tcfg = TrainConfig(learning_rate=lr, steps=steps, optimizer="adam", seed=ctx.seed)
    res = train(net, params, train_data, tcfg)
    trained_mse = evaluate_mse(net, res.params, val_data)

    write_csv_table(
        ctx.path("loss.csv"), ["step", "train_loss"], list(enumerate(res.history))
    )
    write_csv_table(
        ctx.path("summary.csv"),
        ["metric", "value"],
        [
            ("identity_mask_val_mse", identity_mse),
            ("trained_mask_val_mse", trained_mse),
            ("noise_sd", noise_sd),
        ],
    )
    save_state(ctx.path("denoiser.state"), {"net": net, "params": res.params})


# --------------------------------------------------------------- PINN runs


def _pinn_history_rows(history):
    steps = len(history["total"])
    rows = []
    for s in range(steps):
        row = [s]
        for col in ("data", "physics", "ic", "bc", "total"):
            series = history.get(col)
            v = series[s] if series is not None and s < len(series) else None
            row.append("" if v is None else repr(v))
        rows.append(row)
    return rows


def _write_pinn_history(path, history):
    write_csv_table(
        path, ["step", "data", "physics", "ic", "bc", "total"], _pinn_history_rows(history)
    )


def exp_pinn_ode(cfg, ctx):
    a_true = cfglib.take_number(cfg, "pinn.a", -1.0)
    b_true = cfglib.take_number(cfg, "pinn.b", 0.5)
    u0 = cfglib.take_number(cfg, "pinn.u0", 1.0)
    t_max = cfglib.take_number(cfg, "pinn.t_max", 3.0, lo=1e-6)
    n_data = cfglib.take_number(cfg, "pinn.data_points", 50, integer=True, lo=2)
    n_colloc = cfglib.take_number(cfg, "pinn.colloc_points", 64, integer=True, lo=1)
    hidden = cfglib.take_number(cfg, "pinn.hidden", 16, integer=True, lo=1, hi=256)
    steps = cfglib.take_number(cfg, "pinn.steps", 4000, integer=True, lo=0)
    lr = cfglib.take_number(cfg, "pinn.learning_rate", 5e-3, lo=1e-12)

    # exact solution of u' = a u + b from u(0) = u0 (a < 0 decays to -b/a)
    if a_true == 0.0:
        raise ConfigError("field 'pinn.a' must be nonzero")
    u_inf = -b_true / a_true
    t_data = uniform_points(0.0, t_max, n_data)
    u_data = Tensor(
        (n_data,),
        array("d", ((u0 - u_inf) * math.exp(a_true * t) + u_inf for t in t_data.data)),
    )
    problem = OdeParametricProblem(
        t_data=t_data,
        u_data=u_data,
        t_colloc=uniform_points(0.0, t_max, n_colloc),
        init_a=cfglib.take_number(cfg, "pinn.init_a", 0.0),
        init_b=cfglib.take_number(cfg, "pinn.init_b", 0.0),
    )
    rng = CounterRng(ctx.seed)
    unet, uparams = init_mlp((1, hidden, hidden, 1), rng, prefix="u_")
    tcfg = TrainConfig(learning_rate=lr, steps=steps, optimizer="adam", seed=ctx.seed)
    result = train_pinn(problem, {"u": NetModel(unet, uparams)}, tcfg)

    _write_pinn_history(ctx.path("history.csv"), result.history)
    write_csv_table(
        ctx.path("recovered.csv"),
        ["coefficient", "true", "recovered"],
        [("a", a_true, result.theta[0]), ("b", b_true, result.theta[1])],
    )
    save_state(
        ctx.path("pinn_ode.state"),
        {"u_net": unet, "u_params": result.models["u"], "theta": result.models["theta"]},
    )


def exp_pinn_pde(cfg, ctx):
    x_max = cfglib.take_number(cfg, "pinn.x_max", 3.0, lo=1e-6)
    t_max = cfglib.take_number(cfg, "pinn.t_max", 2.0, lo=1e-6)
    n_grid = cfglib.take_number(cfg, "pinn.data_grid", 8, integer=True, lo=2, hi=64)
    n_colloc = cfglib.take_number(cfg, "pinn.colloc_grid", 10, integer=True, lo=1, hi=64)
    n_edge = cfglib.take_number(cfg, "pinn.edge_points", 16, integer=True, lo=2, hi=256)
    hidden = cfglib.take_number(cfg, "pinn.hidden", 16, integer=True, lo=1, hi=256)
    steps = cfglib.take_number(cfg, "pinn.steps", 800, integer=True, lo=0)
    lr = cfglib.take_number(cfg, "pinn.learning_rate", 5e-3, lo=1e-12)
    verbatim_plus = cfglib.take_bool(cfg, "pinn.bc_verbatim_plus", False)

    def exact(x, t):
        # advection solution: du/dt + du/dx = u
        return math.exp(t) * math.sin(x - t)

    data_pts = interior_grid((0.0, x_max), (0.0, t_max), n_grid, n_grid)
    nb = data_pts.shape[1]
    data_vals = Tensor(
        (nb,),
        array("d", (exact(data_pts.data[j], data_pts.data[nb + j]) for j in range(nb))),
    )
    ic_pts = boundary_points(1, 0.0, 0.0, x_max, n_edge)
    ic_vals = Tensor((n_edge,), array("d", (exact(ic_pts.data[j], 0.0) for j in range(n_edge))))
    bc_pts = boundary_points(0, 0.0, 0.0, t_max, n_edge)
    bc_vals = Tensor(
        (n_edge,), array("d", (exact(0.0, bc_pts.data[n_edge + j]) for j in range(n_edge)))
    )
    problem = AdvectionPdeProblem(
        data_points=data_pts,
        data_values=data_vals,
        colloc_points=interior_grid((0.0, x_max), (0.0, t_max), n_colloc, n_colloc),
        ic_points=ic_pts,
        ic_values=ic_vals,
        bc_points=bc_pts,
        bc_values=bc_vals,
        bc_verbatim_plus=verbatim_plus,
    )
    rng = CounterRng(ctx.seed)
    unet, uparams = init_mlp((2, hidden, hidden, 1), rng, prefix="u_")
    tcfg = TrainConfig(learning_rate=lr, steps=steps, optimizer="adam", seed=ctx.seed)
    result = train_pinn(problem, {"u": NetModel(unet, uparams)}, tcfg)

    _write_pinn_history(ctx.path("history.csv"), result.history)
    final = {kk: (vv[-1] if vv and vv[-1] is not None else "") for kk, vv in result.history.items()}
    write_csv_table(
        ctx.path("final_terms.csv"),
        ["term", "value"],
        sorted(final.items()),
    )
    save_state(
        ctx.path("pinn_pde.state"),
        {"u_net": unet, "u_params": result.models["u"]},
    )


_REGISTRY = {
    "ir-simulate": exp_ir_simulate,
    "ir-invert": exp_ir_invert,
    "acoustic-bf": exp_acoustic_bf,
    "acoustic-deconv": exp_acoustic_deconv,
    "lista-vs-ista": exp_lista_vs_ista,
    "transform-denoise": exp_transform_denoise,
    "pinn-ode": exp_pinn_ode,
    "pinn-pde": exp_pinn_pde,
}

EXPERIMENTS = tuple(_REGISTRY)
