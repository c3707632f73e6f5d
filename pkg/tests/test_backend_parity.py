"""Compiled and pure-Python kernels must agree bit for bit.

Every kernel is exercised on random inputs and the raw buffers compared
exactly; any divergence (different accumulation order, fused multiplies,
different libm usage) is a bug in whichever twin changed.
"""

from array import array

import numpy as np
import pytest

from invnets.backend import available_backends, pykernels

if "cython" not in available_backends():
    pytest.skip("compiled backend not built", allow_module_level=True)

from invnets.backend import _ckernels


def arr(values):
    return array("d", [float(v) for v in values])


def idx(values):
    return array("q", [int(v) for v in values])


def assert_same(a, b):
    if isinstance(a, tuple):
        for x, y in zip(a, b):
            assert_same(x, y)
        return
    if isinstance(a, float):
        assert a == b or (a != a and b != b)
        return
    assert a == b  # array('d') equality is elementwise exact


CASES = []


def case(fn):
    CASES.append(fn)
    return fn


rng = np.random.default_rng(99)
A = arr(rng.standard_normal(48))
B = arr(rng.standard_normal(48))
M6x8 = arr(rng.standard_normal(48))
M8x6 = arr(rng.standard_normal(48))
IMG = arr(rng.standard_normal(64))
KER = arr(rng.standard_normal(9))
G16 = arr(rng.standard_normal(16))


@case
def elementwise(k):
    return (
        k.add(A, B), k.sub(A, B), k.mul(A, B), k.scale(A, -1.372),
        k.add_scaled(A, B, 0.77), k.add_scalar(A, 2.5),
        k.tanh_(A), k.tanh_grad(k.tanh_(A), B), k.sin_(A), k.cos_(A),
        k.exp_(k.scale(A, 0.1)), k.relu(A), k.gtzero_mask(A),
        k.soft_threshold(A, 0.4), k.st_mask(A, 0.4),
        k.st_theta_grad(A, 0.4, B),
    )


@case
def reductions(k):
    return (k.sum_all(A), k.dot(A, B), k.abs_sum(A), k.max_abs_diff(A, B))


@case
def products(k):
    return (
        k.matmul(M6x8, M8x6, 6, 8, 6),
        k.matmul_nt(M6x8, M6x8, 6, 8, 6),
        k.matmul_tn(M6x8, M6x8, 6, 8, 8),
        k.rowadd(M6x8, arr(range(6)), 6, 8),
        k.rowsum(M6x8, 6, 8),
        k.rowmul(M6x8, arr(range(6)), 6, 8),
        k.rowdot(M6x8, M8x6, 6, 8),
    )


@case
def convolution(k):
    gout = arr(np.asarray(B)[:16].tolist() * 4)
    return (
        k.conv2d(IMG, 8, 8, KER, 3, 3, 0),
        k.conv2d(IMG, 8, 8, KER, 3, 3, 1),
        k.conv2d_kernel_grad(IMG, gout, 8, 8, 3, 3),
    )


@case
def fourier(k):
    z32 = array("d", bytes(8 * 32))
    return (
        k.fft(A[:32], z32, 32, 1, 1, 0, False),
        k.fft(A[:32], z32, 32, 1, 1, 0, True),
        k.fft(A[:32], z32, 8, 4, 1, 8, False),  # rows of a (4, 8) block
        k.fft(A[:32], z32, 4, 8, 8, 1, True),  # columns of a (4, 8) block
    )


@case
def gather_scatter(k):
    ii = idx([3, 0, 1, 3, 2])
    sc = arr([1.0, -0.5, 2.0, 0.25, 1.5])
    return (
        k.gather_scale(A[:4], ii, sc),
        k.scatter_scale_add(arr(range(5)), ii, sc, 4),
        k.gather_scale_cols(A[:12], 3, ii, sc),
        k.scatter_scale_add_cols(arr(range(15)), 3, ii, sc, 4),
    )


@case
def haar(k):
    return (
        k.haar1d(A[:16], 16, 3, False),
        k.haar1d(k.haar1d(A[:16], 16, 3, False), 16, 3, True),
        k.haar1d_cols(A[:48], 16, 3, 2, False),
        k.haar2d(IMG, 8, 8, 2, False),
        k.haar2d(k.haar2d(IMG, 8, 8, 2, False), 8, 8, 2, True),
    )


@case
def linalg(k):
    spd = np.asarray(M6x8).reshape(6, 8)
    spd = spd @ spd.T + 6 * np.eye(6)
    low = k.cholesky(arr(spd.ravel()), 6)
    sol = k.chol_solve(low, arr(range(12)), 6, 2)
    return (low, sol, k.cholesky(arr((-np.eye(3)).ravel()), 3))


@case
def optimizer(k):
    m = arr([0.1] * 16)
    v = arr([0.2] * 16)
    p = k.adam_step(G16, B[:16], m, v, 1e-2, 0.9, 0.999, 1e-8, 3)
    return (p, m, v, k.sgd_step(G16, B[:16], 0.05))


@case
def acoustics(k):
    sig = array("d", bytes(8 * 40))
    k.synth_add(sig, 40, 0.8, 700.0, 8000.0, 0.0013)
    k.synth_add(sig, 40, 0.3, 700.0, 8000.0, 0.0004)
    two = array("d", sig)
    two.extend(sig)
    power = k.das_power(two, 2, 40, arr([0.0011, 0.0002]), 8000.0, 20)
    return (sig, power)


@pytest.mark.parametrize("fn", CASES, ids=lambda f: f.__name__)
def test_backend_parity(fn):
    assert_same(fn(pykernels), fn(_ckernels))
