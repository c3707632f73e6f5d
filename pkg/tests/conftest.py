"""Shared test helpers: numpy bridges and finite-difference checking."""

import numpy as np
import pytest

from invnets.tensor import Tensor


def to_np(t):
    """Tensor -> numpy array (copies)."""
    a = np.frombuffer(t.data, dtype=np.float64).copy()
    return a.reshape(t.shape) if t.shape else a[0]

def from_np(a):
    a = np.asarray(a, dtype=np.float64)
    return Tensor(a.shape, a.ravel().tolist())


def rel_err(a, b, floor=1e-6):
    """Relative disagreement used by gradient checks."""
    a = float(a)
    b = float(b)
    scale = max(abs(a), abs(b))
    if scale < floor:
        return abs(a - b)
    return abs(a - b) / scale


def central_diff(fn, x, h=1e-6):
    """Central finite difference of a scalar function of one float."""
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def gradcheck_params(loss_fn, params, names=None, h=1e-6, tol=1e-5):
    """Compare reverse-mode parameter gradients against central differences.

    ``loss_fn(params)`` must build a fresh tape and return (tape, loss
    node).  Every trainable entry of every checked parameter is perturbed
    both ways; failures are collected and reported together.
    """
    from invnets.tensor import Tensor as T

    tape, loss = loss_fn(params)
    grads = tape.leaf_grads(tape.backward(loss))
    failures = []
    for name in names or params.trainable_names():
        g = grads.get(name)
        value = params.get(name)
        for i in range(value.size):
            def perturbed(delta, i=i, name=name, value=value):
                data = list(value.data)
                data[i] += delta
                params.set_value(name, T(value.shape, data))
                t2, l2 = loss_fn(params)
                params.set_value(name, value)
                return t2.value(l2).item()

            fd = (perturbed(h) - perturbed(-h)) / (2.0 * h)
            ad = g.data[i] if g is not None else 0.0
            if rel_err(ad, fd, floor=1e-4) > tol:
                failures.append(f"{name}[{i}]: ad={ad!r} fd={fd!r}")
    assert not failures, "gradient mismatches:\n" + "\n".join(failures)


@pytest.fixture
def rng_np():
    return np.random.default_rng(20240817)
