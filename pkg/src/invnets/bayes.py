"""Gaussian inference for linear inverse problems g = H f + noise.

With white Gaussian noise (variance ve) and a zero-mean white Gaussian
signal prior (variance vf), the posterior is Gaussian with mean equal to
the ridge-regularized least-squares solution at lam = ve/vf and covariance
ve (H^T H + lam I)^-1.  The posterior mean admits three algebraically
equivalent operator factorizations,

    A = (H^T H + lam I)^-1 H^T  =  B H^T  =  H^T C,
    B = (H^T H + lam I)^-1,     C = (H H^T + lam I)^-1,

related by the push-through identity; `inverse_factorizations` returns all
three as operators so downstream network builders can pick a shape.

Explicit-matrix operators are solved by Cholesky factorization of the
normal equations; circular-convolution operators are solved exactly in the
Fourier domain (power-of-two extents required).
"""

import math
from array import array
from dataclasses import dataclass

from invnets.backend import k
from invnets.errors import (
    CapacityError,
    ParameterError,
    ShapeError,
    SingularOperatorError,
)
from invnets.linop import LinearOp, conv_op_from_first_column, conv_transfer
from invnets.tensor import Tensor

COVARIANCE_CAP = 4096


@dataclass(frozen=True)
class GaussPriors:
    """Noise variance ve and signal variance vf; lam is their ratio."""

    ve: float
    vf: float

    def __post_init__(self):
        if self.ve <= 0.0 or self.vf <= 0.0:
            raise ParameterError(f"variances must be positive, got ve={self.ve}, vf={self.vf}")

    @property
    def lam(self):
        return self.ve / self.vf


def _normal_matrix(h, lam):
    # H^T H + lam I for an explicit matrix H
    m, n = h.shape
    g = k.matmul_tn(h.data, h.data, m, n, n)
    for i in range(n):
        g[i * n + i] += lam
    return g


def _chol_or_raise(a, n, what):
    low = k.cholesky(a, n)
    if low is None:
        raise SingularOperatorError(f"{what} is singular or indefinite")
    return low


def map_estimate(h, g, priors):
    """Posterior mean / MAP estimate: solves (H^T H + lam I) f = H^T g."""
    lam = priors.lam if isinstance(priors, GaussPriors) else float(priors)
    if lam < 0.0:
        raise ParameterError(f"lam must be nonnegative, got {lam}")
    if g.shape != h.out_shape:
        raise ShapeError(f"data shape {g.shape} does not match operator {h.out_shape}")
    if h.kind == "conv2d":
        return _map_estimate_fourier(h, g, lam)
    mat = h.payload
    m, n = mat.shape
    rhs = h.apply_adjoint(g)
    normal = _normal_matrix(mat, lam)
    low = _chol_or_raise(normal, n, "normal operator H^T H + lam I")
    f = k.chol_solve(low, rhs.data, n, 1)
    # postcondition: normal-equation residual stays tiny
    res = k.sub(k.matmul(normal, f, n, n, 1), rhs.data)
    rhs_norm = math.sqrt(k.dot(rhs.data, rhs.data))
    if math.sqrt(k.dot(res, res)) > 1e-8 * (1.0 + rhs_norm):
        raise SingularOperatorError("normal equations solved to insufficient accuracy")
    return Tensor(h.in_shape, f)


def _map_estimate_fourier(h, g, lam):
    hh, ww = h.in_shape
    dre, dim = conv_transfer(h)
    gre, gim = k.fft(g.data, k.zeros(hh * ww), ww, hh, 1, ww, False)
    gre, gim = k.fft(gre, gim, hh, ww, ww, 1, False)
    fre = array("d", gre)
    fim = array("d", gim)
    for i in range(hh * ww):
        denom = dre[i] * dre[i] + dim[i] * dim[i] + lam
        if denom == 0.0:
            raise SingularOperatorError(
                "zero transfer coefficient with lam = 0; the circulant system is singular"
            )
        # conj(d) * G / (|d|^2 + lam)
        re = (dre[i] * gre[i] + dim[i] * gim[i]) / denom
        im = (dre[i] * gim[i] - dim[i] * gre[i]) / denom
        fre[i] = re
        fim[i] = im
    fre, fim = k.fft(fre, fim, ww, hh, 1, ww, True)
    fre, _ = k.fft(fre, fim, hh, ww, ww, 1, True)
    return Tensor(h.in_shape, fre)


def posterior_covariance(h, priors):
    """Dense posterior covariance ve (H^T H + lam I)^-1.

    Deliberately capped: beyond COVARIANCE_CAP unknowns the dense inverse
    is not formed, and sampling-style approximations (MCMC, Langevin,
    perturbation-optimization, variational Bayes) — which this package
    does not provide — are the appropriate tools.
    """
    n = h.n_in
    if n > COVARIANCE_CAP:
        raise CapacityError(
            f"posterior covariance needs a dense {n}x{n} inverse (cap "
            f"{COVARIANCE_CAP}); use sampling approximations (MCMC, Langevin, "
            "perturbation-optimization, variational Bayes) instead"
        )
    mat = h.payload if h.kind == "matrix" else h.materialize()
    normal = _normal_matrix(mat, priors.lam)
    low = _chol_or_raise(normal, n, "normal operator H^T H + lam I")
    eye = k.zeros(n * n)
    for i in range(n):
        eye[i * n + i] = 1.0
    inv = k.chol_solve(low, eye, n, n)
    return Tensor((n, n), k.scale(inv, priors.ve))


def _dense_inverse(a, n, what):
    low = _chol_or_raise(a, n, what)
    eye = k.zeros(n * n)
    for i in range(n):
        eye[i * n + i] = 1.0
    return k.chol_solve(low, eye, n, n)


def inverse_factorizations(h, lam):
    """The three equivalent posterior-mean operators {A, B, C}.

    A maps data to estimate directly; B acts after H^T; C acts before H^T.
    All are returned as LinearOp instances of the same kind as ``h``
    (convolutions stay convolutions, realized by Fourier-derived kernels).
    """
    lam = float(lam)
    if lam <= 0.0:
        raise ParameterError(f"lam must be positive for the factorization triple, got {lam}")
    if h.kind == "conv2d":
        return _factorizations_fourier(h, lam)
    mat = h.payload
    m, n = mat.shape
    bmat = _dense_inverse(_normal_matrix(mat, lam), n, "H^T H + lam I")
    gram = k.matmul_nt(mat.data, mat.data, m, n, m)
    for i in range(m):
        gram[i * m + i] += lam
    cmat = _dense_inverse(gram, m, "H H^T + lam I")
    amat = k.matmul_nt(bmat, mat.data, n, n, m)
    return {
        "A": LinearOp.from_matrix(Tensor((n, m), amat)),
        "B": LinearOp.from_matrix(Tensor((n, n), bmat)),
        "C": LinearOp.from_matrix(Tensor((m, m), cmat)),
    }


def _kernel_from_transfer(h, tre, tim):
    hh, ww = h.in_shape
    root = math.sqrt(hh * ww)
    re = k.scale(tre, 1.0 / root)
    im = k.scale(tim, 1.0 / root)
    re, im = k.fft(re, im, ww, hh, 1, ww, True)
    re, _ = k.fft(re, im, hh, ww, ww, 1, True)
    return conv_op_from_first_column(Tensor((hh, ww), re))


def _factorizations_fourier(h, lam):
    hh, ww = h.in_shape
    n = hh * ww
    dre, dim = conv_transfer(h)
    are = k.zeros(n)
    aim = k.zeros(n)
    bre = k.zeros(n)
    for i in range(n):
        denom = dre[i] * dre[i] + dim[i] * dim[i] + lam
        are[i] = dre[i] / denom
        aim[i] = -dim[i] / denom
        bre[i] = 1.0 / denom
    zero = k.zeros(n)
    return {
        "A": _kernel_from_transfer(h, are, aim),
        "B": _kernel_from_transfer(h, bre, zero),
        "C": _kernel_from_transfer(h, bre, zero),
    }
