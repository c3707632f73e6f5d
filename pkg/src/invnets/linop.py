"""Linear forward operators: explicit matrices and circular 2-D convolutions.

Both kinds expose apply/apply_adjoint and can be materialized to a dense
matrix over the flattened input.  The convolution adjoint is applied as
correlation with the same kernel (index-reflected access), so taking the
adjoint twice is exactly the original operator.
"""

import math
from array import array

from invnets.backend import k
from invnets.errors import ShapeError
from invnets.rng import CounterRng
from invnets.tensor import Tensor


class LinearOp:
    """Forward operator H, either an explicit matrix or a circular conv."""

    __slots__ = ("kind", "payload", "in_shape", "out_shape", "_adjoint")

    def __init__(self, kind, payload, in_shape, out_shape, _adjoint=False):
        self.kind = kind
        self.payload = payload
        self.in_shape = tuple(in_shape)
        self.out_shape = tuple(out_shape)
        self._adjoint = _adjoint

    @staticmethod
    def from_matrix(mat):
        if mat.ndim != 2:
            raise ShapeError("explicit operator needs a matrix")
        m, n = mat.shape
        return LinearOp("matrix", mat, (n,), (m,))

    @staticmethod
    def from_kernel(kernel, image_shape):
        if kernel.ndim != 2 or len(image_shape) != 2:
            raise ShapeError("convolution operator needs 2-D kernel and image shape")
        hh, ww = image_shape
        if kernel.shape[0] > hh or kernel.shape[1] > ww:
            raise ShapeError(
                f"kernel {kernel.shape} larger than image {tuple(image_shape)}"
            )
        return LinearOp("conv2d", kernel, (hh, ww), (hh, ww))

    @property
    def n_in(self):
        n = 1
        for e in self.in_shape:
            n *= e
        return n

    @property
    def n_out(self):
        n = 1
        for e in self.out_shape:
            n *= e
        return n

    def adjoint(self):
        if self.kind == "matrix":
            return LinearOp("matrix", self.payload.transpose(), self.out_shape, self.in_shape)
        return LinearOp(
            "conv2d", self.payload, self.in_shape, self.out_shape, not self._adjoint
        )

    def apply(self, x):
        if x.shape != self.in_shape:
            raise ShapeError(f"operator expects {self.in_shape}, got {x.shape}")
        if self.kind == "matrix":
            m, n = self.payload.shape
            return Tensor(self.out_shape, k.matmul(self.payload.data, x.data, m, n, 1))
        hh, ww = self.in_shape
        kh, kw = self.payload.shape
        data = k.conv2d(x.data, hh, ww, self.payload.data, kh, kw, 1 if self._adjoint else 0)
        return Tensor(self.out_shape, data)

    def apply_adjoint(self, y):
        return self.adjoint().apply(y)

    def materialize(self):
        """Dense matrix of the operator over flattened input (column probe)."""
        n = self.n_in
        m = self.n_out
        out = k.zeros(m * n)
        for j in range(n):
            probe = k.zeros(n)
            probe[j] = 1.0
            col = self.apply(Tensor(self.in_shape, probe))
            for i in range(m):
                out[i * n + j] = col.data[i]
        return Tensor((m, n), out)


def conv1d_matrix(kernel, n):
    """Dense circulant matrix of a centered circular 1-D convolution."""
    kk = kernel.shape[0]
    if kernel.ndim != 1 or kk > n:
        raise ShapeError(f"1-D kernel of extent <= {n} required, got {kernel.shape}")
    ca = kk // 2
    out = k.zeros(n * n)
    for j in range(n):
        for a in range(kk):
            i = (j + a - ca + n) % n
            out[i * n + j] += kernel.data[a]
    return Tensor((n, n), out)


def conv_transfer(op):
    """Circulant eigenvalues of a conv2d operator (complex, flattened).

    These are the non-unitary DFT values of the operator's first column;
    returned as (re, im) buffers over the H*W frequency grid.
    """
    if op.kind != "conv2d":
        raise ShapeError("transfer function requires a convolution operator")
    hh, ww = op.in_shape
    probe = k.zeros(hh * ww)
    probe[0] = 1.0
    col = op.apply(Tensor(op.in_shape, probe))
    re, im = k.fft(col.data, k.zeros(hh * ww), ww, hh, 1, ww, False)
    re, im = k.fft(re, im, hh, ww, ww, 1, False)
    root = math.sqrt(hh * ww)
    return k.scale(re, root), k.scale(im, root)


def conv_op_from_first_column(col):
    """Conv operator whose circulant matrix has `col` as first column."""
    hh, ww = col.shape
    ca, cb = hh // 2, ww // 2
    ker = k.zeros(hh * ww)
    for a in range(hh):
        for b in range(ww):
            ker[a * ww + b] = col.data[((a - ca) % hh) * ww + ((b - cb) % ww)]
    return LinearOp.from_kernel(Tensor((hh, ww), ker), (hh, ww))


def as_plain_conv(op):
    """Equivalent convolution operator with no adjoint flag.

    Adjoint-flagged operators apply correlation; re-expressing them as a
    forward convolution (via the first-column probe) lets them serve as
    plain convolution layer kernels.
    """
    if op.kind != "conv2d":
        raise ShapeError("as_plain_conv requires a convolution operator")
    if not op._adjoint:
        return op
    hh, ww = op.in_shape
    probe = k.zeros(hh * ww)
    probe[0] = 1.0
    col = op.apply(Tensor(op.in_shape, probe))
    return conv_op_from_first_column(col)


def power_iteration(op, iters=200, tol=1e-12):
    """Largest eigenvalue of the normal operator H^T H.

    Runs power iteration on H^T H from a fixed pseudo-random start vector;
    stops when the Rayleigh quotient moves less than ``tol`` (relative) or
    after ``iters`` steps.  A zero operator yields 0.
    """
    n = op.n_in
    rng = CounterRng(0x5EED_1E16)
    v = array("d", [rng.normal() for _ in range(n)])
    nv = math.sqrt(k.dot(v, v))
    v = k.scale(v, 1.0 / nv)
    lam = 0.0
    for _ in range(iters):
        w = op.apply_adjoint(op.apply(Tensor(op.in_shape, v))).data
        new_lam = k.dot(v, w)
        norm = math.sqrt(k.dot(w, w))
        if norm == 0.0:
            return 0.0
        v = k.scale(w, 1.0 / norm)
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            return new_lam
        lam = new_lam
    return lam
