"""Dense float64 tensors and named parameter sets.

A Tensor is an immutable row-major buffer of 64-bit floats with a shape.
All arithmetic runs through the active kernel backend; there is no
third-party array dependency.  `shape == ()` denotes a scalar.
"""

import math
from array import array

from invnets.backend import k
from invnets.errors import ParameterError, ShapeError


def _size(shape):
    n = 1
    for e in shape:
        n *= e
    return n


class Tensor:
    """Immutable dense array of float64, row-major."""

    __slots__ = ("shape", "data")

    def __init__(self, shape, data):
        shape = tuple(int(e) for e in shape)
        if any(e <= 0 for e in shape):
            raise ShapeError(f"extents must be positive, got {shape}")
        if not isinstance(data, array) or data.typecode != "d":
            data = array("d", data)
        if _size(shape) != len(data):
            raise ShapeError(
                f"shape {shape} needs {_size(shape)} values, got {len(data)}"
            )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    # ------------------------------------------------------------ constructors

    @staticmethod
    def zeros(shape):
        return Tensor(shape, k.zeros(_size(tuple(shape))))

    @staticmethod
    def full(shape, value):
        n = _size(tuple(shape))
        return Tensor(shape, array("d", [float(value)] * n))

    @staticmethod
    def scalar(value):
        return Tensor((), array("d", [float(value)]))

    @staticmethod
    def from_nested(rows):
        """Build a 1-D tensor from a flat list or a 2-D one from rows."""
        if rows and isinstance(rows[0], (list, tuple)):
            w = len(rows[0])
            flat = []
            for r in rows:
                if len(r) != w:
                    raise ShapeError("ragged rows")
                flat.extend(float(v) for v in r)
            return Tensor((len(rows), w), array("d", flat))
        return Tensor((len(rows),), array("d", [float(v) for v in rows]))

    @staticmethod
    def eye(n):
        data = k.zeros(n * n)
        for i in range(n):
            data[i * n + i] = 1.0
        return Tensor((n, n), data)

    @staticmethod
    def randn(shape, rng, scale=1.0):
        n = _size(tuple(shape))
        return Tensor(shape, array("d", [rng.normal() * scale for _ in range(n)]))

    # ----------------------------------------------------------------- queries

    @property
    def size(self):
        return len(self.data)

    @property
    def ndim(self):
        return len(self.shape)

    def item(self):
        if len(self.data) != 1:
            raise ShapeError(f"item() on tensor of size {len(self.data)}")
        return self.data[0]

    def __getitem__(self, idx):
        if isinstance(idx, tuple):
            if len(idx) != len(self.shape):
                raise ShapeError(f"index {idx} on shape {self.shape}")
            flat = 0
            for e, i in zip(self.shape, idx):
                if not 0 <= i < e:
                    raise IndexError(f"index {idx} out of range for {self.shape}")
                flat = flat * e + i
            return self.data[flat]
        if self.ndim == 1:
            return self.data[idx]
        raise ShapeError("scalar indexing needs a full index tuple")

    def tolist(self):
        """Nested Python lists (rows for 2-D, flat for 1-D, float for 0-D)."""
        if self.ndim == 0:
            return self.data[0]
        if self.ndim == 1:
            return list(self.data)
        if self.ndim == 2:
            r, c = self.shape
            return [list(self.data[i * c : (i + 1) * c]) for i in range(r)]
        out = []
        step = _size(self.shape[1:])
        for i in range(self.shape[0]):
            out.append(Tensor(self.shape[1:], self.data[i * step : (i + 1) * step]).tolist())
        return out

    def reshape(self, shape):
        shape = tuple(int(e) for e in shape)
        if _size(shape) != self.size:
            raise ShapeError(f"cannot reshape {self.shape} to {shape}")
        return Tensor(shape, self.data)

    def all_finite(self):
        return all(math.isfinite(v) for v in self.data)

    def __repr__(self):
        head = ", ".join(f"{v:.6g}" for v in list(self.data)[:6])
        tail = ", ..." if self.size > 6 else ""
        return f"Tensor(shape={self.shape}, [{head}{tail}])"

    # -------------------------------------------------------------- arithmetic

    def _same_shape(self, other):
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other):
        self._same_shape(other)
        return Tensor(self.shape, k.add(self.data, other.data))

    def __sub__(self, other):
        self._same_shape(other)
        return Tensor(self.shape, k.sub(self.data, other.data))

    def __mul__(self, other):
        if isinstance(other, Tensor):
            self._same_shape(other)
            return Tensor(self.shape, k.mul(self.data, other.data))
        return Tensor(self.shape, k.scale(self.data, float(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return Tensor(self.shape, k.scale(self.data, -1.0))

    def dot(self, other):
        self._same_shape(other)
        return k.dot(self.data, other.data)

    def norm2(self):
        """Squared Euclidean norm."""
        return k.dot(self.data, self.data)

    def norm(self):
        return math.sqrt(self.norm2())

    def transpose(self):
        if self.ndim != 2:
            raise ShapeError("transpose needs a matrix")
        r, c = self.shape
        out = k.zeros(r * c)
        for i in range(r):
            for j in range(c):
                out[j * r + i] = self.data[i * c + j]
        return Tensor((c, r), out)


def matmul(a, b):
    """Matrix product; the right operand may be a vector (treated as a column)."""
    if a.ndim != 2:
        raise ShapeError(f"left operand must be a matrix, got shape {a.shape}")
    m, kk = a.shape
    if b.ndim == 1:
        if b.shape[0] != kk:
            raise ShapeError(f"inner extents differ: {a.shape} @ {b.shape}")
        return Tensor((m,), k.matmul(a.data, b.data, m, kk, 1))
    if b.ndim == 2:
        if b.shape[0] != kk:
            raise ShapeError(f"inner extents differ: {a.shape} @ {b.shape}")
        n = b.shape[1]
        return Tensor((m, n), k.matmul(a.data, b.data, m, kk, n))
    raise ShapeError(f"right operand must be a matrix or vector, got {b.shape}")


def conv2d_circular(img, kernel):
    """Circular 2-D convolution with the kernel center aligned.

    The kernel must not exceed the image in either extent.
    """
    if img.ndim != 2 or kernel.ndim != 2:
        raise ShapeError("conv2d_circular needs 2-D image and kernel")
    hh, ww = img.shape
    kh, kw = kernel.shape
    if kh > hh or kw > ww:
        raise ShapeError(f"kernel {kernel.shape} larger than image {img.shape}")
    return Tensor(img.shape, k.conv2d(img.data, hh, ww, kernel.data, kh, kw, 0))


def soft_threshold(x, theta):
    """Elementwise sign(x) * max(|x| - theta, 0)."""
    theta = float(theta)
    if theta < 0.0:
        raise ParameterError(f"threshold must be nonnegative, got {theta}")
    return Tensor(x.shape, k.soft_threshold(x.data, theta))


def _pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def fft(x, direction="forward"):
    """Unitary FFT in one or two dimensions.

    Real input of shape ``s`` (extents powers of two) or a complex pair of
    shape ``(2,) + s`` is accepted; the result is the complex pair
    ``(2,) + s`` holding (real, imaginary) planes.  ``direction`` is
    ``"forward"`` or ``"inverse"``; the two compose to the identity.
    """
    if direction not in ("forward", "inverse"):
        raise ParameterError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    inv = direction == "inverse"
    if x.ndim >= 1 and x.shape[0] == 2 and x.ndim in (2, 3):
        spatial = x.shape[1:]
        n = _size(spatial)
        re = x.data[:n]
        im = x.data[n:]
    elif x.ndim in (1, 2):
        spatial = x.shape
        re = array("d", x.data)
        im = k.zeros(x.size)
    else:
        raise ShapeError(f"fft supports 1-D/2-D data, got shape {x.shape}")
    if not all(_pow2(e) for e in spatial):
        raise ShapeError(f"extents must be powers of two, got {spatial}")
    if len(spatial) == 1:
        re, im = k.fft(re, im, spatial[0], 1, 1, 0, inv)
    else:
        hh, ww = spatial
        re, im = k.fft(re, im, ww, hh, 1, ww, inv)  # rows
        re, im = k.fft(re, im, hh, ww, ww, 1, inv)  # columns
    data = array("d", re)
    data.extend(im)
    return Tensor((2,) + spatial, data)


def fft_real_part(x):
    """Real plane of a complex-pair tensor."""
    n = _size(x.shape[1:])
    return Tensor(x.shape[1:], x.data[:n])


def fft_imag_part(x):
    n = _size(x.shape[1:])
    return Tensor(x.shape[1:], x.data[n:])


class ParamSet:
    """Named map from parameter id to tensor plus trainable flag.

    Names are unique; a parameter's shape is fixed at creation.  Values are
    replaced wholesale (tensors stay immutable).
    """

    def __init__(self):
        self._entries = {}

    def add(self, name, tensor, trainable=True):
        if name in self._entries:
            raise ParameterError(f"parameter {name!r} already exists")
        self._entries[name] = (tensor, bool(trainable))
        return tensor

    def get(self, name):
        return self._entries[name][0]

    def set_value(self, name, tensor):
        old, trainable = self._entries[name]
        if old.shape != tensor.shape:
            raise ShapeError(
                f"parameter {name!r} has shape {old.shape}, got {tensor.shape}"
            )
        self._entries[name] = (tensor, trainable)

    def trainable(self, name):
        return self._entries[name][1]

    def names(self):
        return list(self._entries)

    def trainable_names(self):
        return [n for n, (_, t) in self._entries.items() if t]

    def __contains__(self, name):
        return name in self._entries

    def __len__(self):
        return len(self._entries)

    def copy(self):
        out = ParamSet()
        out._entries = dict(self._entries)
        return out

    def merge_prefixed(self, other, prefix):
        """Copy every entry of `other` under `prefix`; returns the name map."""
        renames = {}
        for name in other.names():
            new = f"{prefix}{name}"
            self.add(new, other.get(name), other.trainable(name))
            renames[name] = new
        return renames
