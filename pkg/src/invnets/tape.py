"""Reverse-mode differentiation over tensor operations.

A Tape is an append-only list of primitive-operation records.  Each record
stores the op kind, the ids of its input nodes (always earlier in the
list, so the list is topologically ordered by construction), and the
forward value.  ``backward`` walks the records in reverse and accumulates
vector-Jacobian products; ``replay`` re-executes every record and checks
that the recorded values are reproduced bit for bit.

Scalars are tensors of shape ().  Gradients flow to ``leaf`` nodes;
``constant`` nodes terminate propagation.
"""

from array import array

from invnets.backend import k
from invnets.errors import ParameterError, ShapeError, TapeError
from invnets.tensor import Tensor
from invnets import transforms


class Node:
    __slots__ = ("op", "inputs", "value", "aux")

    def __init__(self, op, inputs, value, aux=None):
        self.op = op
        self.inputs = inputs
        self.value = value
        self.aux = aux


def _cols(shape):
    # interpret shape as (rows..., B): column count for broadcasting ops
    return shape[-1] if len(shape) == 2 else 1


class Tape:
    def __init__(self):
        self.nodes = []

    def __len__(self):
        return len(self.nodes)

    def value(self, nid):
        return self.nodes[nid].value

    def shape(self, nid):
        return self.nodes[nid].value.shape

    def _append(self, op, inputs, aux=None):
        vals = [self.nodes[i].value for i in inputs]
        value = _compute(op, vals, aux)
        self.nodes.append(Node(op, tuple(inputs), value, aux))
        return len(self.nodes) - 1

    # -------------------------------------------------------------- leaves

    def constant(self, tensor):
        self.nodes.append(Node("const", (), tensor, None))
        return len(self.nodes) - 1

    def leaf(self, tensor, key=None):
        self.nodes.append(Node("leaf", (), tensor, key))
        return len(self.nodes) - 1

    # ----------------------------------------------------------------- ops

    def add(self, a, b):
        self._check_same(a, b)
        return self._append("add", (a, b))

    def sub(self, a, b):
        self._check_same(a, b)
        return self._append("sub", (a, b))

    def mul(self, a, b):
        self._check_same(a, b)
        return self._append("mul", (a, b))

    def scale(self, a, s):
        return self._append("scale", (a,), float(s))

    def neg(self, a):
        return self.scale(a, -1.0)

    def matmul(self, a, b):
        sa, sb = self.shape(a), self.shape(b)
        if len(sa) != 2 or len(sb) not in (1, 2) or sa[1] != sb[0]:
            raise ShapeError(f"matmul shapes {sa} @ {sb}")
        return self._append("matmul", (a, b))

    def rowadd(self, x, b):
        sx, sb = self.shape(x), self.shape(b)
        if len(sb) != 1 or sx[0] != sb[0]:
            raise ShapeError(f"rowadd shapes {sx} + {sb}")
        return self._append("rowadd", (x, b))

    def rowmul(self, x, s):
        sx, ss = self.shape(x), self.shape(s)
        if len(ss) != 1 or sx[0] != ss[0]:
            raise ShapeError(f"rowmul shapes {sx} * {ss}")
        return self._append("rowmul", (x, s))

    def tanh(self, a):
        return self._append("tanh", (a,))

    def sin(self, a):
        return self._append("sin", (a,))

    def cos(self, a):
        return self._append("cos", (a,))

    def dtanh(self, y):
        # 1 - y^2 for y = tanh(x); the tanh derivative as a graph value
        return self._append("dtanh", (y,))

    def relu(self, a):
        return self._append("relu", (a,))

    def exp(self, a):
        return self._append("exp", (a,))

    def soft_threshold(self, x, theta):
        if self.value(theta).size != 1:
            raise ShapeError("soft_threshold threshold must be scalar")
        return self._append("st", (x, theta))

    def smul(self, x, s):
        if self.value(s).size != 1:
            raise ShapeError("smul scale must be scalar")
        return self._append("smul", (x, s))

    def sadd(self, x, s):
        if self.value(s).size != 1:
            raise ShapeError("sadd addend must be scalar")
        return self._append("sadd", (x, s))

    def conv2d(self, img, kernel):
        si, sk = self.shape(img), self.shape(kernel)
        if len(si) != 2 or len(sk) != 2:
            raise ShapeError("conv2d needs 2-D image and kernel")
        if sk[0] > si[0] or sk[1] > si[1]:
            raise ShapeError(f"kernel {sk} larger than image {si}")
        return self._append("conv2d", (img, kernel))

    def gather(self, src, idx, out_shape):
        if len(self.shape(src)) != 1:
            raise ShapeError("gather source must be 1-D")
        return self._append("gather", (src,), (idx, tuple(out_shape)))

    def transform(self, x, kind, direction, levels=1, spatial=None):
        """Orthonormal transform; `spatial` is the signal shape.

        A (N, B) node with spatial (N,) is a batch of B column signals;
        otherwise the node shape must equal the signal shape.
        """
        sx = self.shape(x)
        if spatial is None:
            spatial = sx
        spatial = tuple(spatial)
        _transform_ncol(sx, spatial)  # validates
        transforms.check_transform_shape(spatial, levels)
        return self._append("transform", (x,), (kind, direction, levels, spatial))

    def vstack2(self, a, b):
        sa, sb = self.shape(a), self.shape(b)
        if len(sa) != len(sb) or sa[1:] != sb[1:]:
            raise ShapeError(f"vstack2 shapes {sa}, {sb}")
        return self._append("vstack2", (a, b))

    def sumsq(self, a):
        return self._append("sumsq", (a,))

    def sum(self, a):
        return self._append("sum", (a,))

    def dot(self, a, b):
        self._check_same(a, b)
        return self._append("dot", (a, b))

    def _check_same(self, a, b):
        if self.shape(a) != self.shape(b):
            raise ShapeError(f"shape mismatch: {self.shape(a)} vs {self.shape(b)}")

    # ------------------------------------------------------------- backward

    def backward(self, loss):
        """Gradients of the scalar at node ``loss`` w.r.t. every node.

        Returns a dict node-id -> Tensor for all nodes on a path from a
        leaf/constant to the loss.
        """
        lv = self.nodes[loss].value
        if lv.size != 1:
            raise TapeError(f"loss node must be scalar, has shape {lv.shape}")
        grads = {loss: Tensor(lv.shape, array("d", [1.0]))}
        for nid in range(loss, -1, -1):
            g = grads.get(nid)
            if g is None:
                continue
            node = self.nodes[nid]
            if not node.inputs:
                continue
            vals = [self.nodes[i].value for i in node.inputs]
            for iid, gt in _vjp(node, g, vals):
                prev = grads.get(iid)
                grads[iid] = gt if prev is None else prev + gt
        return grads

    def leaf_grads(self, grads):
        """Map leaf key -> gradient tensor (zeros for untouched leaves)."""
        out = {}
        for nid, node in enumerate(self.nodes):
            if node.op == "leaf" and node.aux is not None:
                g = grads.get(nid)
                out[node.aux] = g if g is not None else Tensor.zeros(node.value.shape)
        return out

    def replay(self):
        """Recompute every node from its inputs; True iff bit-identical."""
        for node in self.nodes:
            if not node.inputs:
                continue
            vals = [self.nodes[i].value for i in node.inputs]
            redone = _compute(node.op, vals, node.aux)
            if redone.data != node.value.data:
                return False
        return True


def _transform_ncol(node_shape, spatial):
    if node_shape == spatial:
        return 1
    if len(spatial) == 1 and len(node_shape) == 2 and node_shape[0] == spatial[0]:
        return node_shape[1]
    raise ShapeError(f"node shape {node_shape} incompatible with signal {spatial}")


# ------------------------------------------------------------------- forward


def _compute(op, vals, aux):
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "scale":
        return vals[0] * aux
    if op == "matmul":
        a, b = vals
        m, kk = a.shape
        if b.ndim == 1:
            return Tensor((m,), k.matmul(a.data, b.data, m, kk, 1))
        return Tensor((m, b.shape[1]), k.matmul(a.data, b.data, m, kk, b.shape[1]))
    if op == "rowadd":
        x, b = vals
        return Tensor(x.shape, k.rowadd(x.data, b.data, x.shape[0], _cols(x.shape)))
    if op == "rowmul":
        x, s = vals
        return Tensor(x.shape, k.rowmul(x.data, s.data, x.shape[0], _cols(x.shape)))
    if op == "tanh":
        return Tensor(vals[0].shape, k.tanh_(vals[0].data))
    if op == "sin":
        return Tensor(vals[0].shape, k.sin_(vals[0].data))
    if op == "cos":
        return Tensor(vals[0].shape, k.cos_(vals[0].data))
    if op == "dtanh":
        y = vals[0]
        ones = array("d", [1.0]) * y.size
        return Tensor(y.shape, k.sub(ones, k.mul(y.data, y.data)))
    if op == "relu":
        return Tensor(vals[0].shape, k.relu(vals[0].data))
    if op == "exp":
        return Tensor(vals[0].shape, k.exp_(vals[0].data))
    if op == "st":
        x, th = vals
        t = th.data[0]
        if t < 0.0:
            raise ParameterError(f"soft threshold must be nonnegative, got {t}")
        return Tensor(x.shape, k.soft_threshold(x.data, t))
    if op == "smul":
        x, s = vals
        return Tensor(x.shape, k.scale(x.data, s.data[0]))
    if op == "sadd":
        x, s = vals
        return Tensor(x.shape, k.add_scalar(x.data, s.data[0]))
    if op == "conv2d":
        img, ker = vals
        hh, ww = img.shape
        kh, kw = ker.shape
        return Tensor(img.shape, k.conv2d(img.data, hh, ww, ker.data, kh, kw, 0))
    if op == "gather":
        idx, out_shape = aux
        ones = array("d", [1.0]) * len(idx)
        return Tensor(out_shape, k.gather_scale(vals[0].data, idx, ones))
    if op == "transform":
        kind, direction, levels, spatial = aux
        x = vals[0]
        ncol = _transform_ncol(x.shape, spatial)
        data = transforms.apply_transform(kind, direction, x.data, spatial, ncol, levels)
        return Tensor(x.shape, data)
    if op == "vstack2":
        a, b = vals
        data = array("d", a.data)
        data.extend(b.data)
        if a.ndim == 1:
            return Tensor((a.shape[0] + b.shape[0],), data)
        return Tensor((a.shape[0] + b.shape[0], a.shape[1]), data)
    if op == "sumsq":
        return Tensor((), array("d", [k.dot(vals[0].data, vals[0].data)]))
    if op == "sum":
        return Tensor((), array("d", [k.sum_all(vals[0].data)]))
    if op == "dot":
        return Tensor((), array("d", [k.dot(vals[0].data, vals[1].data)]))
    raise TapeError(f"unknown op {op!r}")


# ------------------------------------------------------------------ backward


def _vjp(node, g, vals):
    op = node.op
    i0 = node.inputs[0]
    if op == "add":
        return ((i0, g), (node.inputs[1], g))
    if op == "sub":
        return ((i0, g), (node.inputs[1], -g))
    if op == "mul":
        return ((i0, g * vals[1]), (node.inputs[1], g * vals[0]))
    if op == "scale":
        return ((i0, g * node.aux),)
    if op == "matmul":
        a, b = vals
        m, kk = a.shape
        n = 1 if b.ndim == 1 else b.shape[1]
        ga = Tensor(a.shape, k.matmul_nt(g.data, b.data, m, n, kk))
        gb = Tensor(b.shape, k.matmul_tn(a.data, g.data, m, kk, n))
        return ((i0, ga), (node.inputs[1], gb))
    if op == "rowadd":
        x = vals[0]
        gb = Tensor((x.shape[0],), k.rowsum(g.data, x.shape[0], _cols(x.shape)))
        return ((i0, g), (node.inputs[1], gb))
    if op == "rowmul":
        x, s = vals
        m, ncol = x.shape[0], _cols(x.shape)
        gx = Tensor(x.shape, k.rowmul(g.data, s.data, m, ncol))
        gs = Tensor((m,), k.rowdot(g.data, x.data, m, ncol))
        return ((i0, gx), (node.inputs[1], gs))
    if op == "tanh":
        return ((i0, Tensor(g.shape, k.tanh_grad(node.value.data, g.data))),)
    if op == "sin":
        return ((i0, Tensor(g.shape, k.mul(g.data, k.cos_(vals[0].data)))),)
    if op == "cos":
        gx = k.mul(g.data, k.sin_(vals[0].data))
        return ((i0, Tensor(g.shape, k.scale(gx, -1.0))),)
    if op == "dtanh":
        gy = k.mul(g.data, vals[0].data)
        return ((i0, Tensor(g.shape, k.scale(gy, -2.0))),)
    if op == "relu":
        return ((i0, Tensor(g.shape, k.mul(g.data, k.gtzero_mask(vals[0].data)))),)
    if op == "exp":
        return ((i0, g * node.value),)
    if op == "st":
        x, th = vals
        t = th.data[0]
        gx = Tensor(x.shape, k.mul(g.data, k.st_mask(x.data, t)))
        gth = Tensor(th.shape, array("d", [k.st_theta_grad(x.data, t, g.data)]))
        return ((i0, gx), (node.inputs[1], gth))
    if op == "smul":
        x, s = vals
        gx = Tensor(x.shape, k.scale(g.data, s.data[0]))
        gs = Tensor(s.shape, array("d", [k.dot(x.data, g.data)]))
        return ((i0, gx), (node.inputs[1], gs))
    if op == "sadd":
        x, s = vals
        gs = Tensor(s.shape, array("d", [k.sum_all(g.data)]))
        return ((i0, g), (node.inputs[1], gs))
    if op == "conv2d":
        img, ker = vals
        hh, ww = img.shape
        kh, kw = ker.shape
        gx = Tensor(img.shape, k.conv2d(g.data, hh, ww, ker.data, kh, kw, 1))
        gk = Tensor(ker.shape, k.conv2d_kernel_grad(img.data, g.data, hh, ww, kh, kw))
        return ((i0, gx), (node.inputs[1], gk))
    if op == "gather":
        idx, _ = node.aux
        ones = array("d", [1.0]) * len(idx)
        gsrc = Tensor(
            vals[0].shape, k.scatter_scale_add(g.data, idx, ones, vals[0].size)
        )
        return ((i0, gsrc),)
    if op == "transform":
        kind, direction, levels, spatial = node.aux
        other = "adjoint" if direction == "forward" else "forward"
        ncol = _transform_ncol(vals[0].shape, spatial)
        data = transforms.apply_transform(kind, other, g.data, spatial, ncol, levels)
        return ((i0, Tensor(g.shape, data)),)
    if op == "vstack2":
        a, b = vals
        cut = a.size
        ga = Tensor(a.shape, g.data[:cut])
        gb = Tensor(b.shape, g.data[cut:])
        return ((i0, ga), (node.inputs[1], gb))
    if op == "sumsq":
        return ((i0, vals[0] * (2.0 * g.data[0])),)
    if op == "sum":
        return ((i0, Tensor.full(vals[0].shape, g.data[0])),)
    if op == "dot":
        gv = g.data[0]
        return ((i0, vals[1] * gv), (node.inputs[1], vals[0] * gv))
    raise TapeError(f"no vjp for op {op!r}")
