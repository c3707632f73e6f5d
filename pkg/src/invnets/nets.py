"""Network specifications as typed layer chains.

A NetSpec is an ordered list of layers drawn from a closed kind set:
affine, circular convolution, pointwise nonlinearity, diagonal coefficient
mask, orthonormal transform, and residual add (skip connection back to an
earlier layer or to the input).  Parameters live in a separate ParamSet
and are referenced by name; every parameter in the set must be bound by
exactly one layer.

Evaluation happens on a Tape.  Vector chains can evaluate a whole column
batch at once; image chains take one sample at a time.  For physics
losses, ``forward_with_tangent`` additionally propagates the derivative
of the output with respect to one input coordinate through the same tape,
so the derivative is itself differentiable with respect to parameters.
"""

import math
from array import array
from dataclasses import dataclass, replace

from invnets.backend import k
from invnets.errors import ShapeError, StructureError
from invnets.tape import Tape
from invnets.tensor import ParamSet, Tensor
from invnets import transforms

INPUT_TAP = -1

POINTWISE_FNS = ("tanh", "sin", "relu", "neg")


@dataclass(frozen=True)
class Affine:
    weight: str
    bias: str | None = None


@dataclass(frozen=True)
class Conv:
    kernel: str


@dataclass(frozen=True)
class Pointwise:
    fn: str


@dataclass(frozen=True)
class DiagMask:
    mask: str
    paired: bool = False  # gains tied over conjugate-symmetric coefficient pairs


@dataclass(frozen=True)
class Transform:
    kind: str  # "fft" | "haar"
    direction: str  # "forward" | "adjoint"
    levels: int = 1


@dataclass(frozen=True)
class ResidualAdd:
    tap: int  # INPUT_TAP or index of an earlier layer


LAYER_KINDS = (Affine, Conv, Pointwise, DiagMask, Transform, ResidualAdd)


class NetSpec:
    """Ordered layer chain with a fixed input shape."""

    def __init__(self, in_shape, layers, aux_outputs=None):
        self.in_shape = tuple(in_shape)
        self.layers = list(layers)
        self.aux_outputs = dict(aux_outputs or {})
        for name, idx in self.aux_outputs.items():
            if not 0 <= idx < len(self.layers):
                raise StructureError(f"aux output {name!r} taps layer {idx}")

    def param_names(self):
        names = []
        for layer in self.layers:
            if isinstance(layer, Affine):
                names.append(layer.weight)
                if layer.bias is not None:
                    names.append(layer.bias)
            elif isinstance(layer, Conv):
                names.append(layer.kernel)
            elif isinstance(layer, DiagMask):
                names.append(layer.mask)
        return names

    def validate(self, params):
        """Shape-check the chain against a ParamSet; returns the output shape."""
        names = self.param_names()
        if len(names) != len(set(names)):
            raise StructureError(f"parameter bound more than once: {sorted(names)}")
        for name in names:
            if name not in params:
                raise StructureError(f"layer references unknown parameter {name!r}")
        unbound = [n for n in params.names() if n not in set(names)]
        if unbound:
            raise StructureError(f"parameters not bound by any layer: {unbound}")
        shape = self.in_shape
        shapes = []
        for i, layer in enumerate(self.layers):
            shape = self._layer_out_shape(layer, shape, params, i, shapes)
            shapes.append(shape)
        return shape

    def out_shape(self, params):
        return self.validate(params)

    def forward(self, bindings, x_node):
        return net_forward(self, bindings, x_node)

    def _layer_out_shape(self, layer, shape, params, idx, shapes):
        if isinstance(layer, Affine):
            w = params.get(layer.weight)
            if w.ndim != 2 or len(shape) != 1 or w.shape[1] != shape[0]:
                raise StructureError(
                    f"layer {idx}: affine weight {w.shape} on input {shape}"
                )
            if layer.bias is not None:
                b = params.get(layer.bias)
                if b.shape != (w.shape[0],):
                    raise StructureError(f"layer {idx}: bias shape {b.shape}")
            return (w.shape[0],)
        if isinstance(layer, Conv):
            ker = params.get(layer.kernel)
            if len(shape) != 2 or ker.ndim != 2:
                raise StructureError(f"layer {idx}: conv needs 2-D data and kernel")
            if ker.shape[0] > shape[0] or ker.shape[1] > shape[1]:
                raise StructureError(
                    f"layer {idx}: kernel {ker.shape} larger than image {shape}"
                )
            return shape
        if isinstance(layer, Pointwise):
            if layer.fn not in POINTWISE_FNS:
                raise StructureError(f"layer {idx}: unknown pointwise fn {layer.fn!r}")
            return shape
        if isinstance(layer, DiagMask):
            mask = params.get(layer.mask)
            if layer.paired:
                _, n_slots, _ = transforms.pair_slots(shape)
                if mask.shape != (n_slots,):
                    raise StructureError(
                        f"layer {idx}: paired mask needs shape ({n_slots},), got {mask.shape}"
                    )
            elif mask.shape != shape:
                raise StructureError(
                    f"layer {idx}: mask shape {mask.shape} vs data {shape}"
                )
            return shape
        if isinstance(layer, Transform):
            transforms.check_transform_shape(shape, layer.levels)
            if layer.kind not in ("fft", "haar"):
                raise StructureError(f"layer {idx}: unknown transform {layer.kind!r}")
            if layer.direction not in ("forward", "adjoint"):
                raise StructureError(f"layer {idx}: bad direction {layer.direction!r}")
            return shape
        if isinstance(layer, ResidualAdd):
            if layer.tap == INPUT_TAP:
                ref = self.in_shape
            elif 0 <= layer.tap < idx:
                ref = shapes[layer.tap]
            else:
                raise StructureError(
                    f"layer {idx}: residual tap {layer.tap} is not an earlier layer"
                )
            if ref != shape:
                raise StructureError(
                    f"layer {idx}: residual shapes differ: {ref} vs {shape}"
                )
            return shape
        raise StructureError(f"layer {idx}: unknown layer kind {type(layer).__name__}")


class Bindings:
    """Leaf-node cache tying one ParamSet to one Tape."""

    def __init__(self, tape, params):
        self.tape = tape
        self.params = params
        self._nodes = {}

    def node(self, name):
        nid = self._nodes.get(name)
        if nid is None:
            value = self.params.get(name)
            if self.params.trainable(name):
                nid = self.tape.leaf(value, name)
            else:
                nid = self.tape.constant(value)
            self._nodes[name] = nid
        return nid


def _batch_shape(net, x_shape):
    """Columns in the batch, or None for a single sample."""
    if x_shape == net.in_shape:
        return None
    if (
        len(net.in_shape) == 1
        and len(x_shape) == 2
        and x_shape[0] == net.in_shape[0]
    ):
        return x_shape[1]
    raise ShapeError(f"input shape {x_shape} does not match net input {net.in_shape}")


def net_forward(net, bindings, x_node):
    """Evaluate the chain; returns (output node, per-layer output nodes)."""
    tape = bindings.tape
    ncol = _batch_shape(net, tape.shape(x_node))
    cur = x_node
    outs = []
    for layer in net.layers:
        cur = _apply_layer(net, tape, bindings, layer, cur, x_node, outs, ncol)
        outs.append(cur)
    return cur, outs


def _apply_layer(net, tape, bindings, layer, cur, x_node, outs, ncol):
    if isinstance(layer, Affine):
        w = bindings.node(layer.weight)
        y = tape.matmul(w, cur)
        if layer.bias is not None:
            b = bindings.node(layer.bias)
            y = tape.rowadd(y, b) if ncol else tape.add(y, b)
        return y
    if isinstance(layer, Conv):
        return tape.conv2d(cur, bindings.node(layer.kernel))
    if isinstance(layer, Pointwise):
        if layer.fn == "tanh":
            return tape.tanh(cur)
        if layer.fn == "sin":
            return tape.sin(cur)
        if layer.fn == "relu":
            return tape.relu(cur)
        return tape.neg(cur)
    if isinstance(layer, DiagMask):
        mask = bindings.node(layer.mask)
        shape = tape.shape(cur)
        signal = shape if ncol is None else shape[:1]
        if layer.paired:
            slot_of, _, _ = transforms.pair_slots(signal)
            mask = tape.gather(mask, slot_of, signal)
        if ncol is None:
            return tape.mul(cur, mask)
        return tape.rowmul(cur, mask)
    if isinstance(layer, Transform):
        shape = tape.shape(cur)
        signal = shape if ncol is None else shape[:1]
        return tape.transform(cur, layer.kind, layer.direction, layer.levels, signal)
    if isinstance(layer, ResidualAdd):
        ref = x_node if layer.tap == INPUT_TAP else outs[layer.tap]
        return tape.add(cur, ref)
    raise StructureError(f"unknown layer kind {type(layer).__name__}")


def forward_with_tangents(net, bindings, x_node, seed_nodes):
    """Forward pass carrying input-directional derivatives through the tape.

    Each entry of ``seed_nodes`` holds one input-space direction (same
    shape as the input); the corresponding output tangent is d(output)
    along it.  Outputs and tangents are ordinary tape nodes, so losses
    built from the derivatives stay differentiable with respect to the
    parameters.  Returns (out, [tangent outs], layer outputs).
    """
    tape = bindings.tape
    ncol = _batch_shape(net, tape.shape(x_node))
    for s in seed_nodes:
        if tape.shape(s) != tape.shape(x_node):
            raise ShapeError("tangent seed must match the input shape")
    cur = x_node
    tans = list(seed_nodes)
    outs = []
    tans_hist = []
    for layer in net.layers:
        cur, tans = _apply_layer_tangent(
            net, tape, bindings, layer, cur, tans, x_node, seed_nodes, outs, tans_hist, ncol
        )
        outs.append(cur)
        tans_hist.append(tans)
    return cur, tans, outs


def forward_with_tangent(net, bindings, x_node, seed_node):
    out, tans, outs = forward_with_tangents(net, bindings, x_node, [seed_node])
    return out, tans[0], outs


def _apply_layer_tangent(
    net, tape, bindings, layer, cur, tans, x_node, seed_nodes, outs, tans_hist, ncol
):
    if isinstance(layer, Affine):
        w = bindings.node(layer.weight)
        y = tape.matmul(w, cur)
        if layer.bias is not None:
            b = bindings.node(layer.bias)
            y = tape.rowadd(y, b) if ncol else tape.add(y, b)
        return y, [tape.matmul(w, t) for t in tans]
    if isinstance(layer, Conv):
        ker = bindings.node(layer.kernel)
        return tape.conv2d(cur, ker), [tape.conv2d(t, ker) for t in tans]
    if isinstance(layer, Pointwise):
        if layer.fn == "tanh":
            y = tape.tanh(cur)
            dy = tape.dtanh(y)
            return y, [tape.mul(t, dy) for t in tans]
        if layer.fn == "sin":
            dy = tape.cos(cur)
            return tape.sin(cur), [tape.mul(t, dy) for t in tans]
        if layer.fn == "relu":
            gate = tape.constant(
                Tensor(tape.shape(cur), k.gtzero_mask(tape.value(cur).data))
            )
            return tape.relu(cur), [tape.mul(t, gate) for t in tans]
        return tape.neg(cur), [tape.neg(t) for t in tans]
    if isinstance(layer, DiagMask):
        mask = bindings.node(layer.mask)
        shape = tape.shape(cur)
        signal = shape if ncol is None else shape[:1]
        if layer.paired:
            slot_of, _, _ = transforms.pair_slots(signal)
            mask = tape.gather(mask, slot_of, signal)
        if ncol is None:
            return tape.mul(cur, mask), [tape.mul(t, mask) for t in tans]
        return tape.rowmul(cur, mask), [tape.rowmul(t, mask) for t in tans]
    if isinstance(layer, Transform):
        shape = tape.shape(cur)
        signal = shape if ncol is None else shape[:1]
        y = tape.transform(cur, layer.kind, layer.direction, layer.levels, signal)
        ty = [
            tape.transform(t, layer.kind, layer.direction, layer.levels, signal)
            for t in tans
        ]
        return y, ty
    if isinstance(layer, ResidualAdd):
        if layer.tap == INPUT_TAP:
            y = tape.add(cur, x_node)
            return y, [tape.add(t, s) for t, s in zip(tans, seed_nodes)]
        y = tape.add(cur, outs[layer.tap])
        ref = tans_hist[layer.tap]
        return y, [tape.add(t, r) for t, r in zip(tans, ref)]
    raise StructureError(f"unknown layer kind {type(layer).__name__}")


def input_grad(net, params, x, coord):
    """d(scalar output)/d(x[coord]) by reverse mode over the tape.

    The network's output must have a single element; ``coord`` indexes
    into the input (flat index or full tuple).
    """
    out_shape = net.validate(params)
    n_out = 1
    for e in out_shape:
        n_out *= e
    if n_out != 1:
        raise ShapeError(f"input_grad needs a scalar-output net, output is {out_shape}")
    flat = _flat_index(net.in_shape, coord)
    tape = Tape()
    bindings = Bindings(tape, params)
    x_node = tape.leaf(x, "__input__")
    out, _ = net_forward(net, bindings, x_node)
    grads = tape.backward(out)
    gx = grads.get(x_node)
    if gx is None:
        return Tensor.scalar(0.0)
    return Tensor.scalar(gx.data[flat])


def _flat_index(shape, coord):
    if isinstance(coord, int):
        n = 1
        for e in shape:
            n *= e
        if not 0 <= coord < n:
            raise IndexError(f"coord {coord} out of range for input shape {shape}")
        return coord
    if len(coord) != len(shape):
        raise IndexError(f"coord {coord} does not index shape {shape}")
    flat = 0
    for e, c in zip(shape, coord):
        if not 0 <= c < e:
            raise IndexError(f"coord {coord} out of range for input shape {shape}")
        flat = flat * e + c
    return flat


def basis_tangent(in_shape, coord, ncol=None):
    """Constant one-hot direction tensor for coordinate ``coord``.

    With ``ncol`` the one-hot column is replicated across a batch.
    """
    flat = _flat_index(in_shape, coord)
    n = 1
    for e in in_shape:
        n *= e
    if ncol is None:
        data = array("d", bytes(8 * n))
        data[flat] = 1.0
        return Tensor(in_shape, data)
    data = array("d", bytes(8 * n * ncol))
    for j in range(ncol):
        data[flat * ncol + j] = 1.0
    return Tensor((n, ncol), data)


def rename_params(net, mapping):
    """New NetSpec with layer parameter names rewritten through mapping."""
    new_layers = []
    for layer in net.layers:
        if isinstance(layer, Affine):
            new_layers.append(
                replace(
                    layer,
                    weight=mapping[layer.weight],
                    bias=None if layer.bias is None else mapping[layer.bias],
                )
            )
        elif isinstance(layer, Conv):
            new_layers.append(replace(layer, kernel=mapping[layer.kernel]))
        elif isinstance(layer, DiagMask):
            new_layers.append(replace(layer, mask=mapping[layer.mask]))
        else:
            new_layers.append(layer)
    return NetSpec(net.in_shape, new_layers, net.aux_outputs)


def mlp_spec(sizes, activation="tanh", prefix="", final_activation=False):
    """Fully-connected chain: affine + activation per hidden layer.

    ``sizes`` is (in, hidden..., out).  Returns (NetSpec, list of parameter
    names); parameters must be created separately (see ``init_mlp``).
    """
    layers = []
    names = []
    for i in range(len(sizes) - 1):
        w = f"{prefix}w{i}"
        b = f"{prefix}b{i}"
        layers.append(Affine(w, b))
        names.extend([w, b])
        if i < len(sizes) - 2 or final_activation:
            layers.append(Pointwise(activation))
    return NetSpec((sizes[0],), layers), names


def init_mlp(sizes, rng, activation="tanh", prefix="", final_activation=False,
             params=None):
    """Create an MLP spec plus Glorot-style initialized parameters."""
    net, _ = mlp_spec(sizes, activation, prefix, final_activation)
    if params is None:
        params = ParamSet()
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        sd = math.sqrt(2.0 / (fan_in + fan_out))
        params.add(f"{prefix}w{i}", Tensor.randn((fan_out, fan_in), rng, sd))
        params.add(f"{prefix}b{i}", Tensor.zeros((fan_out,)))
    return net, params
