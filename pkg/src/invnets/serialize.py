"""Versioned text serialization for nets and parameter sets.

The format is line-oriented, self-describing, and exact: every float is
written with ``repr``, which round-trips IEEE doubles bit for bit.

    invnets-state v1
    object <name> netspec
    in_shape <e0> <e1> ...
    aux <name> <layer index>          (zero or more)
    layer affine weight=W bias=B      (bias=- when absent)
    layer conv kernel=K
    layer pointwise fn=tanh
    layer diagmask mask=M paired=1
    layer transform kind=fft direction=forward levels=2
    layer residual tap=-1
    end
    object <name> unfolded
    unfolded layers=6 tied=1 in=64 out=64
    end
    object <name> params
    param <id> trainable=1 shape <e0> ...
    v <repr> <repr> ...               (8 values per line)
    end
    done

Loading is atomic: nothing is returned unless the whole file parses,
and parse errors carry the byte offset of the offending line.
"""

from array import array

from invnets.errors import StateFormatError, StateVersionError
from invnets.nets import (
    Affine,
    Conv,
    DiagMask,
    NetSpec,
    Pointwise,
    ResidualAdd,
    Transform,
)
from invnets.tensor import ParamSet, Tensor
from invnets.unfolded import UnfoldedNet

HEADER = "invnets-state v1"
_CHUNK = 8


def _layer_line(layer):
    if isinstance(layer, Affine):
        bias = "-" if layer.bias is None else layer.bias
        return f"layer affine weight={layer.weight} bias={bias}"
    if isinstance(layer, Conv):
        return f"layer conv kernel={layer.kernel}"
    if isinstance(layer, Pointwise):
        return f"layer pointwise fn={layer.fn}"
    if isinstance(layer, DiagMask):
        return f"layer diagmask mask={layer.mask} paired={int(layer.paired)}"
    if isinstance(layer, Transform):
        return (
            f"layer transform kind={layer.kind} direction={layer.direction} "
            f"levels={layer.levels}"
        )
    if isinstance(layer, ResidualAdd):
        return f"layer residual tap={layer.tap}"
    raise StateFormatError(f"unserializable layer {type(layer).__name__}", 0)


def _emit_netspec(lines, name, net):
    lines.append(f"object {name} netspec")
    lines.append("in_shape " + " ".join(str(e) for e in net.in_shape))
    for aux, idx in net.aux_outputs.items():
        lines.append(f"aux {aux} {idx}")
    for layer in net.layers:
        lines.append(_layer_line(layer))
    lines.append("end")


def _emit_unfolded(lines, name, net):
    lines.append(f"object {name} unfolded")
    lines.append(
        f"unfolded layers={net.n_layers} tied={int(net.tied)} "
        f"in={net.in_dim} out={net.out_dim}"
    )
    lines.append("end")


def _emit_params(lines, name, params):
    lines.append(f"object {name} params")
    for pid in params.names():
        t = params.get(pid)
        shape = " ".join(str(e) for e in t.shape)
        lines.append(
            f"param {pid} trainable={int(params.trainable(pid))} shape {shape}".rstrip()
        )
        for i in range(0, t.size, _CHUNK):
            lines.append("v " + " ".join(repr(v) for v in t.data[i : i + _CHUNK]))
    lines.append("end")


def save_state(path, objects):
    """Write named NetSpec / UnfoldedNet / ParamSet objects to ``path``."""
    lines = [HEADER]
    for name, obj in objects.items():
        if " " in name:
            raise StateFormatError(f"object name {name!r} contains spaces", 0)
        if isinstance(obj, NetSpec):
            _emit_netspec(lines, name, obj)
        elif isinstance(obj, UnfoldedNet):
            _emit_unfolded(lines, name, obj)
        elif isinstance(obj, ParamSet):
            _emit_params(lines, name, obj)
        else:
            raise StateFormatError(f"cannot serialize {type(obj).__name__}", 0)
    lines.append("done")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, text):
        self.lines = []
        offset = 0
        for raw in text.split("\n"):
            self.lines.append((offset, raw))
            offset += len(raw.encode("ascii", "replace")) + 1
        self.pos = 0
        self.end_offset = offset

    def peek(self):
        while self.pos < len(self.lines) and not self.lines[self.pos][1].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            return None, self.end_offset
        return self.lines[self.pos][1], self.lines[self.pos][0]

    def next(self):
        line, off = self.peek()
        if line is not None:
            self.pos += 1
        return line, off


def _fields(line, off, expect_key=None):
    parts = line.split()
    kv = {}
    for p in parts[1:]:
        if "=" in p:
            key, _, val = p.partition("=")
            kv[key] = val
    return parts, kv


def _parse_layer(line, off):
    parts, kv = _fields(line, off)
    kind = parts[1] if len(parts) > 1 else ""
    try:
        if kind == "affine":
            bias = kv["bias"]
            return Affine(kv["weight"], None if bias == "-" else bias)
        if kind == "conv":
            return Conv(kv["kernel"])
        if kind == "pointwise":
            return Pointwise(kv["fn"])
        if kind == "diagmask":
            return DiagMask(kv["mask"], bool(int(kv["paired"])))
        if kind == "transform":
            return Transform(kv["kind"], kv["direction"], int(kv["levels"]))
        if kind == "residual":
            return ResidualAdd(int(kv["tap"]))
    except (KeyError, ValueError) as exc:
        raise StateFormatError(f"bad layer line: {exc}", off) from exc
    raise StateFormatError(f"unknown layer kind {kind!r}", off)


def _parse_netspec(reader):
    in_shape = None
    aux = {}
    layers = []
    while True:
        line, off = reader.next()
        if line is None:
            raise StateFormatError("unexpected end of file in netspec", off)
        if line == "end":
            if in_shape is None:
                raise StateFormatError("netspec missing in_shape", off)
            return NetSpec(in_shape, layers, aux)
        if line.startswith("in_shape"):
            try:
                in_shape = tuple(int(v) for v in line.split()[1:])
            except ValueError as exc:
                raise StateFormatError(f"bad in_shape: {exc}", off) from exc
        elif line.startswith("aux "):
            parts = line.split()
            if len(parts) != 3:
                raise StateFormatError("bad aux line", off)
            aux[parts[1]] = int(parts[2])
        elif line.startswith("layer "):
            layers.append(_parse_layer(line, off))
        else:
            raise StateFormatError(f"unexpected line in netspec: {line!r}", off)


def _parse_unfolded(reader):
    spec = None
    while True:
        line, off = reader.next()
        if line is None:
            raise StateFormatError("unexpected end of file in unfolded record", off)
        if line == "end":
            if spec is None:
                raise StateFormatError("unfolded record missing fields", off)
            return spec
        if line.startswith("unfolded"):
            _, kv = _fields(line, off)
            try:
                spec = UnfoldedNet(
                    int(kv["layers"]), bool(int(kv["tied"])), int(kv["in"]), int(kv["out"])
                )
            except (KeyError, ValueError) as exc:
                raise StateFormatError(f"bad unfolded line: {exc}", off) from exc
        else:
            raise StateFormatError(f"unexpected line in unfolded record: {line!r}", off)


def _parse_params(reader):
    params = ParamSet()
    pending = None  # (name, trainable, shape, values, needed)
    while True:
        line, off = reader.next()
        if line is None:
            raise StateFormatError("unexpected end of file in params", off)
        if line == "end":
            if pending is not None:
                _finish_param(params, pending, off)
            return params
        if line.startswith("param "):
            if pending is not None:
                _finish_param(params, pending, off)
            parts = line.split()
            try:
                name = parts[1]
                trainable = bool(int(parts[2].split("=")[1]))
                sh_at = parts.index("shape")
                shape = tuple(int(v) for v in parts[sh_at + 1 :])
            except (IndexError, ValueError) as exc:
                raise StateFormatError(f"bad param line: {exc}", off) from exc
            needed = 1
            for e in shape:
                needed *= e
            pending = (name, trainable, shape, array("d"), needed)
        elif line.startswith("v ") or line == "v":
            if pending is None:
                raise StateFormatError("value line outside a param block", off)
            try:
                pending[3].extend(float(v) for v in line.split()[1:])
            except ValueError as exc:
                raise StateFormatError(f"bad float: {exc}", off) from exc
            if len(pending[3]) > pending[4]:
                raise StateFormatError(
                    f"too many values for parameter {pending[0]!r}", off
                )
        else:
            raise StateFormatError(f"unexpected line in params: {line!r}", off)


def _finish_param(params, pending, off):
    name, trainable, shape, values, needed = pending
    if len(values) != needed:
        raise StateFormatError(
            f"parameter {name!r} expects {needed} values, got {len(values)}", off
        )
    params.add(name, Tensor(shape, values), trainable)


def load_state(path):
    """Parse a state file; returns the name -> object dict, atomically."""
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    reader = _Reader(text)
    line, off = reader.next()
    if line is None:
        raise StateFormatError("empty state file", off)
    if line != HEADER:
        if line.startswith("invnets-state"):
            raise StateVersionError(
                f"unsupported state version {line.split()[-1]!r}; this build reads v1"
            )
        raise StateFormatError(f"missing header, found {line!r}", off)
    objects = {}
    while True:
        line, off = reader.next()
        if line is None:
            raise StateFormatError("missing final 'done' (truncated file?)", off)
        if line == "done":
            return objects
        if not line.startswith("object "):
            raise StateFormatError(f"expected object header, found {line!r}", off)
        parts = line.split()
        if len(parts) != 3:
            raise StateFormatError("object header needs name and kind", off)
        name, kind = parts[1], parts[2]
        if name in objects:
            raise StateFormatError(f"duplicate object name {name!r}", off)
        if kind == "netspec":
            objects[name] = _parse_netspec(reader)
        elif kind == "unfolded":
            objects[name] = _parse_unfolded(reader)
        elif kind == "params":
            objects[name] = _parse_params(reader)
        else:
            raise StateFormatError(f"unknown object kind {kind!r}", off)
