"""Builders that turn inversion structure into concrete network specs.

Each builder returns ``(NetSpec, ParamSet)`` with parameters initialized
at their physics-derived values, so an untrained net already implements
the corresponding closed-form operator and training only fine-tunes it.

* ``build_analytic_net``: the Gaussian-posterior mean as a one- or
  two-stage chain, in any of the three factorizations A, B o H^T, H^T o C.
  Dense operators become affine layers; convolution operators stay
  convolutional with Fourier-derived kernels.
* ``build_residual_net``: estimate the corruption and subtract it from
  the input (skip connection), exposing the corruption estimate as a
  secondary output.
* ``build_transform_net``: transform -> trainable diagonal gain mask ->
  adjoint transform.  Fourier masks carry one real gain per
  conjugate-symmetric coefficient pair, so outputs stay real.
* ``build_encoder_decoder``: stage-wise composition of encoder specs
  followed by decoder specs.
"""

from invnets import transforms
from invnets.bayes import inverse_factorizations
from invnets.errors import ParameterError, StructureError
from invnets.linop import as_plain_conv
from invnets.nets import (
    INPUT_TAP,
    Affine,
    Conv,
    DiagMask,
    NetSpec,
    Pointwise,
    ResidualAdd,
    Transform,
    rename_params,
)
from invnets.tensor import ParamSet, Tensor

ANALYTIC_FORMS = ("A", "BHt", "HtC")


def _op_layer(name, op, params):
    if op.kind == "matrix":
        params.add(name, op.payload)
        return Affine(name)
    params.add(name, as_plain_conv(op).payload)
    return Conv(name)


def build_analytic_net(h, lam, form="A"):
    """Net computing the regularized pseudo-inverse of ``h`` at weight ``lam``.

    ``form`` picks the factorization: "A" is the single combined operator,
    "BHt" applies the adjoint first, "HtC" applies it last.  All three act
    identically at initialization.
    """
    if form not in ANALYTIC_FORMS:
        raise ParameterError(f"form must be one of {ANALYTIC_FORMS}, got {form!r}")
    fac = inverse_factorizations(h, lam)
    params = ParamSet()
    ht = h.adjoint()
    if form == "A":
        layers = [_op_layer("A", fac["A"], params)]
    elif form == "BHt":
        layers = [_op_layer("Ht", ht, params), _op_layer("B", fac["B"], params)]
    else:
        layers = [_op_layer("C", fac["C"], params), _op_layer("Ht", ht, params)]
    net = NetSpec(h.out_shape, layers)
    net.validate(params)
    return net, params


def build_residual_net(core, core_params):
    """Subtractive structure: output = input - core(input).

    The core must preserve shape; its output (the corruption estimate) is
    exposed as the auxiliary output "estimated_noise".
    """
    out_shape = core.validate(core_params)
    if out_shape != core.in_shape:
        raise StructureError(
            f"residual core must preserve shape, maps {core.in_shape} -> {out_shape}"
        )
    layers = list(core.layers) + [Pointwise("neg"), ResidualAdd(INPUT_TAP)]
    aux = dict(core.aux_outputs)
    aux["estimated_noise"] = len(core.layers) - 1
    net = NetSpec(core.in_shape, layers, aux)
    params = core_params.copy()
    net.validate(params)
    return net, params


def build_transform_net(kind, levels, mask_init):
    """Transform-domain gain net: T -> diagonal mask -> T adjoint.

    ``mask_init`` has the coefficient shape (= input shape) and seeds the
    trainable gains; a unit mask makes the net an exact identity.  For the
    Fourier kind the gains are tied across conjugate-symmetric coefficient
    pairs (read off at each pair's representative position).
    """
    if kind not in ("fft", "haar"):
        raise ParameterError(f"kind must be 'fft' or 'haar', got {kind!r}")
    in_shape = mask_init.shape
    transforms.check_transform_shape(in_shape, levels)
    params = ParamSet()
    if kind == "fft":
        _, n_slots, reps = transforms.pair_slots(in_shape)
        gains = [mask_init.data[r] for r in reps]
        params.add("mask", Tensor((n_slots,), gains))
        mask_layer = DiagMask("mask", paired=True)
    else:
        params.add("mask", mask_init)
        mask_layer = DiagMask("mask")
    layers = [
        Transform(kind, "forward", levels),
        mask_layer,
        Transform(kind, "adjoint", levels),
    ]
    net = NetSpec(in_shape, layers)
    net.validate(params)
    return net, params


def build_encoder_decoder(encoders, decoders):
    """Compose encoder stages then decoder stages into one chain.

    ``encoders`` and ``decoders`` are lists of (NetSpec, ParamSet) pairs.
    Encoders apply in list order; decoders apply in reverse list order
    (the last decoder in the list sits against the innermost code).  Stage
    counts need not match.  Shape mismatches report the failing junction.
    """
    stages = [(f"enc{i}.", n, p) for i, (n, p) in enumerate(encoders)]
    stages += [
        (f"dec{i}.", n, p)
        for i, (n, p) in reversed(list(enumerate(decoders)))
    ]
    if not stages:
        raise StructureError("encoder-decoder needs at least one stage")
    params = ParamSet()
    layers = []
    in_shape = stages[0][1].in_shape
    cur_shape = in_shape
    for prefix, net, stage_params in stages:
        if net.in_shape != cur_shape:
            raise StructureError(
                f"stage {prefix.rstrip('.')}: expects input {net.in_shape}, "
                f"previous stage produces {cur_shape}"
            )
        renames = params.merge_prefixed(stage_params, prefix)
        renamed = rename_params(net, renames)
        offset = len(layers)
        for layer in renamed.layers:
            if isinstance(layer, ResidualAdd) and layer.tap != INPUT_TAP:
                layer = ResidualAdd(layer.tap + offset)
            elif isinstance(layer, ResidualAdd) and offset > 0:
                raise StructureError(
                    f"stage {prefix.rstrip('.')}: input-tap residual cannot be "
                    "embedded mid-chain"
                )
            layers.append(layer)
        cur_shape = net.validate(stage_params)
    combined = NetSpec(in_shape, layers)
    combined.validate(params)
    return combined, params
