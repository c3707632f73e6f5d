"""Network builders: analytic, residual, transform-domain, encoder-decoder."""

import numpy as np
import pytest

from conftest import from_np, to_np
from invnets.bayes import map_estimate
from invnets.builders import (
    build_analytic_net,
    build_encoder_decoder,
    build_residual_net,
    build_transform_net,
)
from invnets.errors import ParameterError, StructureError
from invnets.linop import LinearOp
from invnets.nets import (
    Affine,
    Bindings,
    DiagMask,
    NetSpec,
    Pointwise,
    ResidualAdd,
    init_mlp,
)
from invnets.rng import CounterRng
from invnets.tape import Tape
from invnets.tensor import ParamSet, Tensor
from invnets.training import stack_columns


def run_net(net, params, x):
    tape = Tape()
    out, _ = net.forward(Bindings(tape, params), tape.constant(x))
    return tape.value(out)


class TestNetSpecValidation:
    def test_double_binding_rejected(self):
        net = NetSpec((2,), [Affine("w"), Affine("w")])
        params = ParamSet()
        params.add("w", Tensor.eye(2))
        with pytest.raises(StructureError):
            net.validate(params)

    def test_unbound_parameter_rejected(self):
        net = NetSpec((2,), [Affine("w")])
        params = ParamSet()
        params.add("w", Tensor.eye(2))
        params.add("stray", Tensor.eye(2))
        with pytest.raises(StructureError):
            net.validate(params)

    def test_shape_chain_checked(self):
        net = NetSpec((3,), [Affine("w")])
        params = ParamSet()
        params.add("w", Tensor.eye(2))  # expects input (2,)
        with pytest.raises(StructureError):
            net.validate(params)

    def test_residual_tap_must_be_earlier_and_same_shape(self):
        with pytest.raises(StructureError):
            NetSpec((2,), [ResidualAdd(3)], {}).validate(ParamSet())
        net = NetSpec((2,), [Affine("w"), ResidualAdd(-1)])
        params = ParamSet()
        params.add("w", Tensor.zeros((3, 2)))  # output (3,) vs input (2,)
        with pytest.raises(StructureError):
            net.validate(params)


class TestAnalyticNet:
    def test_matches_map_estimate_many(self, rng_np):
        for trial in range(50):
            m = int(rng_np.integers(3, 8))
            n = int(rng_np.integers(2, 7))
            lam = float(rng_np.uniform(0.05, 2.0))
            h = LinearOp.from_matrix(from_np(rng_np.standard_normal((m, n))))
            g = from_np(rng_np.standard_normal(m))
            want = to_np(map_estimate(h, g, lam))
            form = ("A", "BHt", "HtC")[trial % 3]
            net, params = build_analytic_net(h, lam, form)
            got = to_np(run_net(net, params, g))
            scale = max(np.linalg.norm(want), 1e-12)
            assert np.linalg.norm(got - want) / scale < 1e-9

    def test_layer_counts(self, rng_np):
        h = LinearOp.from_matrix(from_np(rng_np.standard_normal((4, 3))))
        net_a, _ = build_analytic_net(h, 0.5, "A")
        net_b, _ = build_analytic_net(h, 0.5, "BHt")
        net_c, _ = build_analytic_net(h, 0.5, "HtC")
        assert len(net_a.layers) == 1
        assert len(net_b.layers) == 2 and len(net_c.layers) == 2

    def test_identity_halves(self):
        net, params = build_analytic_net(LinearOp.from_matrix(Tensor.eye(3)), 1.0, "A")
        g = Tensor.from_nested([2.0, -4.0, 6.0])
        assert np.max(np.abs(to_np(run_net(net, params, g)) - [1.0, -2.0, 3.0])) < 1e-12

    def test_conv_operator_stays_convolutional(self, rng_np):
        from invnets.nets import Conv

        ker = from_np(rng_np.standard_normal((3, 3)))
        h = LinearOp.from_kernel(ker, (8, 8))
        net, params = build_analytic_net(h, 0.2, "BHt")
        assert all(isinstance(l, Conv) for l in net.layers)
        g = from_np(rng_np.standard_normal((8, 8)))
        want = to_np(map_estimate(h, g, 0.2))
        got = to_np(run_net(net, params, g))
        assert np.max(np.abs(got - want)) < 1e-9

    def test_bad_form(self, rng_np):
        h = LinearOp.from_matrix(Tensor.eye(2))
        with pytest.raises(ParameterError):
            build_analytic_net(h, 1.0, "HtB")


class TestResidualNet:
    def test_zero_core_passes_input(self):
        core = NetSpec((3,), [Affine("w")])
        params = ParamSet()
        params.add("w", Tensor.zeros((3, 3)))
        net, nparams = build_residual_net(core, params)
        g = Tensor.from_nested([1.0, -2.0, 3.0])
        assert to_np(run_net(net, nparams, g)).tolist() == [1.0, -2.0, 3.0]

    def test_identity_core_gives_zero(self):
        core = NetSpec((3,), [Affine("w")])
        params = ParamSet()
        params.add("w", Tensor.eye(3))
        net, nparams = build_residual_net(core, params)
        g = Tensor.from_nested([1.0, -2.0, 3.0])
        assert np.max(np.abs(to_np(run_net(net, nparams, g)))) == 0.0

    def test_equals_materialized_difference_operator(self, rng_np):
        a = rng_np.standard_normal((5, 5))
        core = NetSpec((5,), [Affine("w")])
        params = ParamSet()
        params.add("w", from_np(a))
        net, nparams = build_residual_net(core, params)
        eye_minus_a = np.eye(5) - a
        for _ in range(20):
            g = rng_np.standard_normal(5)
            got = to_np(run_net(net, nparams, from_np(g)))
            assert np.max(np.abs(got - eye_minus_a @ g)) < 1e-12

    def test_exposes_noise_estimate(self, rng_np):
        a = rng_np.standard_normal((4, 4))
        core = NetSpec((4,), [Affine("w")])
        params = ParamSet()
        params.add("w", from_np(a))
        net, nparams = build_residual_net(core, params)
        tape = Tape()
        out, layer_outs = net.forward(Bindings(tape, nparams), tape.constant(from_np(np.ones(4))))
        noise = tape.value(layer_outs[net.aux_outputs["estimated_noise"]])
        assert np.max(np.abs(to_np(noise) - a @ np.ones(4))) < 1e-12

    def test_requires_shape_preserving_core(self):
        core = NetSpec((3,), [Affine("w")])
        params = ParamSet()
        params.add("w", Tensor.zeros((2, 3)))
        with pytest.raises(StructureError):
            build_residual_net(core, params)


class TestTransformNet:
    @pytest.mark.parametrize("kind,levels,shape", [
        ("fft", 1, (16,)),
        ("fft", 1, (8, 8)),
        ("haar", 1, (16,)),
        ("haar", 2, (16,)),
        ("haar", 3, (8, 8)),
    ])
    def test_unit_mask_is_identity(self, kind, levels, shape, rng_np):
        net, params = build_transform_net(kind, levels, Tensor.full(shape, 1.0))
        x = from_np(rng_np.standard_normal(shape))
        assert np.max(np.abs(to_np(run_net(net, params, x)) - to_np(x))) < 1e-12

    def test_zero_mask_gives_zero(self, rng_np):
        net, params = build_transform_net("fft", 1, Tensor.zeros((16,)))
        x = from_np(rng_np.standard_normal(16))
        assert np.max(np.abs(to_np(run_net(net, params, x)))) < 1e-15

    def test_haar_constant_image_detail_free(self):
        # a constant signal lives entirely in the approximation band, so
        # masking details changes nothing
        from invnets.transforms import haar_forward

        const = Tensor.full((4, 4), 2.5)
        coeffs = list(haar_forward(const.data, (4, 4), 1, 1))
        # level-1 layout: the approximation (LL) block is the top-left 2x2
        ll_idx = {0, 1, 4, 5}
        assert all(abs(coeffs[i] - 5.0) < 1e-12 for i in ll_idx)
        assert all(coeffs[i] == 0.0 for i in range(16) if i not in ll_idx)

        mask = np.ones((4, 4))
        mask[2:, :] = 0.0
        mask[:, 2:] = 0.0
        net, params = build_transform_net("haar", 1, from_np(mask))
        out = run_net(net, params, const)
        assert np.max(np.abs(to_np(out) - 2.5)) < 1e-12

    def test_fft_mask_ties_conjugate_pairs(self, rng_np):
        net, params = build_transform_net("fft", 1, Tensor.full((8,), 1.0))
        # 8-point spectrum has 5 tied gain slots: DC, 3 pairs, Nyquist
        assert params.get("mask").shape == (5,)
        # output stays real for any gains: adjoint(gather-masked forward)
        params.set_value("mask", from_np(rng_np.standard_normal(5)))
        x = from_np(rng_np.standard_normal(8))
        y = to_np(run_net(net, params, x))
        assert y.shape == (8,)
        assert np.all(np.isfinite(y))

    def test_batched_columns_match_per_sample(self, rng_np):
        net, params = build_transform_net("fft", 1, Tensor.full((8,), 1.0))
        params.set_value("mask", from_np(rng_np.standard_normal(5)))
        xs = [from_np(rng_np.standard_normal(8)) for _ in range(4)]
        batched = to_np(run_net(net, params, stack_columns(xs)))
        for j, x in enumerate(xs):
            single = to_np(run_net(net, params, x))
            assert np.max(np.abs(batched[:, j] - single)) < 1e-14


class TestEncoderDecoder:
    def _affine_stage(self, mat, name="w"):
        net = NetSpec((mat.shape[1],), [Affine(name)])
        params = ParamSet()
        params.add(name, mat)
        return net, params

    def test_single_pair_matches_sequential(self, rng_np):
        e = from_np(rng_np.standard_normal((4, 4)))
        d = from_np(rng_np.standard_normal((4, 4)))
        combined, params = build_encoder_decoder(
            [self._affine_stage(e)], [self._affine_stage(d)]
        )
        g = rng_np.standard_normal(4)
        got = to_np(run_net(combined, params, from_np(g)))
        assert np.max(np.abs(got - to_np(d) @ (to_np(e) @ g))) < 1e-12

    def test_identity_stages_identity(self):
        stages = [self._affine_stage(Tensor.eye(3)) for _ in range(2)]
        dstages = [self._affine_stage(Tensor.eye(3)) for _ in range(2)]
        combined, params = build_encoder_decoder(stages, dstages)
        g = Tensor.from_nested([1.0, 2.0, 3.0])
        assert to_np(run_net(combined, params, g)).tolist() == [1.0, 2.0, 3.0]

    def test_two_stage_matches_manual_composition(self, rng_np):
        e0 = from_np(rng_np.standard_normal((6, 4)))
        e1 = from_np(rng_np.standard_normal((3, 6)))
        d1 = from_np(rng_np.standard_normal((6, 3)))
        d0 = from_np(rng_np.standard_normal((4, 6)))
        combined, params = build_encoder_decoder(
            [self._affine_stage(e0), self._affine_stage(e1)],
            # decoders in list order D1, D2; applied innermost-last first
            [self._affine_stage(d0), self._affine_stage(d1)],
        )
        for _ in range(10):
            g = rng_np.standard_normal(4)
            manual = to_np(d0) @ (to_np(d1) @ (to_np(e1) @ (to_np(e0) @ g)))
            got = to_np(run_net(combined, params, from_np(g)))
            assert np.max(np.abs(got - manual)) < 1e-12

    def test_junction_mismatch_names_stage(self, rng_np):
        e0 = self._affine_stage(from_np(rng_np.standard_normal((5, 4))))
        d0 = self._affine_stage(from_np(rng_np.standard_normal((4, 6))))
        with pytest.raises(StructureError) as err:
            build_encoder_decoder([e0], [d0])
        assert "dec0" in str(err.value)


class TestTangentForward:
    def test_tangent_matches_input_grad(self):
        from invnets.nets import basis_tangent, forward_with_tangent, input_grad

        rng = CounterRng(17)
        net, params = init_mlp((2, 6, 1), rng)
        x = Tensor.from_nested([0.3, -0.8])
        tape = Tape()
        b = Bindings(tape, params)
        out, tan, _ = forward_with_tangent(
            net, b, tape.constant(x), tape.constant(basis_tangent((2,), (1,)))
        )
        via_reverse = input_grad(net, params, x, 1).item()
        assert abs(tape.value(tan).data[0] - via_reverse) < 1e-12
