"""State files: exact round trips and failure modes."""

import pytest

from invnets.errors import StateFormatError, StateVersionError
from invnets.nets import Affine, DiagMask, NetSpec, Pointwise, ResidualAdd, Transform
from invnets.rng import CounterRng
from invnets.serialize import load_state, save_state
from invnets.tensor import ParamSet, Tensor
from invnets.unfolded import UnfoldedNet


def sample_state():
    rng = CounterRng(77)
    net = NetSpec(
        (8,),
        [
            Affine("w", "b"),
            Pointwise("tanh"),
            Transform("fft", "forward"),
            DiagMask("mask", paired=True),
            Transform("fft", "adjoint"),
            ResidualAdd(-1),
        ],
        {"spectral": 3},
    )
    params = ParamSet()
    params.add("w", Tensor.randn((8, 8), rng))
    params.add("b", Tensor.randn((8,), rng))
    params.add("mask", Tensor.randn((5,), rng), trainable=True)
    params.add("frozen", Tensor.randn((3,), rng), trainable=False)
    return {"net": net, "params": params, "unf": UnfoldedNet(6, False, 12, 16)}


class TestRoundTrip:
    def test_three_layer_net_bit_exact(self, tmp_path):
        state = sample_state()
        path = tmp_path / "model.state"
        save_state(path, state)
        loaded = load_state(path)
        net = loaded["net"]
        assert [type(l).__name__ for l in net.layers] == [
            type(l).__name__ for l in state["net"].layers
        ]
        assert net.in_shape == (8,)
        assert net.aux_outputs == {"spectral": 3}
        assert net.layers[3] == DiagMask("mask", paired=True)
        params = loaded["params"]
        for name in state["params"].names():
            assert params.get(name).data == state["params"].get(name).data
            assert params.trainable(name) == state["params"].trainable(name)
        unf = loaded["unf"]
        assert (unf.n_layers, unf.tied, unf.in_dim, unf.out_dim) == (6, False, 12, 16)

    def test_empty_paramset_round_trips(self, tmp_path):
        path = tmp_path / "empty.state"
        save_state(path, {"params": ParamSet()})
        loaded = load_state(path)
        assert len(loaded["params"]) == 0

    def test_awkward_floats_round_trip(self, tmp_path):
        vals = [0.1, -0.0, 1e-308, 1.7976931348623157e308, 2.0**-52, 1 / 3]
        params = ParamSet()
        params.add("v", Tensor((6,), vals))
        path = tmp_path / "f.state"
        save_state(path, {"p": params})
        assert load_state(path)["p"].get("v").data == params.get("v").data


class TestFailureModes:
    def test_truncated_file_is_rejected_atomically(self, tmp_path):
        path = tmp_path / "model.state"
        save_state(path, sample_state())
        blob = path.read_bytes()
        for cut in (len(blob) // 3, len(blob) // 2, len(blob) - 6):
            trimmed = tmp_path / f"cut{cut}.state"
            trimmed.write_bytes(blob[:cut])
            with pytest.raises(StateFormatError) as err:
                load_state(trimmed)
            assert err.value.offset >= 0

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "v9.state"
        path.write_text("invnets-state v9\ndone\n")
        with pytest.raises(StateVersionError):
            load_state(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "junk.state"
        path.write_text("hello\n")
        with pytest.raises(StateFormatError):
            load_state(path)

    def test_corrupt_float_reports_offset(self, tmp_path):
        path = tmp_path / "model.state"
        params = ParamSet()
        params.add("v", Tensor((2,), [1.5, 2.5]))
        save_state(path, {"p": params})
        text = path.read_text().replace("2.5", "2.5x")
        path.write_text(text)
        with pytest.raises(StateFormatError) as err:
            load_state(path)
        line_off = text.index("1.5")
        assert err.value.offset == text.rindex("v ", 0, line_off + 40)

    def test_wrong_value_count_rejected(self, tmp_path):
        path = tmp_path / "model.state"
        params = ParamSet()
        params.add("v", Tensor((3,), [1.0, 2.0, 3.0]))
        save_state(path, {"p": params})
        text = path.read_text().replace("v 1.0 2.0 3.0", "v 1.0 2.0")
        path.write_text(text)
        with pytest.raises(StateFormatError):
            load_state(path)
