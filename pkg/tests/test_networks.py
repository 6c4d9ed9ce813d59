import numpy as np
import pytest

from surfinspect.networks import (
    BuildError,
    CheckpointError,
    LayerSpec,
    ModeError,
    NetworkSpec,
    backward,
    build_fastinf,
    build_multivis,
    build_surfnet,
    checkpoint_bytes,
    forward,
    load_checkpoint,
    predict_shapes,
    save_checkpoint,
)
from surfinspect.networks.builders import MULTIVIS_LAYOUTS
from surfinspect.networks.spec import conv_block

from oracles import network_fd_check

BUILDERS = {"surfnet": build_surfnet, "fastinf": build_fastinf, "multivis": build_multivis}
TINY = [2] * 9


def _convs(spec):
    return [(l.kernel, l.stride) for l in spec.conv_layers()]


class TestArchitecture:
    def test_surfnet_layout(self):
        spec, _ = build_surfnet()
        assert _convs(spec) == [(5, 2), (1, 1), (5, 2), (1, 1), (5, 2), (1, 1), (1, 1), (1, 1), (1, 1)]
        assert sum(l.kind == "fc" for l in spec.layers()) == 1
        lane = spec.lanes[0]
        # every 1x1 block sits inside its own residual span
        for i, layer in enumerate(lane):
            if layer.kind == "conv" and layer.kernel == 1:
                assert lane[i - 1].kind == "residual_begin"
                assert lane[i + 3].kind == "residual_end"
        assert sum(l.kind == "residual_begin" for l in lane) == 6
        # conv -> batchnorm -> prelu for every block
        for i, layer in enumerate(lane):
            if layer.kind == "conv":
                assert (lane[i + 1].kind, lane[i + 2].kind) == ("batchnorm", "prelu")

    def test_fastinf_layout(self):
        spec, _ = build_fastinf()
        assert _convs(spec) == [(3, 2), (1, 1), (3, 2)]
        assert spec.conv_layers()[-1].out_channels == 1024
        assert [l.kind for l in spec.head] == ["fc"]

    def test_multivis_layout(self):
        spec, _ = build_multivis()
        assert len(spec.lanes) == 3
        assert [l.kind for l in spec.head] == ["concat", "conv", "batchnorm", "prelu", "fc"]
        assert spec.head[1].kernel == 1
        lane_c = spec.lanes[2]
        assert [l.kind for l in lane_c if l.kind in ("conv", "maxpool")] == \
            ["conv", "conv", "maxpool", "conv"]

    @pytest.mark.parametrize("side,final", [(128, 16), (64, 8)])
    def test_surfnet_downsamples_by_eight(self, side, final):
        spec, _ = build_surfnet(input_side=side)
        last = [s for _, k, s in predict_shapes(spec) if k != "fc"][-1]
        assert last[2:] == (final, final)

    def test_fastinf_feature_map(self):
        spec, _ = build_fastinf(input_side=128)
        last = [s for _, k, s in predict_shapes(spec) if k != "fc"][-1]
        assert last[2:] == (32, 32)

    def test_surfnet_default_forward(self):
        spec, state = build_surfnet()
        x = np.random.default_rng(0).random((10, 1, 128, 128), dtype=np.float32)
        assert forward(spec, state, x).shape == (10, 2)

    def test_fastinf_six_classes(self):
        spec, state = build_fastinf(input_side=64, class_count=6)
        x = np.random.default_rng(0).random((10, 1, 64, 64), dtype=np.float32)
        assert forward(spec, state, x).shape == (10, 6)

    def test_multivis_concat_width(self):
        spec, _ = build_multivis()
        concat = [s for n, k, s in predict_shapes(spec) if k == "concat"][0]
        assert concat == (1, 192, 16, 16)

    def test_shortcut_across_channel_change_rejected(self):
        with pytest.raises(BuildError, match="shortcut"):
            build_surfnet([32, 16, 64, 64, 128, 128, 128, 128, 128])

    def test_mismatched_lanes_rejected(self):
        layouts = list(MULTIVIS_LAYOUTS)
        layouts[2] = ((3, 2), (1, 1), (3, 2))  # no pooling: ends at 1/4 resolution
        with pytest.raises(BuildError, match="different spatial sizes"):
            build_multivis(lane_plans=((32, 32, 64, 64, 64), (32, 32, 64, 64, 64), (32, 32, 64)),
                           lane_layouts=layouts)

    @pytest.mark.parametrize("name", sorted(BUILDERS))
    @pytest.mark.parametrize("side", [32, 64, 128])
    def test_shape_walk(self, name, side):
        spec, state = BUILDERS[name](input_side=side)
        trace = []
        x = np.random.default_rng(side).random((2, 1, side, side), dtype=np.float32)
        forward(spec, state, x, mode="eval", trace=trace)
        assert trace == predict_shapes(spec, batch=2)

    @pytest.mark.parametrize("name,expected", [("surfnet", 9 * 5 + 2), ("fastinf", 3 * 5 + 2),
                                               ("multivis", 14 * 5 + 2)])
    def test_parameter_census(self, name, expected):
        spec, state = BUILDERS[name]()
        assert len(state.params) == expected
        independent = sum(5 if l.kind == "conv" else 2 if l.kind == "fc" else 0
                          for l in spec.layers())
        assert independent == expected

    def test_prelu_slopes_are_parameters(self):
        _, state = build_surfnet()
        slopes = [k for k in state.params if k.endswith(".slope")]
        assert len(slopes) == 9
        assert all(np.all(state.params[k] == 0.25) for k in slopes)


class TestResidualIdentity:
    def test_zeroed_shortcut_blocks_are_identity(self):
        spec, state = build_surfnet([4, 4, 6, 6, 8, 8, 8, 8, 8], input_side=32, seed=3)
        state.eval()
        for layer in spec.conv_layers():
            if layer.kernel == 1:
                state.params[f"{layer.name}.weight"][:] = 0
                state.params[f"{layer.name}.bias"][:] = 0
                bn = layer.name.replace(".conv", ".bn")
                state.params[f"{bn}.gamma"][:] = 1
                state.params[f"{bn}.beta"][:] = 0
        # reference network without the shortcut blocks, sharing the remaining parameters
        lane = []
        for i, (cin, cout) in zip((0, 2, 4), ((1, 4), (4, 6), (6, 8))):
            lane.extend(conv_block(f"l0.b{i}", cin, cout, 5, 2))
        ref = NetworkSpec("reduced", (tuple(lane),), (LayerSpec("fc", "fc"),), 2, 32)
        ref_state = state.copy()
        keep = set(ref.parameter_shapes()) | set(ref.buffer_shapes())
        ref_state.params = {k: v for k, v in state.params.items() if k in keep}
        ref_state.buffers = {k: v for k, v in state.buffers.items() if k in keep}
        x = np.random.default_rng(0).random((3, 1, 32, 32), dtype=np.float32)
        for mode in ("eval", "train"):
            a = forward(spec, state.copy(), x, mode=mode)
            b = forward(ref, ref_state.copy(), x, mode=mode)
            assert np.array_equal(a, b), mode


class TestBackward:
    @pytest.mark.parametrize("seed", range(20))
    def test_tiny_surfnet_finite_difference(self, seed):
        spec, state = build_surfnet(TINY, input_side=16, seed=seed)
        state = state.astype(np.float64)
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((3, 1, 16, 16))
        t = rng.integers(0, 2, 3)
        err, compared, _ = network_fd_check(spec, state, x, t)
        assert compared >= 100
        assert err <= 1e-3

    @pytest.mark.parametrize("builder,kw", [
        (build_fastinf, dict(width_plan=(2, 2, 3))),
        (build_multivis, dict(lane_plans=((2, 2, 2, 2, 2), (2, 2, 2, 2, 2), (2, 2, 2)),
                              merge_channels=2)),
    ])
    def test_other_networks_finite_difference(self, builder, kw):
        spec, state = builder(input_side=16, seed=1, **kw)
        state = state.astype(np.float64)
        rng = np.random.default_rng(1)
        x = rng.standard_normal((3, 1, 16, 16))
        t = rng.integers(0, 2, 3)
        err, compared, _ = network_fd_check(spec, state, x, t)
        assert compared >= 30
        assert err <= 1e-3

    def test_zero_grad_logits(self):
        spec, state = build_surfnet(TINY, input_side=16)
        x = np.random.default_rng(0).random((2, 1, 16, 16), dtype=np.float32)
        forward(spec, state, x, mode="train")
        grads = backward(spec, state, np.zeros((2, 2), np.float32))
        assert list(grads) == list(state.params)
        assert all(not g.any() for g in grads.values())

    def test_eval_backward_rejected(self):
        spec, state = build_surfnet(TINY, input_side=16)
        state.eval()
        forward(spec, state, np.zeros((2, 1, 16, 16), np.float32))
        with pytest.raises(ModeError):
            backward(spec, state, np.zeros((2, 2), np.float32))

    def test_eval_forward_is_pure(self):
        spec, state = build_multivis(input_side=32)
        state.eval()
        before = {k: v.copy() for k, v in state.buffers.items()}
        x = np.random.default_rng(0).random((2, 1, 32, 32), dtype=np.float32)
        a = forward(spec, state, x)
        b = forward(spec, state, x)
        assert np.array_equal(a, b)
        assert all(np.array_equal(before[k], state.buffers[k]) for k in before)

    def test_wrong_input_shape(self):
        spec, state = build_surfnet(TINY, input_side=16)
        with pytest.raises(ValueError, match="expects input"):
            forward(spec, state, np.zeros((1, 1, 32, 32), np.float32))


class TestSmoke:
    def test_multivis_finite_logits_over_seeds(self):
        x = np.random.default_rng(0).random((1, 1, 128, 128), dtype=np.float32)
        for seed in range(100):
            spec, state = build_multivis(seed=seed)
            assert np.all(np.isfinite(forward(spec, state, x, mode="eval")))


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        spec, state = build_multivis(input_side=32, seed=4)
        forward(spec, state, np.random.default_rng(0).random((4, 1, 32, 32), dtype=np.float32),
                mode="train")  # move running stats off their initial values
        p1 = save_checkpoint(state, tmp_path / "a.ckpt")
        loaded = load_checkpoint(p1, spec)
        assert list(loaded.params) == list(state.params)
        assert list(loaded.buffers) == list(state.buffers)
        for k in state.params:
            assert loaded.params[k].tobytes() == state.params[k].tobytes()
        for k in state.buffers:
            assert loaded.buffers[k].tobytes() == state.buffers[k].tobytes()
        p2 = save_checkpoint(loaded, tmp_path / "b.ckpt")
        assert p1.read_bytes() == p2.read_bytes()

    def test_logits_survive_round_trip(self, tmp_path):
        spec, state = build_surfnet([4, 4, 8, 8, 8, 8, 8, 8, 8], input_side=32)
        x = np.random.default_rng(1).random((2, 1, 32, 32), dtype=np.float32)
        before = forward(spec, state, x, mode="eval")
        loaded = load_checkpoint(save_checkpoint(state, tmp_path / "s.ckpt"), spec)
        assert np.array_equal(before, forward(spec, loaded, x, mode="eval"))

    def test_fingerprint_mismatch(self, tmp_path):
        spec, state = build_surfnet(TINY, input_side=16)
        other, _ = build_surfnet(TINY, input_side=32)
        path = save_checkpoint(state, tmp_path / "s.ckpt")
        with pytest.raises(CheckpointError) as info:
            load_checkpoint(path, other)
        assert spec.fingerprint() in str(info.value) and other.fingerprint() in str(info.value)

    def test_header(self):
        _, state = build_fastinf((2, 2, 4), input_side=16)
        raw = checkpoint_bytes(state)
        assert raw[:8] == b"SURFCKPT"
        assert int.from_bytes(raw[8:12], "little") == 1
        assert raw[12:44].hex() == state.fingerprint

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.ckpt"
        p.write_bytes(b"NOTACKPT" + bytes(40))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(p)
