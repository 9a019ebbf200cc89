"""Layer forward passes against loop oracles, count formulas, channel
masks, and the classical-degeneration identity."""

import numpy as np
import pytest

import oracles
from ckanbench import tensor_ops as T
from ckanbench.errors import ConfigError, DimensionError, StateError
from ckanbench.layers import (Activation, Conv1D, Conv2D, Flatten,
                              GlobalAvgPool1D, KanConv1D, KanConv2D,
                              KanLinear, Linear, MaxPool1D, MaxPool2D,
                              Reshape, kan_edge_eval)
from ckanbench.splines import bspline_spec, rbf_spec


class TestConv2DForward:
    def test_matches_naive_loops(self, rng):
        for stride, pad in [(1, 0), (1, 2), (2, 1), (3, 0)]:
            lyr = Conv2D(2, 3, 3, stride=stride, pad=pad, rng=rng,
                         dtype=np.float64)
            lyr.bias[:] = rng.standard_normal(3)
            x = rng.standard_normal((2, 2, 6, 7))
            want = oracles.conv2d_naive(x, lyr.weight, lyr.bias, stride, pad)
            got = lyr.forward(x)
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_channel_mismatch(self, rng):
        lyr = Conv2D(2, 3, 3, rng=rng)
        with pytest.raises(DimensionError):
            lyr.forward(np.zeros((1, 1, 6, 6), dtype=np.float32))

    def test_param_count(self, rng):
        lyr = Conv2D(6, 16, 5, rng=rng)
        assert lyr.param_count() == 16 * 6 * 25 + 16

    def test_mac_example(self, rng):
        # 1->1 3x3 over 6x6, stride 1, pad 0: 16 positions x 9 taps
        lyr = Conv2D(1, 1, 3, rng=rng)
        assert lyr.mac_count((1, 6, 6)) == 144


class TestKanConv2DForward:
    @pytest.mark.parametrize("spec", [rbf_spec(4), bspline_spec(5, 3),
                                      bspline_spec(3, 0), rbf_spec(1)])
    def test_matches_naive_loops_64bit(self, spec, rng):
        lyr = KanConv2D(2, 3, 3, stride=2, pad=1, spec=spec, rng=rng,
                        dtype=np.float64)
        lyr.bias[:] = rng.standard_normal(3)
        lyr.shift[:] = 0.1 * rng.standard_normal(lyr.shift.shape)
        x = 1.5 * rng.standard_normal((2, 2, 5, 6))
        got = lyr.forward(x)
        want = oracles.kanconv_naive_from_layer(x, lyr)
        assert np.abs(got - want).max() < 1e-10

    def test_matches_naive_loops_32bit(self, rng):
        lyr = KanConv2D(1, 2, 3, stride=1, pad=1, spec=rbf_spec(4), rng=rng,
                        dtype=np.float32)
        x = rng.standard_normal((2, 1, 6, 6)).astype(np.float32)
        got = lyr.forward(x)
        want = oracles.kanconv_naive_from_layer(x.astype(np.float64), lyr)
        assert np.abs(got - want).max() < 1e-5

    def test_padding_contributes_phi_of_zero(self, rng):
        # pad=1 must equal running the layer on an explicitly zero-padded
        # input with pad=0: padded taps evaluate phi(0), not 0.
        spec = rbf_spec(3)
        lyr = KanConv2D(1, 2, 3, stride=1, pad=1, spec=spec, rng=rng,
                        dtype=np.float64)
        twin = KanConv2D(1, 2, 3, stride=1, pad=0, spec=spec, rng=rng,
                         dtype=np.float64)
        for (_, dst), (_, src) in zip(twin.params(), lyr.params()):
            dst[...] = src
        x = rng.standard_normal((1, 1, 4, 4))
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        np.testing.assert_allclose(lyr.forward(x), twin.forward(xp),
                                   rtol=1e-12, atol=1e-12)

    def test_chunking_invariance(self, rng, monkeypatch):
        from ckanbench import layers as layers_mod
        spec = rbf_spec(4)
        lyr = KanConv2D(2, 2, 3, pad=1, spec=spec, rng=rng, dtype=np.float64)
        x = rng.standard_normal((7, 2, 6, 6))
        full = lyr.forward(x)
        monkeypatch.setattr(layers_mod, "KAN_CHUNK_ELEMS", 500)
        chunked = lyr.forward(x)
        # chunk boundaries change gemm blocking, so allow fp rounding only
        np.testing.assert_allclose(chunked, full, rtol=0, atol=1e-13)

    def test_param_count_example(self, rng):
        # 2->4 3x3 edges with an RBF grid of 4: (4+3) scalars per edge
        lyr = KanConv2D(2, 4, 3, spec=rbf_spec(4), rng=rng)
        assert lyr.param_count() == 4 * 2 * 9 * (4 + 3) + 4

    def test_mac_multiplier(self, rng):
        classical = Conv2D(1, 1, 3, rng=rng)
        kan = KanConv2D(1, 1, 3, spec=bspline_spec(5, 3), rng=rng)
        assert kan.mac_count((1, 6, 6)) == classical.mac_count((1, 6, 6)) * 10

    def test_requires_spec(self, rng):
        with pytest.raises(ConfigError):
            KanConv2D(1, 1, 3, rng=rng)

    def test_backward_before_forward(self, rng):
        lyr = KanConv2D(1, 1, 3, spec=rbf_spec(2), rng=rng)
        with pytest.raises(StateError):
            lyr.backward(np.zeros((1, 1, 4, 4), dtype=np.float32))

    def test_inference_forward_leaves_no_cache(self, rng):
        lyr = KanConv2D(1, 1, 3, spec=rbf_spec(2), rng=rng)
        lyr.forward(np.zeros((1, 1, 5, 5), dtype=np.float32), training=False)
        with pytest.raises(StateError):
            lyr.backward(np.zeros((1, 1, 3, 3), dtype=np.float32))


class TestDegenerateEquivalence:
    def test_reduces_to_classical_conv(self, rng):
        # identity base activation, spline gain 0, shift 0: the edge
        # function collapses to w_b * x.
        kan = KanConv2D(2, 3, 3, stride=1, pad=1, spec=bspline_spec(5, 3),
                        base_act="identity", rng=rng, dtype=np.float64)
        kan.w_spline[:] = 0.0
        kan.shift[:] = 0.0
        classical = Conv2D(2, 3, 3, stride=1, pad=1, rng=rng, dtype=np.float64)
        classical.weight[...] = kan.w_base
        classical.bias[...] = kan.bias
        x = rng.standard_normal((2, 2, 7, 7))
        np.testing.assert_allclose(kan.forward(x), classical.forward(x),
                                   atol=1e-6)


class TestKanEdge:
    def test_edge_accessor_and_eval(self, rng):
        spec = rbf_spec(3)
        lyr = KanConv2D(1, 2, 3, spec=spec, rng=rng, dtype=np.float64)
        edge = lyr.edge(1, 0, 2, 1)
        for x in (-1.3, 0.0, 0.4, 2.5):
            want = oracles.edge_phi_scalar(
                x, edge.coeffs, edge.w_base, edge.w_spline, edge.shift,
                "rbf", 3, 0, spec.domain)
            got = float(kan_edge_eval(x, edge, spec))
            assert abs(got - want) < 1e-12


class TestChannelMask:
    def test_masked_channels_output_zero(self, rng):
        lyr = KanConv2D(1, 4, 3, pad=1, spec=rbf_spec(3), rng=rng,
                        dtype=np.float64)
        lyr.bias[:] = 1.0
        lyr.channel_mask[1] = False
        out = lyr.forward(rng.standard_normal((2, 1, 5, 5)))
        assert np.abs(out[:, 1]).max() == 0.0
        assert np.abs(out[:, 0]).max() > 0.0

    def test_masked_channels_get_zero_grads(self, rng):
        lyr = KanConv2D(1, 3, 3, spec=rbf_spec(3), rng=rng, dtype=np.float64)
        lyr.channel_mask[2] = False
        x = rng.standard_normal((2, 1, 5, 5))
        out = lyr.forward(x)
        lyr.zero_grads()
        lyr.backward(np.ones_like(out))
        for _, g in lyr.grads():
            assert np.abs(g[2]).max() == 0.0
        assert np.abs(lyr.g_coeffs[0]).max() > 0.0

    def test_counts_exclude_masked_channels(self, rng):
        spec = rbf_spec(4)
        lyr = KanConv2D(2, 4, 3, spec=spec, rng=rng)
        full_params = lyr.param_count()
        full_macs = lyr.mac_count((2, 6, 6))
        lyr.channel_mask[[0, 3]] = False
        assert lyr.param_count() == full_params // 2
        assert lyr.mac_count((2, 6, 6)) == full_macs // 2


class TestLinearAndKanLinear:
    def test_linear_forward(self, rng):
        lyr = Linear(4, 3, rng=rng, dtype=np.float64)
        lyr.bias[:] = rng.standard_normal(3)
        x = rng.standard_normal((5, 4))
        np.testing.assert_allclose(lyr.forward(x), x @ lyr.weight.T + lyr.bias)

    def test_kanlinear_matches_kanconv_1x1(self, rng):
        # a KAN linear layer is exactly a 1x1 spline-kernel convolution
        spec = rbf_spec(4)
        lin = KanLinear(5, 3, spec=spec, rng=np.random.default_rng(3),
                        dtype=np.float64)
        conv = KanConv2D(5, 3, 1, spec=spec, rng=np.random.default_rng(3),
                         dtype=np.float64)
        for (_, dst), (_, src) in zip(conv.params(), lin.params()):
            dst[...] = src.reshape(dst.shape)
        x = rng.standard_normal((4, 5))
        got = lin.forward(x)
        want = conv.forward(x[:, :, None, None])[:, :, 0, 0]
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_param_formulas(self, rng):
        spec = bspline_spec(6, 2)     # B = 8
        kan = KanLinear(7, 5, spec=spec, rng=rng)
        lin = Linear(7, 5, rng=rng)
        assert kan.param_count() == 7 * 5 * (8 + 3) + 5
        assert lin.param_count() == 7 * 5 + 5
        # weight-term identity: KAN weight scalars = classical x (B+3)
        assert (kan.param_count() - 5) == (lin.param_count() - 5) * 11

    def test_mac_formulas(self, rng):
        spec = rbf_spec(4)
        assert Linear(7, 5, rng=rng).mac_count((7,)) == 35
        assert KanLinear(7, 5, spec=spec, rng=rng).mac_count((7,)) == 35 * 6


class TestMaxPool:
    def test_matches_naive(self, rng):
        x = rng.standard_normal((2, 3, 7, 8))
        for window, stride in [(2, 2), (3, 2), (3, 3), (2, 1)]:
            lyr = MaxPool2D(window, stride=stride)
            np.testing.assert_array_equal(
                lyr.forward(x), oracles.maxpool2d_naive(x, window, window, stride))

    def test_gradient_routes_to_first_max(self):
        x = np.array([[[[2.0, 2.0], [1.0, 2.0]]]])
        lyr = MaxPool2D(2)
        out = lyr.forward(x)
        assert out[0, 0, 0, 0] == 2.0
        dx = lyr.backward(np.ones_like(out))
        # tie between three entries valued 2.0: row-major first wins
        np.testing.assert_array_equal(dx[0, 0], [[1.0, 0.0], [0.0, 0.0]])

    def test_overlapping_windows_accumulate(self, rng):
        x = rng.standard_normal((1, 1, 4, 4))
        lyr = MaxPool2D(3, stride=1)
        out = lyr.forward(x)
        dx = lyr.backward(np.ones_like(out))
        assert dx.sum() == out.size

    def test_zero_macs(self):
        assert MaxPool2D(2).mac_count((3, 8, 8)) == 0

    def test_window_too_large(self):
        with pytest.raises(DimensionError):
            MaxPool2D(5).forward(np.zeros((1, 1, 3, 3)))


class TestShapesAndWrappers:
    def test_activation_kinds_and_zero_macs(self, rng):
        x = rng.standard_normal((3, 4))
        assert np.array_equal(Activation("relu").forward(x), np.maximum(x, 0))
        assert Activation("identity").forward(x) is x
        assert Activation("silu").mac_count((4,)) == 0
        with pytest.raises(ConfigError):
            Activation("tanh")

    def test_flatten_reshape_roundtrip(self, rng):
        x = rng.standard_normal((2, 3, 4, 5))
        fl = Flatten()
        flat = fl.forward(x)
        assert flat.shape == (2, 60)
        np.testing.assert_array_equal(fl.backward(flat), x)
        rs = Reshape((3, 20))
        assert rs.forward(flat).shape == (2, 3, 20)
        assert rs.output_shape((60,)) == (3, 20)
        with pytest.raises(DimensionError):
            rs.output_shape((61,))

    def test_conv1d_equals_conv2d_on_height1(self, rng):
        c1 = Conv1D(3, 4, 5, pad=2, rng=np.random.default_rng(5),
                    dtype=np.float64)
        x = rng.standard_normal((2, 3, 16))
        out = c1.forward(x)
        assert out.shape == (2, 4, 16)
        want = oracles.conv2d_naive(
            np.pad(x, ((0, 0), (0, 0), (2, 2)))[:, :, None, :],
            c1.inner.weight, c1.inner.bias, 1, 0)[:, :, 0, :]
        np.testing.assert_allclose(out, want, atol=1e-12)
        dx = c1.backward(np.ones_like(out))
        assert dx.shape == x.shape

    def test_kanconv1d_shapes_and_counts(self, rng):
        spec = rbf_spec(3)
        lyr = KanConv1D(2, 4, 5, pad=2, spec=spec, rng=rng)
        assert lyr.output_shape((2, 16)) == (4, 16)
        assert lyr.param_count() == 4 * 2 * 5 * (3 + 3) + 4
        assert lyr.mac_count((2, 16)) == 4 * 16 * 2 * 5 * (3 + 2)
        x = rng.standard_normal((2, 2, 16)).astype(np.float32)
        out = lyr.forward(x)
        assert out.shape == (2, 4, 16)
        lyr.backward(np.ones_like(out))

    def test_maxpool1d(self, rng):
        x = rng.standard_normal((2, 3, 8))
        lyr = MaxPool1D(2)
        out = lyr.forward(x)
        assert out.shape == (2, 3, 4)
        np.testing.assert_array_equal(out, x.reshape(2, 3, 4, 2).max(-1))

    def test_global_avg_pool(self, rng):
        x = rng.standard_normal((2, 3, 8))
        lyr = GlobalAvgPool1D()
        np.testing.assert_allclose(lyr.forward(x), x.mean(-1))
        dx = lyr.backward(np.ones((2, 3)))
        np.testing.assert_allclose(dx, np.full_like(x, 1.0 / 8))
        assert lyr.mac_count((3, 8)) == 0
