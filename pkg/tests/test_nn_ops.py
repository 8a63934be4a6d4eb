import warnings

import numpy as np
import pytest

from lfin.autodiff import (
    ConvWeights,
    Tensor,
    afe_forward,
    concat_channels,
    conv1x1_forward,
    conv2d,
    l1_loss,
    macpi_to_sai_channels,
    pixel_shuffle,
    pixel_unshuffle,
    relu_forward,
    residual_add,
    sfe_forward,
    upsample_bilinear,
    upsample_nearest,
)
from lfin.errors import ParameterError, ShapeError
from lfin.imageproc import (
    bicubic_resize,
    rgb_to_y,
    rgb_to_ycbcr,
    ycbcr_to_rgb,
)
from lfin.lf_repr import LightField, lf_to_macpi, MacPiImage

from helpers import (
    afe_direct_oracle,
    bicubic_2d_oracle,
    conv1x1_matmul_oracle,
    fd_gradcheck,
    rand_tensor,
    sfe_per_view_oracle,
)


def make_afe(rng, out_c, in_c, A):
    return ConvWeights(
        kernel=rand_tensor(rng, (out_c, in_c, A, A)),
        bias=rand_tensor(rng, (out_c,)),
        stride=A, dilation=1, padding=0,
    )


def make_sfe(rng, out_c, in_c, A):
    return ConvWeights(
        kernel=rand_tensor(rng, (out_c, in_c, 3, 3)),
        bias=rand_tensor(rng, (out_c,)),
        stride=1, dilation=A, padding=A,
    )


def make_1x1(rng, out_c, in_c):
    return ConvWeights(
        kernel=rand_tensor(rng, (out_c, in_c, 1, 1)),
        bias=rand_tensor(rng, (out_c,)),
    )


class TestConvForward:
    def test_afe_matches_direct_summation(self):
        rng = np.random.default_rng(20)
        for A, c_in, c_out, H in [(2, 1, 1, 3), (3, 2, 4, 2), (5, 3, 2, 2)]:
            x = rand_tensor(rng, (c_in, A * H, A * H), requires_grad=False)
            w = make_afe(rng, c_out, c_in, A)
            got = afe_forward(x, w, A).data
            want = afe_direct_oracle(x.data, w.kernel.data, w.bias.data, A)
            assert np.allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_sfe_matches_per_view_conv(self):
        rng = np.random.default_rng(21)
        for A, c_in, c_out, H in [(1, 1, 1, 5), (2, 2, 3, 4), (3, 3, 2, 3)]:
            x = rand_tensor(rng, (c_in, A * H, A * H), requires_grad=False)
            w = make_sfe(rng, c_out, c_in, A)
            got = sfe_forward(x, w, A).data
            want = sfe_per_view_oracle(x.data, w.kernel.data, w.bias.data, A)
            assert np.allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_sfe_with_a1_is_plain_3x3(self):
        # dilation 1, padding 1: ordinary same-size 3x3 convolution
        rng = np.random.default_rng(22)
        x = rand_tensor(rng, (2, 6, 6), requires_grad=False)
        w = make_sfe(rng, 2, 2, 1)
        got = sfe_forward(x, w, 1).data
        want = sfe_per_view_oracle(x.data, w.kernel.data, w.bias.data, 1)
        assert np.allclose(got, want)

    def test_1x1_matches_matmul(self):
        rng = np.random.default_rng(23)
        x = rand_tensor(rng, (5, 4, 6), requires_grad=False)
        w = make_1x1(rng, 3, 5)
        got = conv1x1_forward(x, w).data
        want = conv1x1_matmul_oracle(x.data, w.kernel.data, w.bias.data)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_batched_equals_loop_over_batch(self):
        rng = np.random.default_rng(24)
        xb = rand_tensor(rng, (4, 2, 6, 6), requires_grad=False)
        w = make_sfe(rng, 3, 2, 2)
        got = sfe_forward(xb, w, 2).data
        for b in range(4):
            single = sfe_forward(Tensor(xb.data[b]), w, 2).data
            # summation order differs between the batched and single einsum
            # contractions, so demand closeness rather than bit equality
            assert np.allclose(got[b], single, rtol=1e-12, atol=1e-12)

    def test_geometry_validation(self):
        rng = np.random.default_rng(25)
        x = rand_tensor(rng, (1, 6, 6), requires_grad=False)
        with pytest.raises(ShapeError):
            afe_forward(x, make_sfe(rng, 1, 1, 2), 2)
        with pytest.raises(ShapeError):
            sfe_forward(x, make_afe(rng, 1, 1, 2), 2)
        with pytest.raises(ShapeError):
            conv1x1_forward(x, make_sfe(rng, 1, 1, 2))
        with pytest.raises(ShapeError):
            afe_forward(rand_tensor(rng, (1, 5, 6)), make_afe(rng, 1, 1, 2), 2)
        with pytest.raises(ShapeError):
            conv2d(rand_tensor(rng, (2, 6, 6)), make_1x1(rng, 1, 3))


class TestLocality:
    def test_afe_output_reads_single_macro_pixel(self):
        # perturbing one macro-pixel changes exactly one output position
        rng = np.random.default_rng(26)
        A, H = 3, 4
        x = rng.standard_normal((2, A * H, A * H))
        w = make_afe(rng, 3, 2, A)
        base = afe_forward(Tensor(x), w, A).data
        x2 = x.copy()
        th, tw = 1, 2  # macro-pixel index
        x2[:, th * A:(th + 1) * A, tw * A:(tw + 1) * A] += 1.0
        pert = afe_forward(Tensor(x2), w, A).data
        changed = np.any(pert != base, axis=0)
        assert changed[th, tw]
        changed[th, tw] = False
        assert not changed.any()

    def test_sfe_never_mixes_views(self):
        # perturbing all pixels of one view leaves every other view's
        # output untouched
        rng = np.random.default_rng(27)
        A, H = 3, 4
        x = rng.standard_normal((2, A * H, A * H))
        w = make_sfe(rng, 2, 2, A)
        base = sfe_forward(Tensor(x), w, A).data
        for (u, v) in [(0, 0), (1, 2), (2, 1)]:
            x2 = x.copy()
            x2[:, u::A, v::A] += rng.standard_normal((2, H, H))
            pert = sfe_forward(Tensor(x2), w, A).data
            diff = pert != base
            mask = np.zeros_like(diff, dtype=bool)
            mask[:, u::A, v::A] = True
            assert not diff[~mask].any()
            assert diff[mask].any()

    def test_sfe_translation_equivariance_within_view(self):
        # shifting the MacPI by A pixels (one full-view shift) shifts the
        # output by A, away from the zero-padded border
        rng = np.random.default_rng(28)
        A, H = 2, 6
        x = rng.standard_normal((1, A * H, A * H))
        w = make_sfe(rng, 1, 1, A)
        y = sfe_forward(Tensor(x), w, A).data
        xs = np.roll(x, A, axis=-1)
        ys = sfe_forward(Tensor(xs), w, A).data
        interior = np.roll(y, A, axis=-1)[:, :, 2 * A:-2 * A]
        assert np.allclose(ys[:, :, 2 * A:-2 * A], interior)


class TestStructuralOps:
    def test_pixel_shuffle_definition_r2(self):
        # channels [a, b, c, d] -> 2x2 cell [[a, b], [c, d]]
        x = Tensor(np.array([1.0, 2.0, 3.0, 4.0]).reshape(4, 1, 1))
        out = pixel_shuffle(x, 2).data
        assert np.array_equal(out, np.array([[[1.0, 2.0], [3.0, 4.0]]]))

    def test_pixel_shuffle_multi_channel(self):
        rng = np.random.default_rng(29)
        x = rng.standard_normal((3 * 4, 2, 5))
        out = pixel_shuffle(Tensor(x), 2).data
        assert out.shape == (3, 4, 10)
        for c in range(3):
            for a in range(2):
                for b in range(2):
                    assert np.array_equal(
                        out[c, a::2, b::2], x[c * 4 + a * 2 + b]
                    )

    def test_shuffle_unshuffle_inverse(self):
        rng = np.random.default_rng(30)
        for r in (1, 2, 3):
            x = rng.standard_normal((2 * r * r, 3, 4))
            back = pixel_unshuffle(pixel_shuffle(Tensor(x), r), r).data
            assert np.array_equal(back, x)

    def test_shuffle_rejects_bad_channels(self):
        with pytest.raises(ShapeError):
            pixel_shuffle(Tensor(np.zeros((3, 2, 2))), 2)
        with pytest.raises(ParameterError):
            pixel_shuffle(Tensor(np.zeros((4, 2, 2))), 0)

    def test_macpi_to_sai_channels_matches_layout_transform(self):
        rng = np.random.default_rng(31)
        for A, H in [(2, 3), (3, 2)]:
            lf = rng.standard_normal((A, A, H, H))
            m = lf_to_macpi(LightField(lf)).data
            got = macpi_to_sai_channels(Tensor(m[None]), A).data[0]
            from lfin.lf_repr import macpi_to_sai
            want = macpi_to_sai(MacPiImage(m, A)).data
            assert np.array_equal(got, want)

    def test_upsample_nearest_values(self):
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])[None])
        out = upsample_nearest(x, 2).data
        assert np.array_equal(out[0], np.array([
            [1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4],
        ]))

    def test_upsample_bilinear_constant_preserved(self):
        x = Tensor(np.full((1, 3, 3), 7.0))
        assert np.allclose(upsample_bilinear(x, 2).data, 7.0)

    def test_upsample_bilinear_interior_midpoints(self):
        # 1D ramp [0, 1]: interior output samples sit at 1/4 and 3/4
        x = Tensor(np.array([[0.0, 1.0]])[None])
        out = upsample_bilinear(x, 2).data[0, 0]
        assert np.allclose(out, [0.0, 0.25, 0.75, 1.0])

    def test_concat_and_residual(self):
        rng = np.random.default_rng(32)
        a, b = rng.standard_normal((2, 3, 4)), rng.standard_normal((1, 3, 4))
        out = concat_channels([Tensor(a), Tensor(b)]).data
        assert np.array_equal(out, np.concatenate([a, b], axis=0))
        s = residual_add(Tensor(a), Tensor(a.copy())).data
        assert np.allclose(s, 2 * a)
        with pytest.raises(ShapeError):
            residual_add(Tensor(a), Tensor(b))

    def test_relu(self):
        x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        assert np.array_equal(relu_forward(Tensor(x)).data,
                              np.array([0.0, 0.0, 0.0, 0.5, 2.0]))

    def test_l1_loss_values(self):
        a = Tensor(np.array([1.0, 2.0, 3.0]))
        b = Tensor(np.array([1.0, 0.0, 7.0]))
        assert np.isclose(l1_loss(a, b).data, (0 + 2 + 4) / 3)
        assert l1_loss(a, a).data == 0.0


class TestGradients:
    def test_afe_grads(self):
        rng = np.random.default_rng(40)
        A = 3
        x = rand_tensor(rng, (2, A * 2, A * 2))
        w = make_afe(rng, 3, 2, A)
        fd_gradcheck(lambda x, k, b: afe_forward(x, w, A),
                     [x, w.kernel, w.bias], rng)

    def test_sfe_grads(self):
        rng = np.random.default_rng(41)
        A = 2
        x = rand_tensor(rng, (2, A * 3, A * 3))
        w = make_sfe(rng, 2, 2, A)
        fd_gradcheck(lambda x, k, b: sfe_forward(x, w, A),
                     [x, w.kernel, w.bias], rng)

    def test_1x1_grads(self):
        rng = np.random.default_rng(42)
        x = rand_tensor(rng, (3, 4, 4))
        w = make_1x1(rng, 2, 3)
        fd_gradcheck(lambda x, k, b: conv1x1_forward(x, w),
                     [x, w.kernel, w.bias], rng)

    def test_batched_conv_grads(self):
        rng = np.random.default_rng(43)
        x = rand_tensor(rng, (2, 2, 4, 4))
        w = make_sfe(rng, 2, 2, 2)
        fd_gradcheck(lambda x, k, b: sfe_forward(x, w, 2),
                     [x, w.kernel, w.bias], rng)

    def test_relu_grads_away_from_kink(self):
        rng = np.random.default_rng(44)
        x = Tensor(rng.standard_normal((3, 4, 4)), requires_grad=True)
        x.data[np.abs(x.data) < 0.05] = 0.1  # keep clear of the kink
        fd_gradcheck(relu_forward, [x], rng)

    def test_pixel_shuffle_grads_exact(self):
        # a permutation's backward pass is its inverse permutation, bit-exact
        rng = np.random.default_rng(45)
        x = rand_tensor(rng, (8, 3, 3))
        out = pixel_shuffle(x, 2)
        g = rng.standard_normal(out.data.shape)
        out.backward(g)
        assert np.array_equal(x.grad, pixel_unshuffle(Tensor(g), 2).data)

    def test_macpi_to_sai_channels_grads(self):
        rng = np.random.default_rng(46)
        x = rand_tensor(rng, (2, 6, 6))
        fd_gradcheck(lambda x: macpi_to_sai_channels(x, 2), [x], rng)

    def test_upsample_grads(self):
        rng = np.random.default_rng(47)
        fd_gradcheck(lambda x: upsample_nearest(x, 3),
                     [rand_tensor(rng, (2, 3, 3))], rng)
        fd_gradcheck(lambda x: upsample_bilinear(x, 2),
                     [rand_tensor(rng, (2, 4, 4))], rng)

    def test_concat_residual_grads(self):
        rng = np.random.default_rng(48)
        a, b = rand_tensor(rng, (2, 3, 3)), rand_tensor(rng, (3, 3, 3))
        fd_gradcheck(lambda a, b: concat_channels([a, b]), [a, b], rng)
        c = rand_tensor(rng, (2, 3, 3))
        fd_gradcheck(residual_add, [a, c], rng)

    def test_l1_grads_away_from_ties(self):
        rng = np.random.default_rng(49)
        a = rand_tensor(rng, (2, 4, 4))
        b = rand_tensor(rng, (2, 4, 4))
        # separate the operands so no |.| kink sits within h of a sample
        b.data += np.sign(a.data - b.data) * -0.0  # no-op; kept explicit
        mask = np.abs(a.data - b.data) < 0.05
        a.data[mask] += 0.1
        fd_gradcheck(l1_loss, [a, b], rng)

    def test_composite_graph_grads(self):
        rng = np.random.default_rng(50)
        A = 2
        x = rand_tensor(rng, (1, 4, 4))
        w1 = make_sfe(rng, 4, 1, A)
        w2 = make_afe(rng, 2, 4, A)

        def fn(x, k1, b1, k2, b2):
            h = relu_forward(sfe_forward(x, w1, A))
            h = afe_forward(h, w2, A)
            h = pixel_shuffle(concat_channels([h, h]), 2)
            return h

        fd_gradcheck(fn, [x, w1.kernel, w1.bias, w2.kernel, w2.bias], rng)

    def test_grad_accumulates_over_reuse(self):
        # same tensor used twice: grads from both uses must sum
        x = Tensor(np.array([3.0]), requires_grad=True)
        out = residual_add(x, x)
        out.backward(np.array([1.0]))
        assert np.array_equal(x.grad, np.array([2.0]))


class TestBicubic:
    def test_matches_direct_oracle(self):
        rng = np.random.default_rng(60)
        for shape, scale in [((8, 8), 2.0), ((12, 8), 0.5),
                             ((9, 9), 3.0), ((16, 12), 0.25)]:
            img = rng.random(shape)
            got = bicubic_resize(img, scale)
            want = bicubic_2d_oracle(img, scale)
            assert got.shape == want.shape
            err = np.abs(got - want).max() / max(np.abs(want).max(), 1.0)
            assert err <= 1e-6, (shape, scale, err)

    def test_constant_image_preserved(self):
        img = np.full((8, 8), 0.4)
        for scale in (0.5, 2.0):
            assert np.allclose(bicubic_resize(img, scale), 0.4, atol=1e-12)

    def test_identity_scale(self):
        rng = np.random.default_rng(61)
        img = rng.random((5, 7))
        assert np.array_equal(bicubic_resize(img, 1.0), img)

    def test_down_then_up_recovers_smooth_image(self):
        # smooth (band-limited) content survives a 2x round trip closely
        y, x = np.mgrid[0:16, 0:16]
        img = 0.5 + 0.3 * np.sin(2 * np.pi * x / 16) * np.cos(2 * np.pi * y / 16)
        rec = bicubic_resize(bicubic_resize(img, 0.5), 2.0)
        assert np.abs(rec - img)[2:-2, 2:-2].max() < 0.02

    def test_rejects_bad_input(self):
        with pytest.raises(ShapeError):
            bicubic_resize(np.zeros((2, 2, 2)), 2.0)
        with pytest.raises(ParameterError):
            bicubic_resize(np.zeros((4, 4)), -1.0)


class TestColor:
    def test_primary_y_values(self):
        # studio-range endpoints: white -> 235/255, black -> 16/255
        assert np.isclose(rgb_to_y(np.ones(3)), 235.0 / 255.0)
        assert np.isclose(rgb_to_y(np.zeros(3)), 16.0 / 255.0)
        # Y coefficients
        assert np.isclose(rgb_to_y(np.array([1.0, 0, 0])), (16 + 65.481) / 255)
        assert np.isclose(rgb_to_y(np.array([0, 1.0, 0])), (16 + 128.553) / 255)
        assert np.isclose(rgb_to_y(np.array([0, 0, 1.0])), (16 + 24.966) / 255)

    def test_gray_has_neutral_chroma(self):
        ycc = rgb_to_ycbcr(np.full(3, 0.5))
        assert np.allclose(ycc[1:], 128.0 / 255.0, atol=1e-12)

    def test_roundtrip(self):
        rng = np.random.default_rng(62)
        rgb = rng.random((10, 10, 3))
        back = ycbcr_to_rgb(rgb_to_ycbcr(rgb))
        assert np.abs(back - rgb).max() < 1e-3

    def test_y_consistent_with_full_transform(self):
        rng = np.random.default_rng(63)
        rgb = rng.random((4, 4, 3))
        assert np.allclose(rgb_to_y(rgb), rgb_to_ycbcr(rgb)[..., 0])

    def test_out_of_range_warns_and_clamps(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            y = rgb_to_y(np.array([1.5, -0.2, 0.5]))
        assert any("clamp" in str(w.message) for w in caught)
        assert np.isclose(y, rgb_to_y(np.array([1.0, 0.0, 0.5])))
