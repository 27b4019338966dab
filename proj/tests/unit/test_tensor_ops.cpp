#include "expect_error.hpp"
#include "oracles.hpp"

#include "lrp/network.hpp"
#include "lrp/ops.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace lrp;

TEST(Tensor, DefaultHoldsSingleZero) {
    Tensor t;
    EXPECT_EQ(t.shape(), Shape{1});
    EXPECT_EQ(t[0], 0.0);
}

TEST(Tensor, RejectsBadShapes) {
    EXPECT_LRP_ERROR(Tensor(Shape{2, 2}, {1.0, 2.0, 3.0}), dimension, "[2,2]");
    EXPECT_LRP_ERROR(Tensor::zeros({2, 0}), dimension, "zero extent");
    EXPECT_LRP_ERROR(Tensor::zeros({1, 1, 1, 1, 1}), dimension, "rank");
    EXPECT_LRP_ERROR(Tensor::zeros(Shape{}), dimension, "rank");
}

TEST(Tensor, RejectsNonFiniteValues) {
    EXPECT_LRP_ERROR(Tensor(Shape{2}, {1.0, std::numeric_limits<double>::quiet_NaN()}), value, "non-finite");
    EXPECT_LRP_ERROR(Tensor(Shape{1}, {INFINITY}), value, "non-finite");
}

TEST(Tensor, ReshapeKeepsDataAndChecksCount) {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    const auto r = t.reshaped({3, 2});
    EXPECT_EQ(r.values(), t.values());
    EXPECT_EQ(r.at(2, 1), 6.0);
    EXPECT_LRP_ERROR(t.reshaped({4}), dimension, "");
}

TEST(Tensor, Reductions) {
    Tensor t({4}, {1, -2, 5, 0.5});
    EXPECT_DOUBLE_EQ(t.sum(), 4.5);
    EXPECT_EQ(t.min(), -2.0);
    EXPECT_EQ(t.max(), 5.0);
}

TEST(BnParams, Validation) {
    EXPECT_LRP_ERROR(BnParams({1, 1}, {0}, {0, 0}, {1, 1}), dimension, "");
    EXPECT_LRP_ERROR(BnParams({}, {}, {}, {}), dimension, "");
    EXPECT_LRP_ERROR(BnParams({1}, {0}, {0}, {0}), value, "sigma_run[0]");
    EXPECT_LRP_ERROR(BnParams({1}, {0}, {0}, {-1}), value, "sigma_run");
    EXPECT_LRP_ERROR(BnParams({NAN}, {0}, {0}, {1}), value, "not finite");
}

TEST(DenseForward, HandExamples) {
    EXPECT_EQ(dense_forward(Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0}), Tensor({2}, {3, 7})).values(),
              (std::vector<double>{3, 7}));
    EXPECT_EQ(dense_forward(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2}, {0, 0}), Tensor({2}, {1, 1})).values(),
              (std::vector<double>{3, 7}));
    EXPECT_EQ(dense_forward(Tensor({1, 2}, {1, -1}), Tensor({1}, {0.5}), Tensor({2}, {2, 2})).values(),
              (std::vector<double>{0.5}));
}

TEST(DenseForward, DimensionErrors) {
    EXPECT_LRP_ERROR(dense_forward(Tensor::zeros({2, 3}), Tensor::zeros({2}), Tensor::zeros({2})), dimension, "");
    EXPECT_LRP_ERROR(dense_forward(Tensor::zeros({2, 2}), Tensor::zeros({3}), Tensor::zeros({2})), dimension, "bias");
    EXPECT_LRP_ERROR(dense_forward(Tensor::zeros({4}), Tensor::zeros({1}), Tensor::zeros({4})), dimension, "rank 2");
}

TEST(DenseForward, MatchesOracleOnRandomShapes) {
    oracle::Rng rng(11);
    for (int t = 0; t < 50; ++t) {
        const auto in = rng.index(1, 20), out = rng.index(1, 20);
        const auto w = rng.tensor({out, in}, -1, 1), b = rng.tensor({out}, -1, 1), x = rng.tensor({in}, -1, 1);
        const auto want = oracle::dense(oracle::to_mat(w), b.values(), x.values());
        EXPECT_LE(oracle::max_abs_diff(want, dense_forward(w, b, x)), 1e-14);
    }
}

TEST(ConvForward, HandExamples) {
    const Tensor img({1, 2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(conv2d_forward(Tensor({1, 1, 1, 1}, {2}), Tensor({1}, {1}), img, 1, 0).values(),
              (std::vector<double>{3, 5, 7, 9}));
    EXPECT_EQ(conv2d_forward(Tensor({1, 1, 2, 2}, {1, 0, 0, 1}), Tensor({1}, {0}), img, 1, 0),
              Tensor({1, 1, 1}, {5}));
    const auto c = conv2d_forward(Tensor::zeros({2, 1, 2, 2}), Tensor({2}, {0.25, -3}), img, 1, 1);
    EXPECT_EQ(c.shape(), (Shape{2, 3, 3}));
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_EQ(c[i], 0.25);
        EXPECT_EQ(c[9 + i], -3.0);
    }
}

TEST(ConvForward, MatchesOracleOnRandomGeometries) {
    oracle::Rng rng(12);
    for (int t = 0; t < 60; ++t) {
        const auto ic = rng.index(1, 3), oc = rng.index(1, 3), k = rng.index(1, 3);
        const auto stride = rng.index(1, 2), pad = rng.index(0, 1);
        // choose an extent giving exact division
        std::size_t h = k + stride * rng.index(0, 4) - 2 * pad;
        if (h < 1) h += stride;
        const auto kernel = rng.tensor({oc, ic, k, k}, -1, 1), bias = rng.tensor({oc}, -1, 1);
        const auto x = rng.tensor({ic, h, h}, -1, 1);
        Tensor got;
        try {
            got = conv2d_forward(kernel, bias, x, stride, pad);
        } catch (const Error& e) {
            ASSERT_EQ(e.category(), ErrorCategory::geometry);
            continue;
        }
        EXPECT_LE(oracle::max_abs_diff(oracle::conv(kernel, bias, x, stride, pad), got), 1e-14);
    }
}

TEST(ConvForward, GeometryAndDimensionErrors) {
    const auto k = Tensor::zeros({1, 1, 3, 3});
    EXPECT_LRP_ERROR(conv2d_forward(k, Tensor::zeros({1}), Tensor::zeros({1, 2, 2}), 1, 0), geometry, "exceeds");
    EXPECT_LRP_ERROR(conv2d_forward(k, Tensor::zeros({1}), Tensor::zeros({1, 6, 6}), 2, 0), geometry, "");
    EXPECT_LRP_ERROR(conv2d_forward(k, Tensor::zeros({1}), Tensor::zeros({2, 5, 5}), 1, 0), dimension, "");
    EXPECT_LRP_ERROR(conv2d_forward(k, Tensor::zeros({2}), Tensor::zeros({1, 5, 5}), 1, 0), dimension, "bias");
    EXPECT_LRP_ERROR(conv2d_forward(k, Tensor::zeros({1}), Tensor::zeros({1, 5, 5}), 0, 0), geometry, "stride");
}

TEST(BatchNormForward, HandExamples) {
    const Tensor x5({1}, {5}), x1({1}, {1}), x4({1}, {4});
    EXPECT_EQ(batchnorm_forward(BnParams({1}, {0}, {0}, {1}), x5)[0], 5.0);
    EXPECT_EQ(batchnorm_forward(BnParams({2}, {1}, {0}, {1}), x1)[0], 3.0);
    EXPECT_EQ(batchnorm_forward(BnParams({2}, {0.5}, {1}, {2}), x4)[0], 3.5);
}

TEST(BatchNormForward, PerChannelAndPerElement) {
    oracle::Rng rng(13);
    const auto x = rng.tensor({3, 2, 2}, -2, 2);
    const auto ch = oracle::random_bn(rng, 3);
    EXPECT_LE(oracle::max_abs_diff(oracle::batchnorm_channels(ch, x), batchnorm_forward(ch, x)), 1e-14);
    const auto el = oracle::random_bn(rng, 12);
    const auto want = oracle::batchnorm(el, x.values());
    EXPECT_LE(oracle::max_abs_diff(want, batchnorm_forward(el, x)), 1e-14);
    EXPECT_LRP_ERROR(batchnorm_forward(oracle::random_bn(rng, 5), x), dimension, "batch-norm");
}

TEST(PerElementView, ExpandsChannelParameters) {
    const BnParams ch({1, 2}, {0, 1}, {3, 4}, {5, 6});
    const auto el = batchnorm_per_element(ch, {2, 1, 2});
    EXPECT_EQ(el.gamma(), (std::vector<double>{1, 1, 2, 2}));
    EXPECT_EQ(el.sigma_run(), (std::vector<double>{5, 5, 6, 6}));
    EXPECT_LRP_ERROR(batchnorm_per_element(ch, {3, 2}), dimension, "");
}

TEST(Relu, Definition) {
    EXPECT_EQ(relu(Tensor({3}, {-1, 0, 2})).values(), (std::vector<double>{0, 0, 2}));
}

TEST(Pooling, HandExamples) {
    const Tensor x({1, 2, 2}, {1, 3, 2, 0});
    const auto m = maxpool(x, 2, 2);
    EXPECT_EQ(m.output, Tensor({1, 1, 1}, {3}));
    ASSERT_EQ(m.argmax.size(), 1u);
    EXPECT_EQ(m.argmax[0], 1u);  // row 0, column 1
    EXPECT_EQ(avgpool(x, 2, 2), Tensor({1, 1, 1}, {1.5}));
}

TEST(Pooling, FirstMaximumWinsTies) {
    const auto m = maxpool(Tensor({1, 2, 2}, {2, 2, 2, 2}), 2, 2);
    EXPECT_EQ(m.argmax[0], 0u);
}

TEST(Pooling, OverlappingWindowsAndErrors) {
    const Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto m = maxpool(x, 2, 1);
    EXPECT_EQ(m.output.values(), (std::vector<double>{5, 6, 8, 9}));
    EXPECT_EQ(m.argmax, (std::vector<std::size_t>{4, 5, 7, 8}));
    EXPECT_EQ(avgpool(x, 3, 3)[0], 5.0);
    EXPECT_LRP_ERROR(maxpool(x, 2, 2), geometry, "");
    EXPECT_LRP_ERROR(maxpool(Tensor::zeros({4}), 2, 2), dimension, "[c,h,w]");
}

TEST(Flatten, ChannelMajorOrder) {
    const Tensor x({2, 1, 2}, {1, 2, 3, 4});
    const auto f = flatten(x);
    EXPECT_EQ(f.shape(), Shape{4});
    EXPECT_EQ(f.values(), x.values());
}

TEST(NormalizePixels, Endpoints) {
    const auto n = normalize_pixels(Tensor({3}, {0, 255, 127.5}));
    EXPECT_EQ(n[0], -1.0);
    EXPECT_EQ(n[1], 1.0);
    EXPECT_EQ(n[2], 0.0);
    EXPECT_LRP_ERROR(normalize_pixels(Tensor({1}, {256})), value, "outside");
    EXPECT_LRP_ERROR(normalize_pixels(Tensor({1}, {-1})), value, "outside");
}

TEST(Network, ValidatesComposition) {
    const Dense d{Tensor::zeros({2, 3}), Tensor::zeros({2}), {}};
    EXPECT_LRP_ERROR(Network({d}, {2}, -1, 1, 2), shape, "layer 0 (dense)");
    EXPECT_LRP_ERROR(Network({Dense{Tensor::zeros({2, 2}), Tensor::zeros({2}), {}}}, {2}, -1, 1, 3), shape, "last layer");
    EXPECT_LRP_ERROR(Network({Dense{Tensor::zeros({2, 2}), Tensor::zeros({2}), {}}}, {2}, 1, 1, 2), value, "input_low");
    EXPECT_LRP_ERROR(Network({}, {2}, -1, 1, 2), shape, "no layers");
    EXPECT_LRP_ERROR(Network({Flatten{}, MaxPool{2, 2}}, {1, 2, 2}, -1, 1, 1), shape, "layer 1 (maxpool)");
    EXPECT_LRP_ERROR(Network({MaxPool{0, 1}}, {1, 2, 2}, -1, 1, 1), value, "window");
}

TEST(Network, ActivationShapes) {
    const Network net({Conv2D{Tensor::zeros({2, 1, 3, 3}), Tensor::zeros({2}), 1, 1}, ReLU{}, MaxPool{2, 2}, Flatten{},
                       Dense{Tensor::zeros({3, 8}), Tensor::zeros({3}), {}}},
                      {1, 4, 4}, -1, 1, 3);
    const std::vector<Shape> want{{1, 4, 4}, {2, 4, 4}, {2, 4, 4}, {2, 2, 2}, {8}, {3}};
    EXPECT_EQ(net.activation_shapes(), want);
}

TEST(Forward, IdentityNetwork) {
    const Network net({Dense{Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0}), {}}}, {2}, -1, 1, 2);
    EXPECT_EQ(forward(net, Tensor({2}, {0.3, -0.3})).logits.values(), (std::vector<double>{0.3, -0.3}));
}

TEST(Forward, RecordsEveryActivation) {
    const Network net({Dense{Tensor({1, 2}, {1, 1}), Tensor({1}, {0}), {}}, ReLU{}}, {2}, -1, 2, 1);
    const auto r = forward(net, Tensor({2}, {1, 2}));
    ASSERT_EQ(r.activations.size(), 3u);
    EXPECT_EQ(r.activations[0].values(), (std::vector<double>{1, 2}));
    EXPECT_EQ(r.activations[1].values(), (std::vector<double>{3}));
    EXPECT_EQ(r.activations[2].values(), (std::vector<double>{3}));
    EXPECT_EQ(r.logits.values(), (std::vector<double>{3}));
}

TEST(Forward, RejectsWrongInputShape) {
    const Network net({Dense{Tensor({1, 2}, {1, 1}), Tensor::zeros({1}), {}}}, {2}, -1, 1, 1);
    EXPECT_LRP_ERROR(forward(net, Tensor::zeros({3})), dimension, "input shape");
}

TEST(Network, WithoutBiasesZeroesDenseAndConv) {
    const Network net({Conv2D{Tensor({1, 1, 1, 1}, {1}), Tensor({1}, {2}), 1, 0}, Flatten{},
                       Dense{Tensor({1, 1}, {1}), Tensor({1}, {3}), {}}},
                      {1, 1, 1}, -1, 1, 1);
    const auto z = net.without_biases();
    EXPECT_EQ(forward(z, Tensor({1, 1, 1}, {0.5})).logits[0], 0.5);
    EXPECT_EQ(forward(net, Tensor({1, 1, 1}, {0.5})).logits[0], 5.5);
}
