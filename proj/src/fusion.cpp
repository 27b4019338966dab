#include "lrp/fusion.hpp"

#include "lrp/error.hpp"
#include "lrp/kernels.hpp"
#include "lrp/ops.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace lrp {

namespace {

void require_length(const BnParams& bn, std::size_t expected, const char* what) {
    if (bn.size() != expected)
        fail(ErrorCategory::dimension, std::string("batch-norm has ") + std::to_string(bn.size()) +
                                           " entries but the layer has " + std::to_string(expected) + " " + what);
}

}  // namespace

Dense fuse_bn_dense_pre(const BnParams& bn, const Dense& dense) {
    const std::size_t out = dense.outputs(), in = dense.inputs();
    require_length(bn, in, "inputs");
    Dense fused = dense;
    auto w = fused.weights.data();
    auto b = fused.bias.data();
    for (std::size_t j = 0; j < out; ++j) {
        double shift = 0.0;
        for (std::size_t i = 0; i < in; ++i) {
            shift += w[j * in + i] * bn.shift(i);
            w[j * in + i] *= bn.scale(i);
        }
        b[j] += shift;
    }
    fused.weights.require_finite("fused weights");
    fused.bias.require_finite("fused bias");
    return fused;
}

Dense fuse_bn_dense_post(const Dense& dense, const BnParams& bn) {
    const std::size_t out = dense.outputs(), in = dense.inputs();
    require_length(bn, out, "outputs");
    Dense fused = dense;
    auto w = fused.weights.data();
    auto b = fused.bias.data();
    for (std::size_t j = 0; j < out; ++j) {
        for (std::size_t i = 0; i < in; ++i) w[j * in + i] *= bn.scale(j);
        b[j] = bn.beta()[j] + bn.scale(j) * (b[j] - bn.mu_run()[j]);
    }
    fused.weights.require_finite("fused weights");
    fused.bias.require_finite("fused bias");
    return fused;
}

Conv2D fuse_bn_conv_post(const Conv2D& conv, const BnParams& bn) {
    if (conv.kernel.rank() != 4)
        fail(ErrorCategory::dimension, "conv kernel must be rank 4, got " + shape_to_string(conv.kernel.shape()));
    const std::size_t oc = conv.kernel.extent(0);
    require_length(bn, oc, "output channels");
    const std::size_t per = conv.kernel.size() / oc;
    Conv2D fused = conv;
    auto k = fused.kernel.data();
    auto b = fused.bias.data();
    for (std::size_t c = 0; c < oc; ++c) {
        for (std::size_t t = 0; t < per; ++t) k[c * per + t] *= bn.scale(c);
        b[c] = bn.beta()[c] + bn.scale(c) * (b[c] - bn.mu_run()[c]);
    }
    fused.kernel.require_finite("fused kernel");
    fused.bias.require_finite("fused bias");
    return fused;
}

Conv2D fuse_bn_conv_pre(const BnParams& bn, const Conv2D& conv) {
    if (conv.kernel.rank() != 4)
        fail(ErrorCategory::dimension, "conv kernel must be rank 4, got " + shape_to_string(conv.kernel.shape()));
    const auto& ks = conv.kernel.shape();
    const std::size_t oc = ks[0], ic = ks[1], taps = ks[2] * ks[3];
    require_length(bn, ic, "input channels");
    if (conv.padding != 0)
        fail(ErrorCategory::unsupported_fusion,
             "batch-norm before a zero-padded convolution (padding " + std::to_string(conv.padding) +
                 ") cannot be folded exactly; lower the convolution to a dense layer first");
    Conv2D fused = conv;
    auto k = fused.kernel.data();
    auto b = fused.bias.data();
    for (std::size_t o = 0; o < oc; ++o) {
        double shift = 0.0;
        for (std::size_t c = 0; c < ic; ++c) {
            double* tap = k.data() + (o * ic + c) * taps;
            for (std::size_t t = 0; t < taps; ++t) {
                shift += tap[t] * bn.shift(c);
                tap[t] *= bn.scale(c);
            }
        }
        b[o] += shift;
    }
    fused.kernel.require_finite("fused kernel");
    fused.bias.require_finite("fused bias");
    return fused;
}

Dense lower_conv_to_dense(const Conv2D& conv, const Shape& input_shape) {
    const auto g = kernels::conv_geometry(conv.kernel.shape(), input_shape, conv.stride, conv.padding);
    if (conv.bias.size() != g.out_channels)
        fail(ErrorCategory::dimension, "conv bias does not match kernel " + shape_to_string(conv.kernel.shape()));
    const std::size_t rows = g.output_size(), cols = g.input_size();
    constexpr std::size_t kMaxEntries = std::size_t{1} << 28;
    if (rows > kMaxEntries / cols)
        fail(ErrorCategory::value, "lowered matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                                       " is too large to materialize");
    std::vector<double> w(rows * cols, 0.0);
    std::vector<double> b(rows);
    const auto k = conv.kernel.data();
    const long H = static_cast<long>(g.in_height), W = static_cast<long>(g.in_width);
    const long pad = static_cast<long>(g.padding), stride = static_cast<long>(g.stride);
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
        for (std::size_t oy = 0; oy < g.out_height; ++oy)
            for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                const std::size_t row = (oc * g.out_height + oy) * g.out_width + ox;
                b[row] = conv.bias[oc];
                for (std::size_t ic = 0; ic < g.in_channels; ++ic)
                    for (std::size_t ky = 0; ky < g.kernel_height; ++ky) {
                        const long iy = static_cast<long>(oy) * stride + static_cast<long>(ky) - pad;
                        if (iy < 0 || iy >= H) continue;
                        for (std::size_t kx = 0; kx < g.kernel_width; ++kx) {
                            const long ix = static_cast<long>(ox) * stride + static_cast<long>(kx) - pad;
                            if (ix < 0 || ix >= W) continue;
                            const std::size_t col =
                                (ic * g.in_height + static_cast<std::size_t>(iy)) * g.in_width + static_cast<std::size_t>(ix);
                            w[row * cols + col] =
                                k[((oc * g.in_channels + ic) * g.kernel_height + ky) * g.kernel_width + kx];
                        }
                    }
            }
    return Dense{Tensor({rows, cols}, std::move(w)), Tensor({rows}, std::move(b)),
                 Shape{g.out_channels, g.out_height, g.out_width}};
}

std::string policy_name(FusionPolicy policy) {
    switch (policy) {
        case FusionPolicy::fuse: return "fuse";
        case FusionPolicy::lower_then_fuse: return "lower_then_fuse";
        case FusionPolicy::bypass: return "bypass";
    }
    return "fuse";
}

FusionPolicy parse_policy(const std::string& name) {
    if (name == "fuse") return FusionPolicy::fuse;
    if (name == "lower_then_fuse") return FusionPolicy::lower_then_fuse;
    if (name == "bypass") return FusionPolicy::bypass;
    fail(ErrorCategory::usage, "unknown fusion policy \"" + name + "\"");
}

std::string rule_name(FusionRule rule) {
    switch (rule) {
        case FusionRule::dense_pre: return "dense_pre";
        case FusionRule::dense_post: return "dense_post";
        case FusionRule::conv_pre: return "conv_pre";
        case FusionRule::conv_post: return "conv_post";
        case FusionRule::lowered: return "lowered";
    }
    return "lowered";
}

std::string FusionReport::to_json() const {
    nlohmann::ordered_json j;
    j["policy"] = policy_name(policy);
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json rec;
        rec["layer_indices_consumed"] = r.layer_indices_consumed;
        rec["rule_applied"] = rule_name(r.rule);
        rec["exact"] = r.exact;
        rec["note"] = r.note;
        j["records"].push_back(rec);
    }
    j["unfused"] = nlohmann::ordered_json::array();
    for (const auto& u : unfused) {
        nlohmann::ordered_json rec;
        rec["layer_index"] = u.layer_index;
        rec["reason"] = u.reason;
        j["unfused"].push_back(rec);
    }
    return j.dump(2) + "\n";
}

namespace {

struct Attempt {
    std::optional<Layer> fused;
    FusionRule rule = FusionRule::dense_pre;
    std::string note;
    std::string reason;  // why fusion was not possible
};

bool per_channel(const BnParams& bn, const Shape& shape) { return shape.size() == 3 && bn.size() == shape[0]; }

// BN at position i folded into layers[i + 1]; `in_shape` is the BN's input shape.
Attempt fuse_into_following(const BnParams& bn, const Layer& next, const Shape& in_shape, FusionPolicy policy) {
    Attempt a;
    if (const auto* d = std::get_if<Dense>(&next)) {
        a.fused = fuse_bn_dense_pre(batchnorm_per_element(bn, in_shape), *d);
        a.rule = FusionRule::dense_pre;
        return a;
    }
    if (const auto* c = std::get_if<Conv2D>(&next)) {
        const bool channelwise = per_channel(bn, in_shape);
        if (channelwise && c->padding == 0) {
            a.fused = fuse_bn_conv_pre(bn, *c);
            a.rule = FusionRule::conv_pre;
            return a;
        }
        if (policy == FusionPolicy::lower_then_fuse) {
            a.fused = fuse_bn_dense_pre(batchnorm_per_element(bn, in_shape), lower_conv_to_dense(*c, in_shape));
            a.rule = FusionRule::lowered;
            a.note = "convolution lowered to dense, then dense_pre";
            return a;
        }
        a.reason = channelwise ? "following convolution is zero-padded; conv_pre needs padding 0 (use lower_then_fuse)"
                               : "per-element parameters cannot fold into a convolution (use lower_then_fuse)";
        return a;
    }
    a.reason = "following layer is " + layer_kind(next);
    return a;
}

// BN at position i folded into layers[i - 1]; `shape` is the BN's input shape.
Attempt fuse_into_preceding(const BnParams& bn, const Layer& prev, const Shape& shape, const Shape& prev_in_shape,
                            FusionPolicy policy) {
    Attempt a;
    if (const auto* d = std::get_if<Dense>(&prev)) {
        a.fused = fuse_bn_dense_post(*d, batchnorm_per_element(bn, shape));
        a.rule = FusionRule::dense_post;
        return a;
    }
    if (const auto* c = std::get_if<Conv2D>(&prev)) {
        if (per_channel(bn, shape)) {
            a.fused = fuse_bn_conv_post(*c, bn);
            a.rule = FusionRule::conv_post;
            return a;
        }
        if (policy == FusionPolicy::lower_then_fuse) {
            a.fused = fuse_bn_dense_post(lower_conv_to_dense(*c, prev_in_shape), batchnorm_per_element(bn, shape));
            a.rule = FusionRule::lowered;
            a.note = "convolution lowered to dense, then dense_post";
            return a;
        }
        a.reason = "per-element parameters cannot fold into a convolution (use lower_then_fuse)";
        return a;
    }
    a.reason = "preceding layer is " + layer_kind(prev);
    return a;
}

void check_equivalence(const Network& original, const Network& fused) {
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> dist(original.input_low(), original.input_high());
    for (int probe = 0; probe < 3; ++probe) {
        Tensor x = Tensor::zeros(original.input_shape());
        for (double& v : x.data()) v = dist(rng);
        const auto a = forward(original, x).logits;
        const auto b = forward(fused, x).logits;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i] - b[i]) > 1e-6 * std::max(1.0, std::abs(a[i])))
                fail(ErrorCategory::invariant, "fused network changes logit " + std::to_string(i) + " from " +
                                                   std::to_string(a[i]) + " to " + std::to_string(b[i]));
    }
}

}  // namespace

FusionResult fuse_network(const Network& network, FusionPolicy policy) {
    FusionReport report;
    report.policy = policy;
    std::vector<Layer> layers = network.layers();
    std::vector<std::size_t> origin(layers.size());
    for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = i;
    // shapes[i] is the input shape of layers[i]; BN keeps shapes, so removing a
    // BN removes its input entry.
    std::vector<Shape> shapes = network.activation_shapes();

    std::size_t i = 0;
    while (i < layers.size()) {
        auto* bn_layer = std::get_if<BatchNorm>(&layers[i]);
        if (!bn_layer) {
            ++i;
            continue;
        }
        if (policy == FusionPolicy::bypass) {
            bn_layer->bypass = true;
            report.unfused.push_back({origin[i], "bypass policy: relevance passes through unchanged"});
            ++i;
            continue;
        }
        const BnParams bn = bn_layer->params;
        const bool following_first =
            !bn_layer->placement || *bn_layer->placement == BnPlacement::after_activation;

        std::string reasons;
        bool done = false;
        for (int side = 0; side < 2 && !done; ++side) {
            const bool following = (side == 0) == following_first;
            if (following && i + 1 >= layers.size()) {
                reasons += (reasons.empty() ? "" : "; ") + std::string("no following layer");
                continue;
            }
            if (!following && i == 0) {
                reasons += (reasons.empty() ? "" : "; ") + std::string("no preceding layer");
                continue;
            }
            Attempt a = following ? fuse_into_following(bn, layers[i + 1], shapes[i], policy)
                                  : fuse_into_preceding(bn, layers[i - 1], shapes[i], shapes[i - 1], policy);
            if (!a.fused) {
                reasons += (reasons.empty() ? "" : "; ") + a.reason;
                continue;
            }
            const std::size_t target = following ? i + 1 : i - 1;
            std::vector<std::size_t> consumed{origin[i], origin[target]};
            std::sort(consumed.begin(), consumed.end());
            if (side == 1) a.note += std::string(a.note.empty() ? "" : "; ") + "placement side not fusable: " + reasons;
            report.records.push_back({std::move(consumed), a.rule, true, std::move(a.note)});
            layers[target] = std::move(*a.fused);
            layers.erase(layers.begin() + static_cast<std::ptrdiff_t>(i));
            origin.erase(origin.begin() + static_cast<std::ptrdiff_t>(i));
            shapes.erase(shapes.begin() + static_cast<std::ptrdiff_t>(i));
            done = true;
        }
        if (!done) {
            bn_layer->bypass = true;
            report.unfused.push_back({origin[i], reasons});
            ++i;
        }
    }

    Network fused(std::move(layers), network.input_shape(), network.input_low(), network.input_high(),
                  network.class_count(), network.metadata());
    check_equivalence(network, fused);
    return {std::move(fused), std::move(report)};
}

}  // namespace lrp
