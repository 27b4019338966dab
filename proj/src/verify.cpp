#include "lrp/verify.hpp"

#include "lrp/error.hpp"
#include "lrp/fusion.hpp"
#include "lrp/heatmap.hpp"
#include "lrp/kernels.hpp"
#include "lrp/model_io.hpp"
#include "lrp/ops.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace lrp {

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

Tensor random_tensor(const Shape& shape, double low, double high, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(low, high);
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.data()) v = dist(rng);
    return t;
}

double conservation_error(const RelevanceTrace& trace) {
    const double scale = std::abs(trace.seed_logit);
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (double s : trace.sums) worst = std::max(worst, std::abs(s - trace.seed_logit) / scale);
    return worst;
}

double dissipation_excess(const RelevanceTrace& trace) {
    const double scale = std::abs(trace.seed_logit);
    if (scale == 0.0) return 0.0;
    const double sign = trace.seed_logit < 0.0 ? -1.0 : 1.0;
    double worst = -1.0;
    for (std::size_t k = 0; k + 1 < trace.sums.size(); ++k)
        worst = std::max(worst, sign * (trace.sums[k] - trace.sums[k + 1]) / scale);
    return worst;
}

double min_relevance(const RelevanceTrace& trace) {
    double m = 0.0;
    for (const auto& t : trace.relevance) m = std::min(m, t.min());
    return m;
}

namespace {

constexpr std::size_t kMaxLoweredEntries = std::size_t{1} << 22;

// Largest extent <= limit giving an exact window geometry.
std::size_t shrink_extent(std::size_t extent, std::size_t window, std::size_t stride, std::size_t padding,
                          std::size_t limit) {
    for (std::size_t e = std::min(extent, limit); e >= 1; --e)
        if (e + 2 * padding >= window && (e + 2 * padding - window) % stride == 0) return e;
    return extent;
}

// Input shape for checking a conv against its lowering: the real one unless
// the lowered matrix would be too large, then a smaller valid spatial crop.
Shape lowering_shape(const Conv2D& conv, const Shape& input) {
    const auto g = kernels::conv_geometry(conv.kernel.shape(), input, conv.stride, conv.padding);
    if (g.output_size() * g.input_size() <= kMaxLoweredEntries) return input;
    return {input[0], shrink_extent(input[1], g.kernel_height, g.stride, g.padding, 10),
            shrink_extent(input[2], g.kernel_width, g.stride, g.padding, 10)};
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

CheckResult check_fusion(const Network& net, FusionPolicy policy, const std::vector<Tensor>& probes) {
    CheckResult r{"fusion[" + policy_name(policy) + "]", true, 0.0, tolerance::fusion_logits, {}};
    try {
        const auto fused = fuse_network(net, policy);
        for (const auto& x : probes) {
            const auto a = forward(net, x).logits;
            const auto b = forward(fused.network, x).logits;
            for (std::size_t i = 0; i < a.size(); ++i)
                r.worst = std::max(r.worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
        }
        r.detail = std::to_string(fused.report.records.size()) + " folded, " +
                   std::to_string(fused.report.unfused.size()) + " unfused";
    } catch (const Error& e) {
        r.passed = false;
        r.detail = e.what();
        return r;
    }
    r.passed = r.worst <= r.tolerance;
    return r;
}

void check_lowering(const Network& net, std::size_t probes, std::uint64_t seed, std::vector<CheckResult>& out) {
    const auto& layers = net.layers();
    const auto& shapes = net.activation_shapes();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto* conv = std::get_if<Conv2D>(&layers[k]);
        if (!conv) continue;
        const Shape in = lowering_shape(*conv, shapes[k]);
        CheckResult r{"lowering[layer " + std::to_string(k) + "]", true, 0.0, tolerance::lowering,
                      "input " + shape_to_string(in)};
        const Dense lowered = lower_conv_to_dense(*conv, in);
        for (std::size_t p = 0; p < probes; ++p) {
            const auto x = random_tensor(in, -1.0, 1.0, seed + 7919 * p + k);
            const auto y_conv = conv2d_forward(conv->kernel, conv->bias, x, conv->stride, conv->padding);
            const auto y_dense = dense_forward(lowered.weights, lowered.bias, flatten(x));
            r.worst = std::max(r.worst, max_abs_diff(flatten(y_conv), y_dense));
        }
        r.passed = r.worst <= r.tolerance;
        out.push_back(std::move(r));
    }
}

void check_conv_lrp(const Network& net, std::size_t probes, std::uint64_t seed, std::vector<CheckResult>& out) {
    const auto& layers = net.layers();
    const auto& shapes = net.activation_shapes();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto* conv = std::get_if<Conv2D>(&layers[k]);
        if (!conv) continue;
        const Shape in = lowering_shape(*conv, shapes[k]);
        const Shape out_shape = layer_output_shape(*conv, in);
        CheckResult r{"conv_dense_lrp[layer " + std::to_string(k) + "]", true, 0.0, tolerance::conv_dense_lrp,
                      "input " + shape_to_string(in)};
        const Dense lowered = lower_conv_to_dense(*conv, in);
        LrpConfig cfg;
        cfg.epsilon = 0.0;
        for (std::size_t p = 0; p < std::min<std::size_t>(probes, 10); ++p) {
            const auto x = random_tensor(in, 0.0, 1.0, seed + 104729 * p + k);
            const auto rel = random_tensor(out_shape, 0.0, 1.0, seed + 15485863 * p + k);
            const auto a = lrp_conv_zplus(x, *conv, rel, cfg);
            const auto b = lrp_dense_zplus(x, lowered, rel, cfg);
            r.worst = std::max(r.worst, max_abs_diff(a, b));
            const auto xb = random_tensor(in, net.input_low(), net.input_high(), seed + 1299709 * p + k);
            const auto c = lrp_conv_zb(xb, *conv, net.input_low(), net.input_high(), rel, cfg);
            const auto d = lrp_dense_zb(xb, lowered, net.input_low(), net.input_high(), rel, cfg);
            r.worst = std::max(r.worst, max_abs_diff(c, d));
        }
        r.passed = r.worst <= r.tolerance;
        out.push_back(std::move(r));
    }
}

}  // namespace

VerifyReport verify_network(const Network& network, const VerifyOptions& options) {
    VerifyReport report;
    std::vector<Tensor> probes;
    for (std::size_t p = 0; p < options.probes; ++p)
        probes.push_back(random_tensor(network.input_shape(), network.input_low(), network.input_high(),
                                       options.seed * 1000003 + p));

    report.checks.push_back(check_fusion(network, FusionPolicy::fuse, probes));
    report.checks.push_back(check_fusion(network, FusionPolicy::lower_then_fuse, probes));
    check_lowering(network, std::min<std::size_t>(options.probes, 20), options.seed, report.checks);

    Network fused = network;
    try {
        fused = fuse_network(network, FusionPolicy::lower_then_fuse).network;
    } catch (const Error& e) {
        report.checks.push_back({"relevance", false, 0.0, 0.0, std::string("fusion failed: ") + e.what()});
        return report;
    }
    check_conv_lrp(fused, options.probes, options.seed, report.checks);

    // Exact conservation needs bias-free layers, no stabilizer and a positive
    // seed; a non-positive seed can meet a zero z+ denominator at the top layer.
    {
        CheckResult r{"conservation[fused, zero bias]", true, 0.0, tolerance::conservation, {}};
        const Network unbiased = fused.without_biases();
        LrpConfig cfg;
        cfg.epsilon = 0.0;
        std::size_t skipped = 0;
        try {
            for (const auto& x : probes) {
                const auto t = explain(unbiased, x, cfg);
                if (t.seed_logit <= 0.0) {
                    ++skipped;
                    continue;
                }
                r.worst = std::max(r.worst, conservation_error(t));
            }
            r.passed = r.worst <= r.tolerance && skipped < probes.size();
            if (skipped) r.detail = std::to_string(skipped) + " probes with non-positive seed skipped";
        } catch (const Error& e) {
            r.passed = false;
            r.detail = e.what();
        }
        report.checks.push_back(std::move(r));
    }

    for (const auto policy : {FusionPolicy::lower_then_fuse, FusionPolicy::bypass}) {
        const std::string tag = policy == FusionPolicy::bypass ? "bypass" : "fused";
        CheckResult dis{"dissipation[" + tag + "]", true, -1.0, 1e-12, {}};
        CheckResult neg{"non_negativity[" + tag + "]", true, 0.0, 0.0, {}};
        try {
            const Network net = policy == FusionPolicy::bypass ? fuse_network(network, policy).network : fused;
            std::size_t negative_seeds = 0;
            for (const auto& x : probes) {
                const auto t = explain(net, x, LrpConfig{});
                dis.worst = std::max(dis.worst, dissipation_excess(t));
                if (t.seed_logit < 0.0) {
                    ++negative_seeds;
                    continue;
                }
                neg.worst = std::min(neg.worst, min_relevance(t));
            }
            dis.passed = dis.worst <= dis.tolerance;
            neg.passed = neg.worst >= 0.0;
            if (negative_seeds) neg.detail = std::to_string(negative_seeds) + " probes with negative seed skipped";
        } catch (const Error& e) {
            dis.passed = neg.passed = false;
            dis.detail = neg.detail = e.what();
        }
        report.checks.push_back(std::move(dis));
        report.checks.push_back(std::move(neg));
    }
    return report;
}

CheckResult verify_manifest(const Network& network, const std::filesystem::path& manifest) {
    CheckResult r{"manifest_logits", true, 0.0, tolerance::manifest_logits, {}};
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(manifest));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCategory::parse, manifest.string() + ": " + e.what());
    }
    if (!doc.contains("samples") || !doc["samples"].is_array())
        fail(ErrorCategory::schema, manifest.string() + ": missing \"samples\" array");
    std::size_t n = 0;
    for (const auto& s : doc["samples"]) {
        if (!s.contains("input") || !s.contains("logits"))
            fail(ErrorCategory::schema, manifest.string() + ": sample without input or logits");
        const auto image = normalize_pixels(read_image(manifest.parent_path() / s["input"].get<std::string>()));
        const auto logits = forward(network, image).logits;
        const auto expected = s["logits"].get<std::vector<double>>();
        if (expected.size() != logits.size())
            fail(ErrorCategory::schema, manifest.string() + ": logit count mismatch");
        for (std::size_t i = 0; i < expected.size(); ++i)
            r.worst = std::max(r.worst, std::abs(expected[i] - logits[i]));
        ++n;
    }
    r.passed = r.worst <= r.tolerance;
    r.detail = std::to_string(n) + " samples";
    return r;
}

}  // namespace lrp
