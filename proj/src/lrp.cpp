#include "lrp/lrp.hpp"

#include "lrp/error.hpp"
#include "lrp/kernels.hpp"
#include "overloaded.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace lrp {

std::string bias_policy_name(BiasPolicy policy) {
    return policy == BiasPolicy::require_nonpositive ? "require_nonpositive" : "absorb_in_denominator";
}

BiasPolicy parse_bias_policy(const std::string& name) {
    if (name == "require_nonpositive") return BiasPolicy::require_nonpositive;
    if (name == "absorb_in_denominator") return BiasPolicy::absorb_in_denominator;
    fail(ErrorCategory::usage, "unknown bias policy \"" + name + "\"");
}

std::string pool_rule_name(PoolRule rule) {
    return rule == PoolRule::winner_take_all ? "winner_take_all" : "proportional";
}

PoolRule parse_pool_rule(const std::string& name) {
    if (name == "winner_take_all") return PoolRule::winner_take_all;
    if (name == "proportional") return PoolRule::proportional;
    fail(ErrorCategory::usage, "unknown pool rule \"" + name + "\"");
}

void LrpConfig::validate(std::size_t class_count) const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        fail(ErrorCategory::value, "stabilizer epsilon must be finite and >= 0");
    if (seed_class && *seed_class >= class_count)
        fail(ErrorCategory::value, "seed class " + std::to_string(*seed_class) + " is out of range for " +
                                       std::to_string(class_count) + " classes");
}

namespace {

// Linear map y = W x without bias, and its adjoint g = W^T s, over raw spans.
struct LinearMap {
    std::size_t in_size, out_size;
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> apply;
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> adjoint;
    std::vector<double> bias;  // one entry per output
};

LinearMap dense_map(const Dense& d) {
    LinearMap m;
    m.in_size = d.inputs();
    m.out_size = d.outputs();
    m.apply = [](auto w, auto x, auto y) { kernels::parallel::dense_forward(w, {}, x, y); };
    m.adjoint = [](auto w, auto s, auto g) { kernels::parallel::dense_transpose(w, s, g); };
    m.bias = d.bias.values();
    return m;
}

LinearMap conv_map(const Conv2D& c, const Shape& input_shape) {
    const auto geo = kernels::conv_geometry(c.kernel.shape(), input_shape, c.stride, c.padding);
    LinearMap m;
    m.in_size = geo.input_size();
    m.out_size = geo.output_size();
    m.apply = [geo](auto w, auto x, auto y) { kernels::parallel::conv_forward(geo, w, {}, x, y); };
    m.adjoint = [geo](auto w, auto s, auto g) { kernels::parallel::conv_transpose(geo, w, s, g); };
    const std::size_t plane = geo.out_height * geo.out_width;
    m.bias.resize(m.out_size);
    for (std::size_t j = 0; j < m.out_size; ++j) m.bias[j] = c.bias[j / plane];
    return m;
}

std::vector<double> positive_part(std::span<const double> w) {
    std::vector<double> out(w.size());
    std::transform(w.begin(), w.end(), out.begin(), [](double v) { return std::max(v, 0.0); });
    return out;
}

std::vector<double> negative_part(std::span<const double> w) {
    std::vector<double> out(w.size());
    std::transform(w.begin(), w.end(), out.begin(), [](double v) { return std::min(v, 0.0); });
    return out;
}

void check_relevance_shape(const LinearMap& m, const Tensor& x_in, const Tensor& r_out) {
    if (x_in.size() != m.in_size)
        fail(ErrorCategory::dimension, "input activation " + shape_to_string(x_in.shape()) + " does not fit the layer");
    if (r_out.size() != m.out_size)
        fail(ErrorCategory::dimension, "output relevance " + shape_to_string(r_out.shape()) + " does not fit the layer");
}

void check_bias_policy(const LinearMap& m, const LrpConfig& cfg) {
    if (cfg.bias_policy != BiasPolicy::require_nonpositive) return;
    for (std::size_t j = 0; j < m.bias.size(); ++j)
        if (m.bias[j] > 0.0)
            fail(ErrorCategory::policy, "bias of output " + std::to_string(j) +
                                            " is positive and the bias policy requires biases <= 0");
}

// S_j = R_j / (D_j + max(b_j,0) + eps); D is overwritten with S.
void divide_by_denominators(std::vector<double>& denom, const LinearMap& m, const Tensor& r_out, const LrpConfig& cfg,
                            LrpDiagnostics* diag) {
    const bool absorb = cfg.bias_policy == BiasPolicy::absorb_in_denominator;
    for (std::size_t j = 0; j < denom.size(); ++j) {
        double d = denom[j];
        if (absorb) d += std::max(m.bias[j], 0.0);
        d += cfg.epsilon;
        if (d == 0.0) {
            if (diag && r_out[j] != 0.0) {
                diag->dropped_relevance += r_out[j];
                ++diag->zero_denominators;
            }
            denom[j] = 0.0;
        } else {
            denom[j] = r_out[j] / d;
        }
    }
}

Tensor zplus(const Tensor& x_in, std::span<const double> weights, const LinearMap& m, const Tensor& r_out,
             const LrpConfig& cfg, LrpDiagnostics* diag) {
    check_relevance_shape(m, x_in, r_out);
    check_bias_policy(m, cfg);
    for (std::size_t i = 0; i < x_in.size(); ++i)
        if (x_in[i] < 0.0)
            fail(ErrorCategory::precondition, "z+ rule needs non-negative inputs, found " + std::to_string(x_in[i]) +
                                                  " at flat index " + std::to_string(i));
    const auto wp = positive_part(weights);
    std::vector<double> s(m.out_size);
    m.apply(wp, x_in.data(), s);
    divide_by_denominators(s, m, r_out, cfg, diag);
    Tensor r_in = Tensor::zeros(x_in.shape());
    auto out = r_in.data();
    m.adjoint(wp, s, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= x_in[i];
    r_in.require_finite("relevance");
    return r_in;
}

Tensor zbox(const Tensor& x_in, std::span<const double> weights, const LinearMap& m, double low, double high,
            const Tensor& r_out, const LrpConfig& cfg, LrpDiagnostics* diag) {
    check_relevance_shape(m, x_in, r_out);
    check_bias_policy(m, cfg);
    if (!(low <= high)) fail(ErrorCategory::value, "input bounds must satisfy low <= high");
    // x w - l w+ - h w- == (x - l) w+ + (x - h) w-, a sum of non-negative terms.
    std::vector<double> from_low(x_in.size()), from_high(x_in.size());
    for (std::size_t i = 0; i < x_in.size(); ++i) {
        if (x_in[i] < low || x_in[i] > high)
            fail(ErrorCategory::precondition, "zB rule input " + std::to_string(x_in[i]) + " at flat index " +
                                                  std::to_string(i) + " lies outside [" + std::to_string(low) + ", " +
                                                  std::to_string(high) + "]");
        from_low[i] = x_in[i] - low;
        from_high[i] = x_in[i] - high;
    }
    const auto wp = positive_part(weights);
    const auto wn = negative_part(weights);
    std::vector<double> s(m.out_size), tmp(m.out_size);
    m.apply(wp, from_low, s);
    m.apply(wn, from_high, tmp);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] += tmp[j];
    divide_by_denominators(s, m, r_out, cfg, diag);

    Tensor r_in = Tensor::zeros(x_in.shape());
    std::vector<double> gp(x_in.size()), gn(x_in.size());
    m.adjoint(wp, s, gp);
    m.adjoint(wn, s, gn);
    auto out = r_in.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_low[i] * gp[i] + from_high[i] * gn[i];
    r_in.require_finite("relevance");
    return r_in;
}

}  // namespace

Tensor lrp_dense_zplus(const Tensor& x_in, const Dense& dense, const Tensor& r_out, const LrpConfig& cfg,
                       LrpDiagnostics* diag) {
    return zplus(x_in, dense.weights.data(), dense_map(dense), r_out, cfg, diag);
}

Tensor lrp_dense_zb(const Tensor& x_in, const Dense& dense, double low, double high, const Tensor& r_out,
                    const LrpConfig& cfg, LrpDiagnostics* diag) {
    return zbox(x_in, dense.weights.data(), dense_map(dense), low, high, r_out, cfg, diag);
}

Tensor lrp_conv_zplus(const Tensor& x_in, const Conv2D& conv, const Tensor& r_out, const LrpConfig& cfg,
                      LrpDiagnostics* diag) {
    return zplus(x_in, conv.kernel.data(), conv_map(conv, x_in.shape()), r_out, cfg, diag);
}

Tensor lrp_conv_zb(const Tensor& x_in, const Conv2D& conv, double low, double high, const Tensor& r_out,
                   const LrpConfig& cfg, LrpDiagnostics* diag) {
    return zbox(x_in, conv.kernel.data(), conv_map(conv, x_in.shape()), low, high, r_out, cfg, diag);
}

namespace {

// Splits every window's relevance over its inputs in proportion to their
// values; windows summing to zero are split uniformly.
Tensor proportional_pool(const Tensor& x_in, std::size_t window, std::size_t stride, const Tensor& r_out,
                         LrpDiagnostics* diag) {
    if (x_in.rank() != 3 || r_out.rank() != 3 || r_out.extent(0) != x_in.extent(0))
        fail(ErrorCategory::dimension, "pool relevance " + shape_to_string(r_out.shape()) + " does not match input " +
                                           shape_to_string(x_in.shape()));
    const std::size_t C = x_in.extent(0), H = x_in.extent(1), W = x_in.extent(2);
    const std::size_t OH = r_out.extent(1), OW = r_out.extent(2);
    if (kernels::window_extent(H, window, stride, 0) != OH || kernels::window_extent(W, window, stride, 0) != OW)
        fail(ErrorCategory::dimension, "pool relevance " + shape_to_string(r_out.shape()) +
                                           " does not match the window geometry");
    Tensor r_in = Tensor::zeros(x_in.shape());
    const double cells = static_cast<double>(window * window);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const double r = r_out.at(c, oy, ox);
                double total = 0.0;
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) total += x_in.at(c, oy * stride + ky, ox * stride + kx);
                if (total == 0.0 && diag) ++diag->uniform_windows;
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        const double x = x_in.at(c, oy * stride + ky, ox * stride + kx);
                        r_in.at(c, oy * stride + ky, ox * stride + kx) += total == 0.0 ? r / cells : x / total * r;
                    }
            }
    return r_in;
}

}  // namespace

Tensor lrp_maxpool(const Tensor& x_in, const MaxPool& pool, std::span<const std::size_t> argmax, const Tensor& r_out,
                   const LrpConfig& cfg, LrpDiagnostics* diag) {
    if (cfg.pool_rule == PoolRule::proportional) return proportional_pool(x_in, pool.window, pool.stride, r_out, diag);
    if (argmax.size() != r_out.size())
        fail(ErrorCategory::dimension, "max-pool relevance " + shape_to_string(r_out.shape()) + " has " +
                                           std::to_string(r_out.size()) + " cells but " +
                                           std::to_string(argmax.size()) + " winners were recorded");
    Tensor r_in = Tensor::zeros(x_in.shape());
    for (std::size_t o = 0; o < argmax.size(); ++o) {
        if (argmax[o] >= r_in.size()) fail(ErrorCategory::dimension, "max-pool winner index out of range");
        r_in[argmax[o]] += r_out[o];
    }
    return r_in;
}

Tensor lrp_avgpool(const Tensor& x_in, const AvgPool& pool, const Tensor& r_out, LrpDiagnostics* diag) {
    return proportional_pool(x_in, pool.window, pool.stride, r_out, diag);
}

Tensor lrp_relu(const Tensor& r_out) { return r_out; }

Tensor lrp_flatten(const Tensor& r_out, const Shape& input_shape) { return r_out.reshaped(input_shape); }

RelevanceTrace propagate(const Network& network, const ForwardResult& fw, const Tensor& output_relevance,
                         const LrpConfig& cfg) {
    const auto& layers = network.layers();
    if (fw.activations.size() != layers.size() + 1)
        fail(ErrorCategory::dimension, "forward pass does not belong to this network");
    if (output_relevance.shape() != fw.activations.back().shape())
        fail(ErrorCategory::dimension, "output relevance " + shape_to_string(output_relevance.shape()) +
                                           " does not match logits " + shape_to_string(fw.activations.back().shape()));
    RelevanceTrace trace;
    trace.logits = fw.logits;
    trace.relevance.resize(layers.size() + 1);
    trace.relevance.back() = output_relevance;

    std::size_t first_linear = layers.size();
    for (std::size_t k = 0; k < layers.size(); ++k)
        if (std::holds_alternative<Dense>(layers[k]) || std::holds_alternative<Conv2D>(layers[k])) {
            first_linear = k;
            break;
        }

    auto bypassed = [&](std::size_t k) {
        const auto* bn = std::get_if<BatchNorm>(&layers[k]);
        return bn && bn->bypass;
    };

    for (std::size_t k = 0; k < layers.size(); ++k)
        if (const auto* bn = std::get_if<BatchNorm>(&layers[k]); bn && !bn->bypass)
            fail(ErrorCategory::precondition, "layer " + std::to_string(k) +
                                                  " (batchnorm): batch-norm must be fused or marked bypass before "
                                                  "relevance propagation");

    Tensor r = output_relevance;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Tensor& x_in = fw.activations[k];
        try {
            // Behind a chain of bypassed BNs the layer sees the activation that
            // entered the chain, as if the normalization were absent.
            std::size_t src = k;
            while (src > 0 && bypassed(src - 1)) --src;
            const Tensor& x_eff = fw.activations[src];
            const double lo = network.input_low(), hi = network.input_high();
            r = std::visit(
                detail::overloaded{
                    [&](const Dense& d) {
                        Tensor out = k == first_linear ? lrp_dense_zb(x_eff, d, lo, hi, r, cfg, &trace.diagnostics)
                                                       : lrp_dense_zplus(x_eff, d, r, cfg, &trace.diagnostics);
                        return out.reshaped(x_in.shape());
                    },
                    [&](const Conv2D& c) {
                        return k == first_linear ? lrp_conv_zb(x_eff, c, lo, hi, r, cfg, &trace.diagnostics)
                                                 : lrp_conv_zplus(x_eff, c, r, cfg, &trace.diagnostics);
                    },
                    [&](const BatchNorm&) { return r; },
                    [&](const ReLU&) { return lrp_relu(r); },
                    [&](const MaxPool& p) {
                        return lrp_maxpool(x_in, p, fw.pool_argmax[k], r, cfg, &trace.diagnostics);
                    },
                    [&](const AvgPool& p) { return lrp_avgpool(x_in, p, r, &trace.diagnostics); },
                    [&](const Flatten&) { return lrp_flatten(r, x_in.shape()); },
                },
                layers[k]);
        } catch (const Error& e) {
            fail(e.category(), "layer " + std::to_string(k) + " (" + layer_kind(layers[k]) + "): " + e.what());
        }
        trace.relevance[k] = r;
    }
    trace.sums.reserve(trace.relevance.size());
    for (const auto& t : trace.relevance) trace.sums.push_back(t.sum());
    if (trace.diagnostics.zero_denominators)
        trace.warnings.push_back(std::to_string(trace.diagnostics.zero_denominators) +
                                 " zero denominators dropped relevance " +
                                 std::to_string(trace.diagnostics.dropped_relevance));
    if (trace.diagnostics.uniform_windows)
        trace.warnings.push_back(std::to_string(trace.diagnostics.uniform_windows) +
                                 " pooling windows summed to zero and were split uniformly");
    return trace;
}

RelevanceTrace explain(const Network& network, const Tensor& input, const LrpConfig& cfg) {
    cfg.validate(network.class_count());
    const auto fw = forward(network, input);
    const auto& logits = fw.logits;
    const std::size_t cls =
        cfg.seed_class ? *cfg.seed_class
                       : static_cast<std::size_t>(std::max_element(logits.data().begin(), logits.data().end()) -
                                                  logits.data().begin());
    Tensor seed = Tensor::zeros(logits.shape());
    seed[cls] = logits[cls];
    auto trace = propagate(network, fw, seed, cfg);
    trace.class_index = cls;
    trace.seed_logit = logits[cls];
    if (trace.seed_logit < 0.0)
        trace.warnings.insert(trace.warnings.begin(), "seed logit " + std::to_string(trace.seed_logit) +
                                                          " is negative; relevance values are negative");
    return trace;
}

}  // namespace lrp
