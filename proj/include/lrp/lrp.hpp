#pragma once

// Layer-wise relevance propagation. Hidden dense/conv layers use the z+ rule
//   R_i = sum_j x_i w+_ij / (sum_k x_k w+_kj) * R_j
// and the first dense/conv layer, whose inputs lie in [low, high], uses the
// box (zB) rule
//   R_i = sum_j (x_i w_ij - low w+_ij - high w-_ij) / (sum_k ...) * R_j.

#include "lrp/network.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrp {

enum class BiasPolicy { require_nonpositive, absorb_in_denominator };
enum class PoolRule { winner_take_all, proportional };

std::string bias_policy_name(BiasPolicy policy);
BiasPolicy parse_bias_policy(const std::string& name);
std::string pool_rule_name(PoolRule rule);
PoolRule parse_pool_rule(const std::string& name);

struct LrpConfig {
    // absorb_in_denominator adds max(b_j, 0) to every denominator;
    // require_nonpositive rejects layers with a positive bias.
    BiasPolicy bias_policy = BiasPolicy::absorb_in_denominator;
    PoolRule pool_rule = PoolRule::winner_take_all;
    // Added to every denominator (they are never negative under z+ / zB).
    double epsilon = 1e-9;
    std::optional<std::size_t> seed_class;  // argmax of the logits when empty

    void validate(std::size_t class_count) const;
};

// Accumulated while propagating; columns whose denominator is exactly zero
// (only possible with epsilon == 0) pass no relevance on.
struct LrpDiagnostics {
    double dropped_relevance = 0.0;
    std::size_t zero_denominators = 0;
    std::size_t uniform_windows = 0;
};

Tensor lrp_dense_zplus(const Tensor& x_in, const Dense& dense, const Tensor& r_out, const LrpConfig& cfg,
                       LrpDiagnostics* diag = nullptr);
Tensor lrp_dense_zb(const Tensor& x_in, const Dense& dense, double low, double high, const Tensor& r_out,
                    const LrpConfig& cfg, LrpDiagnostics* diag = nullptr);
Tensor lrp_conv_zplus(const Tensor& x_in, const Conv2D& conv, const Tensor& r_out, const LrpConfig& cfg,
                      LrpDiagnostics* diag = nullptr);
Tensor lrp_conv_zb(const Tensor& x_in, const Conv2D& conv, double low, double high, const Tensor& r_out,
                   const LrpConfig& cfg, LrpDiagnostics* diag = nullptr);

Tensor lrp_maxpool(const Tensor& x_in, const MaxPool& pool, std::span<const std::size_t> argmax, const Tensor& r_out,
                   const LrpConfig& cfg, LrpDiagnostics* diag = nullptr);
Tensor lrp_avgpool(const Tensor& x_in, const AvgPool& pool, const Tensor& r_out, LrpDiagnostics* diag = nullptr);
Tensor lrp_relu(const Tensor& r_out);
Tensor lrp_flatten(const Tensor& r_out, const Shape& input_shape);

struct RelevanceTrace {
    // relevance[k] has the shape of activation k: relevance.front() is the
    // input heat-map, relevance.back() the seeded logits.
    std::vector<Tensor> relevance;
    std::vector<double> sums;
    std::size_t class_index = 0;
    double seed_logit = 0.0;
    Tensor logits;
    LrpDiagnostics diagnostics;
    std::vector<std::string> warnings;
};

/// Seeds the chosen logit (pre-softmax) and propagates it back to the input.
/// Batch-norm layers must have been fused away or marked bypass; a bypassed BN
/// is transparent to relevance, and the layer after it sees the activation
/// that entered the BN.
RelevanceTrace explain(const Network& network, const Tensor& input, const LrpConfig& cfg = {});

/// Same as explain() with an explicit output relevance instead of the seeded
/// logit; `forward_pass` must come from forward(network, input).
RelevanceTrace propagate(const Network& network, const ForwardResult& forward_pass, const Tensor& output_relevance,
                         const LrpConfig& cfg);

}  // namespace lrp
