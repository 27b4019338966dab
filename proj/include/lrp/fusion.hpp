#pragma once

// Folding inference-time batch normalization into the neighbouring dense or
// convolutional layer, and rewriting convolutions as equivalent dense layers.
// Every rewrite preserves the forward function up to floating-point rounding.

#include "lrp/network.hpp"

#include <string>
#include <vector>

namespace lrp {

/// BN feeding a dense layer: dense(bn(x)). `bn` has one entry per dense input.
Dense fuse_bn_dense_pre(const BnParams& bn, const Dense& dense);

/// BN applied to a dense layer's output: bn(dense(x)). One entry per output.
Dense fuse_bn_dense_post(const Dense& dense, const BnParams& bn);

/// BN applied to a convolution's output channels: bn(conv(x)).
Conv2D fuse_bn_conv_post(const Conv2D& conv, const BnParams& bn);

/// BN feeding a convolution: conv(bn(x)). Only exact without padding, since
/// padded zeros are never shifted by the normalization; padding > 0 throws
/// unsupported_fusion (lower the convolution first instead).
Conv2D fuse_bn_conv_pre(const BnParams& bn, const Conv2D& conv);

/// Dense layer computing the same map as `conv` on inputs of `input_shape`.
/// Rows follow the channel-major flatten order of the output, columns that of
/// the input; taps landing in the zero padding are dropped. The result keeps
/// the convolution's [oc,h',w'] output shape.
Dense lower_conv_to_dense(const Conv2D& conv, const Shape& input_shape);

enum class FusionPolicy { fuse, lower_then_fuse, bypass };
enum class FusionRule { dense_pre, dense_post, conv_pre, conv_post, lowered };

std::string policy_name(FusionPolicy policy);
FusionPolicy parse_policy(const std::string& name);
std::string rule_name(FusionRule rule);

struct FusionRecord {
    std::vector<std::size_t> layer_indices_consumed;  // indices in the input network
    FusionRule rule;
    bool exact = true;
    std::string note;
};

struct UnfusedBn {
    std::size_t layer_index;
    std::string reason;
};

struct FusionReport {
    FusionPolicy policy = FusionPolicy::fuse;
    std::vector<FusionRecord> records;
    std::vector<UnfusedBn> unfused;

    std::string to_json() const;
};

struct FusionResult {
    Network network;
    FusionReport report;
};

// Folds every BN of `network` according to `policy`. A BN is folded into the
// side named by its placement tag (after_activation, or no tag: the following
// layer; before_activation: the preceding layer) and falls back to the other
// side. BNs with no fusable neighbour stay in the network marked as bypass and
// are listed in the report's unfused residue. Under `bypass` no BN is removed;
// all are marked. Throws an invariant error if the fused network's logits drift
// by more than 1e-6 (relative) from the original on internal probe inputs.
FusionResult fuse_network(const Network& network, FusionPolicy policy);

}  // namespace lrp
