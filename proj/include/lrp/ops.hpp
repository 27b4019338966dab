#pragma once

// Forward kernels on whole tensors. All functions are pure; they validate
// shapes and throw lrp::Error (dimension or geometry) on mismatch.

#include "lrp/tensor.hpp"

#include <cstddef>
#include <vector>

namespace lrp {

/// out[j] = sum_i w[j,i] x[i] + b[j]. `input` may have any shape whose element
/// count equals the weight column count; it is read in row-major order.
Tensor dense_forward(const Tensor& weights, const Tensor& bias, const Tensor& input);

/// Zero-padded cross-correlation of [ic,h,w] with [oc,ic,kh,kw] plus a bias per
/// output channel.
Tensor conv2d_forward(const Tensor& kernel, const Tensor& bias, const Tensor& input, std::size_t stride,
                      std::size_t padding);

/// gamma (x - mu) / sigma + beta. Parameters are matched to the leading
/// (channel) axis when their length equals it, otherwise to every element.
Tensor batchnorm_forward(const BnParams& params, const Tensor& input);

Tensor relu(const Tensor& input);

struct PoolResult {
    Tensor output;
    // Flat input index of the winning element for every output cell.
    std::vector<std::size_t> argmax;
};

PoolResult maxpool(const Tensor& input, std::size_t window, std::size_t stride);
Tensor avgpool(const Tensor& input, std::size_t window, std::size_t stride);
Tensor flatten(const Tensor& input);

/// Per-element view of `params` for a tensor of shape `shape`; throws a
/// dimension error when neither channel-wise nor element-wise matching applies.
BnParams batchnorm_per_element(const BnParams& params, const Shape& shape);

}  // namespace lrp
