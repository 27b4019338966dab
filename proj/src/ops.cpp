#include "lrp/ops.hpp"

#include "lrp/error.hpp"
#include "lrp/kernels.hpp"

#include <algorithm>

namespace lrp {

Tensor dense_forward(const Tensor& weights, const Tensor& bias, const Tensor& input) {
    if (weights.rank() != 2)
        fail(ErrorCategory::dimension, "dense weights must be rank 2, got " + shape_to_string(weights.shape()));
    const std::size_t out = weights.extent(0), in = weights.extent(1);
    if (input.size() != in)
        fail(ErrorCategory::dimension, "dense weights " + shape_to_string(weights.shape()) +
                                           " do not accept input " + shape_to_string(input.shape()));
    if (bias.rank() != 1 || bias.size() != out)
        fail(ErrorCategory::dimension, "dense bias " + shape_to_string(bias.shape()) + " does not match weights " +
                                           shape_to_string(weights.shape()));
    Tensor y = Tensor::zeros({out});
    kernels::parallel::dense_forward(weights.data(), bias.data(), input.data(), y.data());
    y.require_finite("dense output");
    return y;
}

Tensor conv2d_forward(const Tensor& kernel, const Tensor& bias, const Tensor& input, std::size_t stride,
                      std::size_t padding) {
    const auto geo = kernels::conv_geometry(kernel.shape(), input.shape(), stride, padding);
    if (bias.rank() != 1 || bias.size() != geo.out_channels)
        fail(ErrorCategory::dimension, "conv bias " + shape_to_string(bias.shape()) + " does not match kernel " +
                                           shape_to_string(kernel.shape()));
    Tensor y = Tensor::zeros({geo.out_channels, geo.out_height, geo.out_width});
    kernels::parallel::conv_forward(geo, kernel.data(), bias.data(), input.data(), y.data());
    y.require_finite("conv output");
    return y;
}

BnParams batchnorm_per_element(const BnParams& params, const Shape& shape) {
    const std::size_t n = shape_size(shape);
    if (params.size() == n) return params;
    if (params.size() == shape.at(0)) return params.expanded(n / shape[0]);
    fail(ErrorCategory::dimension, "batch-norm with " + std::to_string(params.size()) +
                                       " entries does not match input " + shape_to_string(shape));
}

Tensor batchnorm_forward(const BnParams& params, const Tensor& input) {
    const std::size_t n = input.size();
    std::size_t per;  // consecutive elements sharing one parameter entry
    if (params.size() == input.extent(0))
        per = n / input.extent(0);
    else if (params.size() == n)
        per = 1;
    else
        fail(ErrorCategory::dimension, "batch-norm with " + std::to_string(params.size()) +
                                           " entries does not match input " + shape_to_string(input.shape()));
    Tensor y = input;
    auto out = y.data();
    const auto& g = params.gamma();
    const auto& b = params.beta();
    const auto& m = params.mu_run();
    const auto& s = params.sigma_run();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i / per;
        out[i] = g[c] * (out[i] - m[c]) / s[c] + b[c];
    }
    y.require_finite("batch-norm output");
    return y;
}

Tensor relu(const Tensor& input) {
    Tensor y = input;
    for (double& v : y.data()) v = std::max(v, 0.0);
    return y;
}

namespace {

struct PoolGeometry {
    std::size_t channels, height, width, out_height, out_width;
};

PoolGeometry pool_geometry(const Tensor& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 3)
        fail(ErrorCategory::dimension, "pooling expects a rank-3 [c,h,w] input, got " +
                                           shape_to_string(input.shape()));
    return {input.extent(0), input.extent(1), input.extent(2),
            kernels::window_extent(input.extent(1), window, stride, 0),
            kernels::window_extent(input.extent(2), window, stride, 0)};
}

}  // namespace

PoolResult maxpool(const Tensor& input, std::size_t window, std::size_t stride) {
    const auto g = pool_geometry(input, window, stride);
    PoolResult r{Tensor::zeros({g.channels, g.out_height, g.out_width}), {}};
    r.argmax.resize(r.output.size());
    const auto x = input.data();
    auto y = r.output.data();
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t oy = 0; oy < g.out_height; ++oy)
            for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                std::size_t best = (c * g.height + oy * stride) * g.width + ox * stride;
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx) {
                        const std::size_t idx = (c * g.height + oy * stride + ky) * g.width + ox * stride + kx;
                        if (x[idx] > x[best]) best = idx;
                    }
                const std::size_t o = (c * g.out_height + oy) * g.out_width + ox;
                y[o] = x[best];
                r.argmax[o] = best;
            }
    return r;
}

Tensor avgpool(const Tensor& input, std::size_t window, std::size_t stride) {
    const auto g = pool_geometry(input, window, stride);
    Tensor out = Tensor::zeros({g.channels, g.out_height, g.out_width});
    const auto x = input.data();
    auto y = out.data();
    const double count = static_cast<double>(window * window);
    for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t oy = 0; oy < g.out_height; ++oy)
            for (std::size_t ox = 0; ox < g.out_width; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < window; ++ky)
                    for (std::size_t kx = 0; kx < window; ++kx)
                        acc += x[(c * g.height + oy * stride + ky) * g.width + ox * stride + kx];
                y[(c * g.out_height + oy) * g.out_width + ox] = acc / count;
            }
    return out;
}

Tensor flatten(const Tensor& input) { return input.reshaped({input.size()}); }

}  // namespace lrp
