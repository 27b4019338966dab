#pragma once

// Raw compute kernels behind the tensor-level API. Each kernel exists twice:
// `serial` is the straightforward reference kept for testing, `parallel` is the
// OpenMP version used by the library. Parallel kernels assign every output
// element to exactly one thread and accumulate it in a fixed order, so results
// do not depend on the thread count.

#include "lrp/tensor.hpp"

#include <cstddef>
#include <span>

namespace lrp::kernels {

struct ConvGeometry {
    std::size_t in_channels = 0, in_height = 0, in_width = 0;
    std::size_t out_channels = 0, out_height = 0, out_width = 0;
    std::size_t kernel_height = 0, kernel_width = 0;
    std::size_t stride = 1, padding = 0;

    std::size_t input_size() const { return in_channels * in_height * in_width; }
    std::size_t output_size() const { return out_channels * out_height * out_width; }
    std::size_t kernel_size() const { return out_channels * in_channels * kernel_height * kernel_width; }
};

/// Output extent of a sliding window; throws a geometry error unless the
/// division is exact and the result is >= 1.
std::size_t window_extent(std::size_t in, std::size_t window, std::size_t stride, std::size_t padding);

/// Validates kernel [oc,ic,kh,kw] against input [ic,h,w].
ConvGeometry conv_geometry(const Shape& kernel, const Shape& input, std::size_t stride, std::size_t padding);

namespace serial {

// y[j] = sum_i w[j,i] x[i] (+ bias[j] when bias is non-empty)
void dense_forward(std::span<const double> w, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y);
// g[i] = sum_j w[j,i] s[j]
void dense_transpose(std::span<const double> w, std::span<const double> s, std::span<double> g);

void conv_forward(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> bias,
                  std::span<const double> x, std::span<double> y);
// Adjoint of conv_forward without bias: scatters s through the kernel taps.
void conv_transpose(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> s,
                    std::span<double> g);

}  // namespace serial

namespace parallel {

void dense_forward(std::span<const double> w, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y);
void dense_transpose(std::span<const double> w, std::span<const double> s, std::span<double> g);
void conv_forward(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> bias,
                  std::span<const double> x, std::span<double> y);
// Gather formulation of the adjoint: each input element collects its taps.
void conv_transpose(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> s,
                    std::span<double> g);

}  // namespace parallel

}  // namespace lrp::kernels
