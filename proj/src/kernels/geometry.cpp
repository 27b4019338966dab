#include "lrp/error.hpp"
#include "lrp/kernels.hpp"

namespace lrp::kernels {

std::size_t window_extent(std::size_t in, std::size_t window, std::size_t stride, std::size_t padding) {
    if (stride == 0) fail(ErrorCategory::geometry, "stride must be >= 1");
    if (window == 0) fail(ErrorCategory::geometry, "window extent must be >= 1");
    const std::size_t padded = in + 2 * padding;
    if (padded < window)
        fail(ErrorCategory::geometry, "window " + std::to_string(window) + " exceeds padded extent " +
                                          std::to_string(padded));
    if ((padded - window) % stride != 0)
        fail(ErrorCategory::geometry, "extent " + std::to_string(in) + " with padding " + std::to_string(padding) +
                                          ", window " + std::to_string(window) + " and stride " +
                                          std::to_string(stride) + " does not divide exactly");
    return (padded - window) / stride + 1;
}

ConvGeometry conv_geometry(const Shape& kernel, const Shape& input, std::size_t stride, std::size_t padding) {
    if (kernel.size() != 4)
        fail(ErrorCategory::dimension, "conv kernel must be rank 4, got " + shape_to_string(kernel));
    if (input.size() != 3)
        fail(ErrorCategory::dimension, "conv input must be rank 3 [c,h,w], got " + shape_to_string(input));
    if (kernel[1] != input[0])
        fail(ErrorCategory::dimension, "conv kernel " + shape_to_string(kernel) + " expects " +
                                           std::to_string(kernel[1]) + " input channels, input is " +
                                           shape_to_string(input));
    ConvGeometry g;
    g.in_channels = input[0];
    g.in_height = input[1];
    g.in_width = input[2];
    g.out_channels = kernel[0];
    g.kernel_height = kernel[2];
    g.kernel_width = kernel[3];
    g.stride = stride;
    g.padding = padding;
    g.out_height = window_extent(g.in_height, g.kernel_height, stride, padding);
    g.out_width = window_extent(g.in_width, g.kernel_width, stride, padding);
    return g;
}

}  // namespace lrp::kernels
