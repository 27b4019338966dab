#include "lrp/kernels.hpp"

#include <algorithm>

namespace lrp::kernels::serial {

void dense_forward(std::span<const double> w, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y) {
    const std::size_t in = x.size();
    for (std::size_t j = 0; j < y.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < in; ++i) acc += w[j * in + i] * x[i];
        y[j] = bias.empty() ? acc : acc + bias[j];
    }
}

void dense_transpose(std::span<const double> w, std::span<const double> s, std::span<double> g) {
    const std::size_t in = g.size();
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t j = 0; j < s.size(); ++j)
        for (std::size_t i = 0; i < in; ++i) g[i] += w[j * in + i] * s[j];
}

void conv_forward(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> bias,
                  std::span<const double> x, std::span<double> y) {
    const auto H = static_cast<long>(geo.in_height);
    const auto W = static_cast<long>(geo.in_width);
    const auto pad = static_cast<long>(geo.padding);
    const auto stride = static_cast<long>(geo.stride);
    for (std::size_t oc = 0; oc < geo.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < geo.out_height; ++oy) {
            for (std::size_t ox = 0; ox < geo.out_width; ++ox) {
                double acc = 0.0;
                for (std::size_t ic = 0; ic < geo.in_channels; ++ic) {
                    for (std::size_t ky = 0; ky < geo.kernel_height; ++ky) {
                        const long iy = static_cast<long>(oy) * stride + static_cast<long>(ky) - pad;
                        if (iy < 0 || iy >= H) continue;
                        for (std::size_t kx = 0; kx < geo.kernel_width; ++kx) {
                            const long ix = static_cast<long>(ox) * stride + static_cast<long>(kx) - pad;
                            if (ix < 0 || ix >= W) continue;
                            acc += kernel[((oc * geo.in_channels + ic) * geo.kernel_height + ky) * geo.kernel_width + kx] *
                                   x[(ic * geo.in_height + static_cast<std::size_t>(iy)) * geo.in_width +
                                     static_cast<std::size_t>(ix)];
                        }
                    }
                }
                y[(oc * geo.out_height + oy) * geo.out_width + ox] = bias.empty() ? acc : acc + bias[oc];
            }
        }
    }
}

void conv_transpose(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> s,
                    std::span<double> g) {
    const auto H = static_cast<long>(geo.in_height);
    const auto W = static_cast<long>(geo.in_width);
    const auto pad = static_cast<long>(geo.padding);
    const auto stride = static_cast<long>(geo.stride);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t oc = 0; oc < geo.out_channels; ++oc) {
        for (std::size_t oy = 0; oy < geo.out_height; ++oy) {
            for (std::size_t ox = 0; ox < geo.out_width; ++ox) {
                const double sv = s[(oc * geo.out_height + oy) * geo.out_width + ox];
                if (sv == 0.0) continue;
                for (std::size_t ic = 0; ic < geo.in_channels; ++ic) {
                    for (std::size_t ky = 0; ky < geo.kernel_height; ++ky) {
                        const long iy = static_cast<long>(oy) * stride + static_cast<long>(ky) - pad;
                        if (iy < 0 || iy >= H) continue;
                        for (std::size_t kx = 0; kx < geo.kernel_width; ++kx) {
                            const long ix = static_cast<long>(ox) * stride + static_cast<long>(kx) - pad;
                            if (ix < 0 || ix >= W) continue;
                            g[(ic * geo.in_height + static_cast<std::size_t>(iy)) * geo.in_width +
                              static_cast<std::size_t>(ix)] +=
                                kernel[((oc * geo.in_channels + ic) * geo.kernel_height + ky) * geo.kernel_width + kx] * sv;
                        }
                    }
                }
            }
        }
    }
}

}  // namespace lrp::kernels::serial
