#include "lrp/kernels.hpp"

namespace lrp::kernels::parallel {

void dense_forward(std::span<const double> w, std::span<const double> bias, std::span<const double> x,
                   std::span<double> y) {
    const auto in = static_cast<long>(x.size());
    const auto out = static_cast<long>(y.size());
#pragma omp parallel for schedule(static)
    for (long j = 0; j < out; ++j) {
        const double* row = w.data() + j * in;
        double acc = 0.0;
        for (long i = 0; i < in; ++i) acc += row[i] * x[i];
        y[j] = bias.empty() ? acc : acc + bias[j];
    }
}

void dense_transpose(std::span<const double> w, std::span<const double> s, std::span<double> g) {
    const auto in = static_cast<long>(g.size());
    const auto out = static_cast<long>(s.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < in; ++i) {
        double acc = 0.0;
        for (long j = 0; j < out; ++j) acc += w[j * in + i] * s[j];
        g[i] = acc;
    }
}

void conv_forward(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> bias,
                  std::span<const double> x, std::span<double> y) {
    const long OC = static_cast<long>(geo.out_channels), OH = static_cast<long>(geo.out_height),
               OW = static_cast<long>(geo.out_width);
    const long IC = static_cast<long>(geo.in_channels), H = static_cast<long>(geo.in_height),
               W = static_cast<long>(geo.in_width);
    const long KH = static_cast<long>(geo.kernel_height), KW = static_cast<long>(geo.kernel_width);
    const long pad = static_cast<long>(geo.padding), stride = static_cast<long>(geo.stride);
#pragma omp parallel for collapse(2) schedule(static)
    for (long oc = 0; oc < OC; ++oc) {
        for (long oy = 0; oy < OH; ++oy) {
            for (long ox = 0; ox < OW; ++ox) {
                double acc = 0.0;
                for (long ic = 0; ic < IC; ++ic) {
                    const double* k = kernel.data() + (oc * IC + ic) * KH * KW;
                    const double* plane = x.data() + ic * H * W;
                    for (long ky = 0; ky < KH; ++ky) {
                        const long iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= H) continue;
                        for (long kx = 0; kx < KW; ++kx) {
                            const long ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= W) continue;
                            acc += k[ky * KW + kx] * plane[iy * W + ix];
                        }
                    }
                }
                y[(oc * OH + oy) * OW + ox] = bias.empty() ? acc : acc + bias[oc];
            }
        }
    }
}

void conv_transpose(const ConvGeometry& geo, std::span<const double> kernel, std::span<const double> s,
                    std::span<double> g) {
    const long OC = static_cast<long>(geo.out_channels), OH = static_cast<long>(geo.out_height),
               OW = static_cast<long>(geo.out_width);
    const long IC = static_cast<long>(geo.in_channels), H = static_cast<long>(geo.in_height),
               W = static_cast<long>(geo.in_width);
    const long KH = static_cast<long>(geo.kernel_height), KW = static_cast<long>(geo.kernel_width);
    const long pad = static_cast<long>(geo.padding), stride = static_cast<long>(geo.stride);
#pragma omp parallel for collapse(2) schedule(static)
    for (long ic = 0; ic < IC; ++ic) {
        for (long iy = 0; iy < H; ++iy) {
            for (long ix = 0; ix < W; ++ix) {
                double acc = 0.0;
                for (long oc = 0; oc < OC; ++oc) {
                    const double* k = kernel.data() + (oc * IC + ic) * KH * KW;
                    const double* plane = s.data() + oc * OH * OW;
                    for (long ky = 0; ky < KH; ++ky) {
                        const long ny = iy + pad - ky;
                        if (ny < 0 || ny % stride != 0) continue;
                        const long oy = ny / stride;
                        if (oy >= OH) continue;
                        for (long kx = 0; kx < KW; ++kx) {
                            const long nx = ix + pad - kx;
                            if (nx < 0 || nx % stride != 0) continue;
                            const long ox = nx / stride;
                            if (ox >= OW) continue;
                            acc += k[ky * KW + kx] * plane[oy * OW + ox];
                        }
                    }
                }
                g[(ic * H + iy) * W + ix] = acc;
            }
        }
    }
}

}  // namespace lrp::kernels::parallel
