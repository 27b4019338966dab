// Writes the committed fixture set: the MNIST architectures Fc1/Fc2/Fc3/Conv1/
// Conv2, the 7-conv CIFAR-10 network and small synthetic networks covering
// every layer kind and BN placement. Weights are random (untrained) and fully
// determined by the seed. Each model gets a manifest of sample images with
// reference logits computed by an independent single-precision forward pass.
//
//   make_fixtures <output-dir> [--seed N]

#include "lrp/heatmap.hpp"
#include "lrp/model_io.hpp"
#include "lrp/network.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lrp;

namespace {

class Builder {
public:
    explicit Builder(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

    // float-representable values, as a single-precision exporter would emit
    Tensor tensor(Shape shape, double bound) {
        Tensor t = Tensor::zeros(std::move(shape));
        for (double& v : t.data()) v = static_cast<float>(uniform(-bound, bound));
        return t;
    }

    Dense dense(std::size_t in, std::size_t out) {
        return Dense{tensor({out, in}, std::sqrt(6.0 / static_cast<double>(in))), tensor({out}, 0.1), {}};
    }

    Conv2D conv(std::size_t ic, std::size_t oc, std::size_t k, std::size_t padding) {
        const double fan_in = static_cast<double>(ic * k * k);
        return Conv2D{tensor({oc, ic, k, k}, std::sqrt(6.0 / fan_in)), tensor({oc}, 0.1), 1, padding};
    }

    BatchNorm bn(std::size_t n, BnPlacement placement) {
        std::vector<double> g(n), b(n), m(n), s(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = static_cast<float>(uniform(0.5, 1.5));
            b[i] = static_cast<float>(uniform(-0.2, 0.2));
            m[i] = static_cast<float>(uniform(-0.2, 0.4));
            // sqrt(var + 1e-5), the epsilon folded in
            s[i] = static_cast<float>(std::sqrt(uniform(0.25, 2.0) + 1e-5));
        }
        return BatchNorm{BnParams(g, b, m, s), placement, false};
    }

private:
    std::mt19937_64 rng_;
};

Metadata meta(const std::string& name, const std::string& description) {
    nlohmann::json extra;
    extra["description"] = description;
    extra["weights"] = "random, untrained";
    return Metadata{name, std::nullopt, extra.dump()};
}

Network fc(Builder& b, int variant) {
    const auto after = BnPlacement::after_activation, before = BnPlacement::before_activation;
    std::vector<Layer> L{Flatten{}, b.dense(784, 32)};
    if (variant == 3) L.push_back(b.bn(32, before));
    L.push_back(ReLU{});
    if (variant == 2) L.push_back(b.bn(32, after));
    L.push_back(b.dense(32, 16));
    if (variant == 3) L.push_back(b.bn(16, before));
    L.push_back(ReLU{});
    if (variant == 2) L.push_back(b.bn(16, after));
    L.push_back(b.dense(16, 10));
    static const char* desc[] = {"", "fully connected, no BN", "fully connected, BN after activation (before FC)",
                                 "fully connected, BN after FC (before activation)"};
    return Network(std::move(L), {1, 28, 28}, -1.0, 1.0, 10, meta("Fc" + std::to_string(variant), desc[variant]));
}

Network conv_mnist(Builder& b, bool with_bn) {
    const auto after = BnPlacement::after_activation;
    std::vector<Layer> L;
    auto block = [&](std::size_t ic, std::size_t oc) {
        if (with_bn) L.push_back(b.bn(ic, after));
        L.push_back(b.conv(ic, oc, 3, 0));
        L.push_back(ReLU{});
    };
    block(1, 4);    // 26
    block(4, 8);    // 24
    L.push_back(MaxPool{2, 2});  // 12
    block(8, 8);    // 10
    block(8, 8);    // 8
    L.push_back(MaxPool{2, 2});  // 4
    L.push_back(Flatten{});
    L.push_back(b.dense(8 * 4 * 4, 10));
    return Network(std::move(L), {1, 28, 28}, -1.0, 1.0, 10,
                   with_bn ? meta("Conv2", "four conv layers, BN before every conv layer")
                           : meta("Conv1", "four conv layers, no BN"));
}

Network cifar(Builder& b) {
    const auto before = BnPlacement::before_activation;
    std::vector<Layer> L;
    auto block = [&](std::size_t ic, std::size_t oc) {
        L.push_back(b.conv(ic, oc, 3, 1));
        L.push_back(b.bn(oc, before));
        L.push_back(ReLU{});
    };
    block(3, 8);
    block(8, 8);
    L.push_back(MaxPool{2, 2});  // 16
    block(8, 16);
    block(16, 16);
    L.push_back(MaxPool{2, 2});  // 8
    block(16, 16);
    block(16, 16);
    L.push_back(MaxPool{2, 2});  // 4
    block(16, 16);
    L.push_back(MaxPool{2, 2});  // 2
    L.push_back(Flatten{});
    L.push_back(b.dense(16 * 2 * 2, 10));
    return Network(std::move(L), {3, 32, 32}, -1.0, 1.0, 10,
                   meta("CIFAR", "seven conv layers each followed by BN, four max-pools, one FC"));
}

// Every layer kind and placement; the BN ahead of the padded conv only folds
// after lowering.
Network synthetic_mixed(Builder& b) {
    std::vector<Layer> L;
    L.push_back(b.conv(3, 3, 3, 1));
    L.push_back(b.bn(3, BnPlacement::before_activation));
    L.push_back(ReLU{});
    L.push_back(AvgPool{2, 2});  // 4x4
    L.push_back(b.bn(3, BnPlacement::after_activation));
    L.push_back(b.conv(3, 4, 3, 1));
    L.push_back(ReLU{});
    L.push_back(MaxPool{2, 2});  // 2x2
    L.push_back(Flatten{});
    L.push_back(b.dense(16, 5));
    L.push_back(b.bn(5, BnPlacement::before_activation));
    L.push_back(ReLU{});
    L.push_back(b.dense(5, 3));
    return Network(std::move(L), {3, 8, 8}, -1.0, 1.0, 3,
                   meta("synthetic_mixed", "all layer kinds; BN before a zero-padded conv"));
}

Network synthetic_positive_bias(Builder& b) {
    Dense d1 = b.dense(36, 12), d2 = b.dense(12, 4);
    for (double& v : d1.bias.data()) v = std::abs(v) + 0.05;
    for (double& v : d2.bias.data()) v = std::abs(v) + 0.05;
    std::vector<Layer> L{Flatten{}, d1, ReLU{}, d2};
    return Network(std::move(L), {1, 6, 6}, -1.0, 1.0, 4,
                   meta("synthetic_positive_bias", "dense layers with strictly positive biases"));
}

// ---- independent single-precision reference forward -------------------------

std::vector<float> reference_forward(const Network& net, const Tensor& input) {
    std::vector<float> x(input.data().begin(), input.data().end());
    Shape shape = net.input_shape();
    for (const auto& layer : net.layers()) {
        std::vector<float> y;
        if (const auto* d = std::get_if<Dense>(&layer)) {
            const std::size_t out = d->outputs(), in = d->inputs();
            y.assign(out, 0.0f);
            for (std::size_t j = 0; j < out; ++j) {
                float acc = static_cast<float>(d->bias[j]);
                for (std::size_t i = 0; i < in; ++i) acc += static_cast<float>(d->weights[j * in + i]) * x[i];
                y[j] = acc;
            }
        } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
            const auto& ks = c->kernel.shape();
            const long C = static_cast<long>(shape[0]), H = static_cast<long>(shape[1]), W = static_cast<long>(shape[2]);
            const long K = static_cast<long>(ks[2]), P = static_cast<long>(c->padding);
            const long OH = H + 2 * P - K + 1, OW = W + 2 * P - K + 1, OC = static_cast<long>(ks[0]);
            y.assign(static_cast<std::size_t>(OC * OH * OW), 0.0f);
            for (long o = 0; o < OC; ++o)
                for (long oy = 0; oy < OH; ++oy)
                    for (long ox = 0; ox < OW; ++ox) {
                        float acc = static_cast<float>(c->bias[static_cast<std::size_t>(o)]);
                        for (long ci = 0; ci < C; ++ci)
                            for (long ky = 0; ky < K; ++ky)
                                for (long kx = 0; kx < K; ++kx) {
                                    const long iy = oy + ky - P, ix = ox + kx - P;
                                    if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
                                    acc += static_cast<float>(c->kernel[static_cast<std::size_t>(((o * C + ci) * K + ky) * K + kx)]) *
                                           x[static_cast<std::size_t>((ci * H + iy) * W + ix)];
                                }
                        y[static_cast<std::size_t>((o * OH + oy) * OW + ox)] = acc;
                    }
        } else if (const auto* bn = std::get_if<BatchNorm>(&layer)) {
            y = x;
            const std::size_t per = y.size() / bn->params.size();
            for (std::size_t i = 0; i < y.size(); ++i) {
                const std::size_t k = i / per;
                y[i] = static_cast<float>(bn->params.gamma()[k]) * (y[i] - static_cast<float>(bn->params.mu_run()[k])) /
                           static_cast<float>(bn->params.sigma_run()[k]) +
                       static_cast<float>(bn->params.beta()[k]);
            }
        } else if (std::holds_alternative<ReLU>(layer)) {
            y = x;
            for (float& v : y) v = v > 0.0f ? v : 0.0f;
        } else if (std::holds_alternative<Flatten>(layer)) {
            y = x;
        } else {
            const bool is_max = std::holds_alternative<MaxPool>(layer);
            const std::size_t win = is_max ? std::get<MaxPool>(layer).window : std::get<AvgPool>(layer).window;
            const std::size_t C = shape[0], H = shape[1], W = shape[2], OH = H / win, OW = W / win;
            y.assign(C * OH * OW, 0.0f);
            for (std::size_t ci = 0; ci < C; ++ci)
                for (std::size_t oy = 0; oy < OH; ++oy)
                    for (std::size_t ox = 0; ox < OW; ++ox) {
                        float acc = is_max ? -1e30f : 0.0f;
                        for (std::size_t ky = 0; ky < win; ++ky)
                            for (std::size_t kx = 0; kx < win; ++kx) {
                                const float v = x[(ci * H + oy * win + ky) * W + ox * win + kx];
                                acc = is_max ? std::max(acc, v) : acc + v;
                            }
                        y[(ci * OH + oy) * OW + ox] = is_max ? acc : acc / static_cast<float>(win * win);
                    }
        }
        shape = layer_output_shape(layer, shape);
        x = std::move(y);
    }
    return x;
}

// ---- synthetic sample images ------------------------------------------------

std::string pgm(std::size_t w, std::size_t h, const std::vector<std::uint8_t>& px) {
    std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    s.append(px.begin(), px.end());
    return s;
}

// Digit-like strokes on a black 28x28 canvas.
std::vector<std::uint8_t> digit(int which) {
    std::vector<std::uint8_t> px(28 * 28, 0);
    auto ink = [&](double x, double y) {
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int xi = static_cast<int>(std::lround(x)) + dx, yi = static_cast<int>(std::lround(y)) + dy;
                if (xi < 0 || yi < 0 || xi >= 28 || yi >= 28) continue;
                const auto v = static_cast<std::uint8_t>(dx == 0 && dy == 0 ? 255 : 170);
                auto& p = px[static_cast<std::size_t>(yi * 28 + xi)];
                p = std::max(p, v);
            }
    };
    const double pi = 3.14159265358979323846;
    switch (which) {
        case 0:  // ring
            for (int t = 0; t < 200; ++t) ink(14 + 6 * std::cos(2 * pi * t / 200), 14 + 9 * std::sin(2 * pi * t / 200));
            break;
        case 1:  // bar
            for (int t = 0; t <= 40; ++t) ink(14 + 0.1 * (t - 20), 4 + 0.5 * t);
            break;
        case 2:  // seven
            for (int t = 0; t <= 30; ++t) ink(7 + 0.45 * t, 6);
            for (int t = 0; t <= 40; ++t) ink(20.5 - 0.22 * t, 6 + 0.45 * t);
            break;
        default:  // cross
            for (int t = 0; t <= 40; ++t) {
                ink(6 + 0.4 * t, 6 + 0.4 * t);
                ink(22 - 0.4 * t, 6 + 0.4 * t);
            }
            break;
    }
    return px;
}

std::vector<std::uint8_t> colour_blob(int which, std::size_t size) {
    std::vector<std::uint8_t> px(size * size * 3);
    const double cx = 10.0 + 4.0 * which, cy = 16.0 - 2.0 * which, r = 7.0 + which;
    const std::uint8_t bg[3] = {static_cast<std::uint8_t>(90 + 40 * which), 140, static_cast<std::uint8_t>(200 - 30 * which)};
    const std::uint8_t fg[3] = {230, static_cast<std::uint8_t>(60 + 50 * which), 40};
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double d = std::hypot(static_cast<double>(x) - cx, static_cast<double>(y) - cy);
            for (int c = 0; c < 3; ++c) px[(y * size + x) * 3 + static_cast<std::size_t>(c)] = d < r ? fg[c] : bg[c];
        }
    return px;
}

std::vector<std::uint8_t> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> px(n);
    for (auto& p : px) p = static_cast<std::uint8_t>(rng() % 256);
    return px;
}

void write_model(const fs::path& dir, const std::string& file, const Network& net,
                 const std::vector<std::string>& samples) {
    save_model(net, dir / (file + ".lrp.json"));
    nlohmann::ordered_json manifest;
    manifest["model"] = file + ".lrp.json";
    manifest["samples"] = nlohmann::ordered_json::array();
    for (const auto& s : samples) {
        const auto input = normalize_pixels(read_image(dir / s));
        const auto logits = reference_forward(net, input);
        std::vector<double> as_double(logits.begin(), logits.end());
        const auto label = std::max_element(logits.begin(), logits.end()) - logits.begin();
        manifest["samples"].push_back({{"input", s}, {"logits", as_double}, {"label", label}});
    }
    write_text_file(dir / (file + ".manifest.json"), manifest.dump(2) + "\n");
    std::cout << "wrote " << (dir / (file + ".lrp.json")).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_fixtures <output-dir> [--seed N]\n";
        return 1;
    }
    const fs::path dir = argv[1];
    std::uint64_t seed = 20190601;
    if (argc >= 4 && std::string(argv[2]) == "--seed") seed = std::stoull(argv[3]);
    fs::create_directories(dir / "samples");

    std::vector<std::string> mnist, cifar_s, mixed_s, bias_s;
    for (int d = 0; d < 4; ++d) {
        const std::string name = "samples/mnist_" + std::to_string(d) + ".pgm";
        write_text_file(dir / name, pgm(28, 28, digit(d)));
        mnist.push_back(name);
    }
    for (int k = 0; k < 3; ++k) {
        const std::string name = "samples/cifar_" + std::to_string(k) + ".ppm";
        const auto px = colour_blob(k, 32);
        std::string s = "P6\n32 32\n255\n";
        s.append(px.begin(), px.end());
        write_text_file(dir / name, s);
        cifar_s.push_back(name);
    }
    for (int k = 0; k < 2; ++k) {
        const std::string m = "samples/synthetic_8x8_" + std::to_string(k) + ".ppm";
        const auto px = noise(3 * 8 * 8, seed + static_cast<std::uint64_t>(k));
        std::string s = "P6\n8 8\n255\n";
        s.append(px.begin(), px.end());
        write_text_file(dir / m, s);
        mixed_s.push_back(m);
        const std::string g = "samples/synthetic_6x6_" + std::to_string(k) + ".pgm";
        write_text_file(dir / g, pgm(6, 6, noise(36, seed + 100 + static_cast<std::uint64_t>(k))));
        bias_s.push_back(g);
    }

    Builder b(seed);
    write_model(dir, "fc1", fc(b, 1), mnist);
    write_model(dir, "fc2", fc(b, 2), mnist);
    write_model(dir, "fc3", fc(b, 3), mnist);
    write_model(dir, "conv1", conv_mnist(b, false), mnist);
    write_model(dir, "conv2", conv_mnist(b, true), mnist);
    write_model(dir, "cifar", cifar(b), cifar_s);
    write_model(dir, "synthetic_mixed", synthetic_mixed(b), mixed_s);
    write_model(dir, "synthetic_positive_bias", synthetic_positive_bias(b), bias_s);
    return 0;
}
