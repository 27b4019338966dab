// Property-based acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any of them fails.

#include "oracles.hpp"

#include "lrp/error.hpp"
#include "lrp/fusion.hpp"
#include "lrp/heatmap.hpp"
#include "lrp/kernels.hpp"
#include "lrp/lrp.hpp"
#include "lrp/model_io.hpp"
#include "lrp/ops.hpp"
#include "lrp/verify.hpp"

#include <json.hpp>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace lrp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path fixtures = LRP_FIXTURES_DIR;
const fs::path golden = LRP_GOLDEN_DIR;
const std::string cli_path = LRP_CLI_PATH;

// Smallest relevance value seen anywhere in the suite.
double g_min_relevance = 0.0;
std::size_t g_relevance_tensors = 0;

void track(const Tensor& r) {
    g_min_relevance = std::min(g_min_relevance, r.min());
    ++g_relevance_tensors;
}

void track(const RelevanceTrace& t) {
    for (const auto& r : t.relevance) track(r);
}

struct Outcome {
    bool passed = true;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

fs::path scratch() {
    const auto dir = fs::temp_directory_path() / "lrp_acceptance";
    fs::create_directories(dir);
    return dir;
}

struct Run {
    int code = -1;
    std::string out, err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

Run run_cli(const std::vector<std::string>& args) {
    const auto out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
    std::string cmd = quote(cli_path);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(out);
    r.err = read_text_file(err);
    return r;
}

Dense make_dense(oracle::Rng& rng, std::size_t in, std::size_t out, double bias_lo, double bias_hi) {
    return Dense{rng.tensor({out, in}, -1, 1), rng.tensor({out}, bias_lo, bias_hi), {}};
}

// Random valid conv geometry; retries until the windows tile the input exactly.
struct ConvCase {
    Conv2D conv;
    Shape input;
};

ConvCase random_conv(oracle::Rng& rng, std::size_t max_channels, std::size_t max_extent,
                     std::vector<std::size_t> pads, std::vector<std::size_t> strides) {
    for (;;) {
        const auto ic = rng.index(1, max_channels), oc = rng.index(1, max_channels);
        const auto kh = rng.index(1, 3), kw = rng.index(1, 3);
        const auto h = rng.index(1, max_extent), w = rng.index(1, max_extent);
        const auto pad = pads[rng.index(0, pads.size() - 1)], stride = strides[rng.index(0, strides.size() - 1)];
        try {
            kernels::conv_geometry({oc, ic, kh, kw}, {ic, h, w}, stride, pad);
        } catch (const Error&) {
            continue;
        }
        return {Conv2D{rng.tensor({oc, ic, kh, kw}, -1, 1), rng.tensor({oc}, -1, 1), stride, pad}, {ic, h, w}};
    }
}

Outcome fusion_exactness() {
    const auto start = Clock::now();
    oracle::Rng rng(1001);
    double worst[4] = {0, 0, 0, 0};
    for (int inst = 0; inst < 100; ++inst) {
        {
            const auto in = rng.index(1, 12), out = rng.index(1, 12);
            const auto d = make_dense(rng, in, out, -1, 1);
            const auto bn = oracle::random_bn(rng, in);
            const auto fused = fuse_bn_dense_pre(bn, d);
            const auto w = oracle::to_mat(d.weights);
            for (int p = 0; p < 100; ++p) {
                const auto x = rng.tensor({in}, -1, 1);
                const auto want = oracle::dense(w, d.bias.values(), oracle::batchnorm(bn, x.values()));
                worst[0] = std::max(worst[0], oracle::max_abs_diff(want, dense_forward(fused.weights, fused.bias, x)));
            }
        }
        {
            const auto in = rng.index(1, 12), out = rng.index(1, 12);
            const auto d = make_dense(rng, in, out, -1, 1);
            const auto bn = oracle::random_bn(rng, out);
            const auto fused = fuse_bn_dense_post(d, bn);
            const auto w = oracle::to_mat(d.weights);
            for (int p = 0; p < 100; ++p) {
                const auto x = rng.tensor({in}, -1, 1);
                const auto want = oracle::batchnorm(bn, oracle::dense(w, d.bias.values(), x.values()));
                worst[1] = std::max(worst[1], oracle::max_abs_diff(want, dense_forward(fused.weights, fused.bias, x)));
            }
        }
        {
            const auto c = random_conv(rng, 3, 8, {0, 1, 2}, {1, 2});
            const auto bn = oracle::random_bn(rng, c.conv.kernel.extent(0));
            const auto fused = fuse_bn_conv_post(c.conv, bn);
            for (int p = 0; p < 100; ++p) {
                const auto x = rng.tensor(c.input, -1, 1);
                const auto want = oracle::batchnorm_channels(
                    bn, oracle::conv(c.conv.kernel, c.conv.bias, x, c.conv.stride, c.conv.padding));
                const auto got = conv2d_forward(fused.kernel, fused.bias, x, fused.stride, fused.padding);
                worst[2] = std::max(worst[2], oracle::max_abs_diff(want, got));
            }
        }
        {
            const auto c = random_conv(rng, 3, 8, {0}, {1, 2});
            const auto bn = oracle::random_bn(rng, c.input[0]);
            const auto fused = fuse_bn_conv_pre(bn, c.conv);
            for (int p = 0; p < 100; ++p) {
                const auto x = rng.tensor(c.input, -1, 1);
                const auto want = oracle::conv(c.conv.kernel, c.conv.bias, oracle::batchnorm_channels(bn, x),
                                               c.conv.stride, c.conv.padding);
                const auto got = conv2d_forward(fused.kernel, fused.bias, x, fused.stride, fused.padding);
                worst[3] = std::max(worst[3], oracle::max_abs_diff(want, got));
            }
        }
    }
    const double elapsed = seconds_since(start);
    const double max_err = *std::max_element(std::begin(worst), std::end(worst));
    return {max_err <= 1e-10 && elapsed < 10.0,
            "dense_pre " + num(worst[0]) + ", dense_post " + num(worst[1]) + ", conv_post " + num(worst[2]) +
                ", conv_pre " + num(worst[3]) + " (tol 1e-10), " + num(elapsed) + " s"};
}

Outcome lowering_equivalence() {
    const auto start = Clock::now();
    oracle::Rng rng(1002);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const auto c = random_conv(rng, 3, 8, {0, 1}, {1, 2});
        const auto d = lower_conv_to_dense(c.conv, c.input);
        for (int p = 0; p < 20; ++p) {
            const auto x = rng.tensor(c.input, -1, 1);
            const auto want = oracle::conv(c.conv.kernel, c.conv.bias, x, c.conv.stride, c.conv.padding);
            const auto got = dense_forward(d.weights, d.bias, x.reshaped({x.size()}));
            worst = std::max(worst, oracle::max_abs_diff(want.reshaped({want.size()}), got));
        }
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-9 && elapsed < 10.0, "worst " + num(worst) + " (tol 1e-9), " + num(elapsed) + " s"};
}

Outcome padding_guard() {
    oracle::Rng rng(1003);
    std::size_t rejected = 0, instances = 20;
    double worst = 0.0;
    for (std::size_t inst = 0; inst < instances; ++inst) {
        const auto c = random_conv(rng, 3, 8, {1}, {1, 2});
        const auto bn = oracle::random_bn(rng, c.input[0]);
        try {
            (void)fuse_bn_conv_pre(bn, c.conv);
        } catch (const Error& e) {
            rejected += e.category() == ErrorCategory::unsupported_fusion;
        }
        const auto out = layer_output_shape(c.conv, c.input);
        const Network net({BatchNorm{bn, BnPlacement::after_activation, false}, c.conv, Flatten{}}, c.input, -1, 1,
                          shape_size(out));
        const auto fused = fuse_network(net, FusionPolicy::lower_then_fuse).network;
        for (const auto& l : fused.layers())
            if (std::holds_alternative<BatchNorm>(l)) return {false, "batch-norm left after lower_then_fuse"};
        for (int p = 0; p < 50; ++p) {
            const auto x = rng.tensor(c.input, -1, 1);
            const auto want = oracle::conv(c.conv.kernel, c.conv.bias, oracle::batchnorm_channels(bn, x),
                                           c.conv.stride, c.conv.padding);
            worst = std::max(worst, oracle::max_abs_diff(want.reshaped({want.size()}), forward(fused, x).logits));
        }
    }
    return {rejected == instances && worst <= 1e-9, std::to_string(rejected) + "/" + std::to_string(instances) +
                                                         " rejected as unsupported_fusion, lowered worst " +
                                                         num(worst) + " over all pixels (tol 1e-9)"};
}

// Sequential net with 2..5 linear layers. Convolutions (with optional pooling)
// come first, dense layers last; every hidden linear layer is followed by ReLU.
Network random_network(oracle::Rng& rng, double bias_lo, double bias_hi) {
    const auto linear = rng.index(2, 5);
    const auto convs = rng.index(0, linear - 1);
    const std::size_t extents[] = {4, 6, 8};
    Shape shape{rng.index(1, 3), extents[rng.index(0, 2)], 0};
    shape[2] = shape[1];
    const Shape input = shape;
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < convs; ++i) {
        const auto oc = rng.index(1, 4), k = rng.index(1, std::min<std::size_t>(3, shape[1]));
        const auto pad = rng.index(0, 1);
        Conv2D c{rng.tensor({oc, shape[0], k, k}, -1, 1), rng.tensor({oc}, bias_lo, bias_hi), 1, pad};
        shape = layer_output_shape(c, shape);
        layers.push_back(std::move(c));
        layers.push_back(ReLU{});
        if (shape[1] % 2 == 0 && shape[1] >= 2 && rng.index(0, 1)) {
            if (rng.index(0, 1))
                layers.push_back(MaxPool{2, 2});
            else
                layers.push_back(AvgPool{2, 2});
            shape = {shape[0], shape[1] / 2, shape[2] / 2};
        }
    }
    layers.push_back(Flatten{});
    std::size_t width = shape_size(shape);
    for (std::size_t i = convs; i + 1 < linear; ++i) {
        const auto out = rng.index(2, 12);
        layers.push_back(make_dense(rng, width, out, bias_lo, bias_hi));
        layers.push_back(ReLU{});
        width = out;
    }
    layers.push_back(make_dense(rng, width, 3, bias_lo, bias_hi));
    return Network(std::move(layers), input, -1, 1, 3);
}

// Draws inputs until the argmax logit is positive.
std::optional<Tensor> positive_seed_input(const Network& net, oracle::Rng& rng) {
    for (int attempt = 0; attempt < 50; ++attempt) {
        auto x = rng.tensor(net.input_shape(), -1, 1);
        const auto logits = forward(net, x).logits;
        if (logits.max() > 0.0) return x;
    }
    return std::nullopt;
}

Outcome conservation() {
    oracle::Rng rng(1004);
    LrpConfig exact;
    exact.epsilon = 0.0;
    double worst = 0.0, excess = -1.0;
    std::size_t nets = 0, with_conv = 0, regenerated = 0, dropped = 0;
    while (nets < 100) {
        const auto net = random_network(rng, 0.0, 0.0);
        const auto x = positive_seed_input(net, rng);
        if (!x) {
            ++regenerated;
            continue;
        }
        ++nets;
        with_conv += std::holds_alternative<Conv2D>(net.layers().front());
        const auto t = explain(net, *x, exact);
        track(t);
        dropped += t.diagnostics.zero_denominators;
        for (double s : t.sums) worst = std::max(worst, std::abs(s - t.seed_logit) / std::abs(t.seed_logit));
    }
    std::size_t biased = 0;
    while (biased < 100) {
        const auto net = random_network(rng, 0.0, 0.5);
        const auto x = positive_seed_input(net, rng);
        if (!x) continue;
        ++biased;
        const auto t = explain(net, *x);
        track(t);
        for (std::size_t k = 0; k + 1 < t.sums.size(); ++k)
            excess = std::max(excess, (t.sums[k] - t.sums[k + 1]) / t.seed_logit);
    }
    // Equal sums across pass-through layers may differ in the last bits.
    const double slack = 1e-12;
    return {worst <= 1e-10 && excess <= slack,
            "zero-bias worst relative error " + num(worst) + " (tol 1e-10) over 100 nets (" + std::to_string(with_conv) +
                " conv-first, " + std::to_string(regenerated) + " redrawn, " + std::to_string(dropped) +
                " zero denominators); positive-bias max excess " + num(excess) + " (slack " + num(slack) + ")"};
}

Outcome message_oracle() {
    oracle::Rng rng(1005);
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
        const auto in = rng.index(1, 10), out = rng.index(1, 10);
        const auto d = make_dense(rng, in, out, -0.5, 0.5);
        const auto x = rng.tensor({in}, 0, 1), r = rng.tensor({out}, 0, 1);
        for (double eps : {0.0, 1e-9, 0.1}) {
            LrpConfig cfg;
            cfg.epsilon = eps;
            const auto got = lrp_dense_zplus(x, d, r, cfg);
            track(got);
            const auto want = oracle::zplus(oracle::to_mat(d.weights), d.bias.values(), x.values(), r.values(), eps);
            worst = std::max(worst, oracle::max_abs_diff(want, got));
        }
    }
    return {worst <= 1e-12, "worst " + num(worst) + " over 20 layers x 3 stabilizers (tol 1e-12)"};
}

Outcome zb_checks() {
    oracle::Rng rng(1006);
    LrpConfig exact;
    exact.epsilon = 0.0;
    double worst_cons = 0.0, worst_pinned = 0.0, worst_oracle = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const auto in = rng.index(1, 10);
        const double l = rng.uniform(-2, 0), h = rng.uniform(0.1, 2);
        const auto d = make_dense(rng, in, 1, 0, 0);
        const auto x = rng.tensor({in}, l, h);
        const Tensor r({1}, {rng.uniform(0.1, 2)});
        const auto got = lrp_dense_zb(x, d, l, h, r, exact);
        track(got);
        worst_cons = std::max(worst_cons, std::abs(got.sum() - r[0]) / r[0]);

        Dense pos{rng.tensor({1, in}, 0.01, 1), Tensor::zeros({1}), {}};
        const auto pinned = lrp_dense_zb(Tensor(Shape{in}, std::vector<double>(in, l)), pos, l, h, r, LrpConfig{});
        track(pinned);
        for (double v : pinned.values()) worst_pinned = std::max(worst_pinned, std::abs(v));

        const auto out = rng.index(1, 10);
        const auto dm = make_dense(rng, in, out, -0.5, 0.5);
        const auto rm = rng.tensor({out}, 0, 1);
        const auto gm = lrp_dense_zb(x, dm, l, h, rm, LrpConfig{});
        track(gm);
        worst_oracle = std::max(worst_oracle, oracle::max_abs_diff(oracle::zb(oracle::to_mat(dm.weights),
                                                                              dm.bias.values(), x.values(), l, h,
                                                                              rm.values(), LrpConfig{}.epsilon),
                                                                   gm));
    }
    return {worst_cons <= 1e-14 && worst_pinned == 0.0 && worst_oracle <= 1e-12,
            "single-output relative error " + num(worst_cons) + " (tol 1e-14), pinned-at-low max |R| " +
                num(worst_pinned) + " (want 0), oracle " + num(worst_oracle) + " (tol 1e-12)"};
}

Outcome conv_dense_agreement() {
    oracle::Rng rng(1007);
    double worst = 0.0;
    for (int inst = 0; inst < 25; ++inst) {
        const auto c = random_conv(rng, 3, 8, {0, 1}, {1, 2});
        const auto d = lower_conv_to_dense(c.conv, c.input);
        const auto out = layer_output_shape(c.conv, c.input);
        const auto r = rng.tensor(out, 0, 1);
        const auto r_flat = r.reshaped({r.size()});
        const auto xp = rng.tensor(c.input, 0, 1), xb = rng.tensor(c.input, -1, 1);
        const auto xp_flat = xp.reshaped({xp.size()}), xb_flat = xb.reshaped({xb.size()});
        const LrpConfig cfg;
        const auto a = lrp_conv_zplus(xp, c.conv, r, cfg), b = lrp_dense_zplus(xp_flat, d, r_flat, cfg);
        const auto e = lrp_conv_zb(xb, c.conv, -1, 1, r, cfg), f = lrp_dense_zb(xb_flat, d, -1, 1, r_flat, cfg);
        for (const auto* t : {&a, &b, &e, &f}) track(*t);
        worst = std::max({worst, oracle::max_abs_diff(a.reshaped({a.size()}), b),
                          oracle::max_abs_diff(e.reshaped({e.size()}), f)});
    }
    return {worst <= 1e-9, "worst " + num(worst) + " over 25 instances, z+ and zB (tol 1e-9)"};
}

Outcome non_negativity() {
    return {g_min_relevance >= 0.0 && g_relevance_tensors > 0,
            "min " + num(g_min_relevance) + " over " + std::to_string(g_relevance_tensors) + " relevance tensors"};
}

Outcome rendering() {
    oracle::Rng rng(1008);
    std::size_t rgb_mismatch = 0, value_mismatch = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const auto r = rng.tensor({rng.index(1, 3), rng.index(1, 12), rng.index(1, 12)}, -0.2, 1);
        const auto base = render_heatmap(r);
        Tensor scaled = r, pow2 = r;
        const double c = rng.uniform(1e-6, 1e6);
        const double p = std::ldexp(1.0, static_cast<int>(rng.index(0, 60)) - 30);
        for (double& v : scaled.data()) v *= c;
        for (double& v : pow2.data()) v *= p;
        rgb_mismatch += render_heatmap(scaled).rgb != base.rgb;
        value_mismatch += render_heatmap(pow2).values != base.values;
    }

    const auto prefix = scratch() / "golden_conv2";
    const auto ex = run_cli({"explain", (fixtures / "conv2.lrp.json").string(),
                             (fixtures / "samples/mnist_0.pgm").string(), "--out-prefix", prefix.string()});
    const auto want = read_text_file(golden / "conv2_mnist_0.heat.ppm");
    const bool golden_ok = ex.code == 0 && read_text_file(prefix.string() + ".heat.ppm") == want;
    const auto net = fuse_network(load_model(fixtures / "conv2.lrp.json"), FusionPolicy::lower_then_fuse).network;
    const auto tr = explain(net, normalize_pixels(read_image(fixtures / "samples/mnist_0.pgm")));
    const bool golden_lib = encode_ppm(28, 28, render_heatmap(tr.relevance.front()).rgb) == want;

    const auto zeros = scratch() / "zeros.csv", white = scratch() / "zeros.ppm";
    write_text_file(zeros, "0,0,0\n0,0,0\n");
    const auto rr = run_cli({"render", zeros.string(), "-o", white.string()});
    const auto img = read_text_file(white);
    const std::string header = "P6\n3 2\n255\n";
    const bool all_white = rr.code == 0 && img.size() == header.size() + 18 && img.rfind(header, 0) == 0 &&
                           std::all_of(img.begin() + static_cast<long>(header.size()), img.end(),
                                       [](char b) { return static_cast<unsigned char>(b) == 255; });
    const bool warned = rr.err.find("warning") != std::string::npos;
    const auto m = render_heatmap(Tensor::zeros({4, 4}));
    const bool lib_zero = m.all_zero && std::all_of(m.rgb.begin(), m.rgb.end(), [](auto b) { return b == 255; });

    return {rgb_mismatch == 0 && value_mismatch == 0 && golden_ok && golden_lib && all_white && warned && lib_zero,
            "scale mismatches rgb " + std::to_string(rgb_mismatch) + "/200, values(2^k) " +
                std::to_string(value_mismatch) + "/200; golden cli " + (golden_ok ? "equal" : "DIFFERENT") +
                ", library " + (golden_lib ? "equal" : "DIFFERENT") + "; all-zero " +
                (all_white && lib_zero ? "white" : "NOT white") + (warned ? " with warning" : " without warning")};
}

Outcome cli_end_to_end() {
    std::vector<fs::path> models;
    for (const auto& e : fs::directory_iterator(fixtures))
        if (e.path().string().ends_with(".lrp.json")) models.push_back(e.path());
    std::sort(models.begin(), models.end());
    std::string failed;
    for (const auto& m : models) {
        const auto r = run_cli({"verify", m.string(), "--probes", "100"});
        if (r.code != 0) failed += " " + m.filename().string() + "(exit " + std::to_string(r.code) + ")";
    }

    // Both explain runs: exit 0, nothing dropped, no negative relevance and no
    // layer gaining relevance relative to the seed.
    const auto model = (fixtures / "conv2.lrp.json").string();
    const auto image = (fixtures / "samples/mnist_0.pgm").string();
    std::string trace_detail;
    bool traces_ok = true;
    for (const bool bypass : {false, true}) {
        const auto prefix = scratch() / (bypass ? "e2e_bypass" : "e2e_fused");
        std::vector<std::string> args{"explain", model, image, "--epsilon", "0", "--out-prefix", prefix.string()};
        if (bypass) args.push_back("--no-fuse-bn");
        const auto r = run_cli(args);
        if (r.code != 0) {
            traces_ok = false;
            trace_detail += std::string(bypass ? " bypass" : " fused") + " exit " + std::to_string(r.code);
            continue;
        }
        const auto t = nlohmann::json::parse(read_text_file(prefix.string() + ".trace.json"));
        const auto sums = t["layer_sums"].get<std::vector<double>>();
        const double seed = t["seed_logit"].get<double>();
        double excess = -1.0;
        for (std::size_t k = 0; k + 1 < sums.size(); ++k) excess = std::max(excess, (sums[k] - sums[k + 1]) / seed);
        const bool ok = seed > 0 && sums.back() == seed && t["min_relevance"].get<double>() >= 0.0 &&
                        t["dropped_relevance"].get<double>() == 0.0 && excess <= 1e-12;
        traces_ok = traces_ok && ok;
        trace_detail += std::string(bypass ? "; bypass" : " fused") + ": " + std::to_string(sums.size()) +
                        " layers, input/seed " + num(sums.front() / seed) + ", excess " + num(excess) +
                        (ok ? "" : " FAILED");
    }

    // Exact conservation on the same two networks with biases removed.
    const auto net = load_model(model);
    LrpConfig exact;
    exact.epsilon = 0.0;
    double worst = 0.0;
    std::size_t runs = 0;
    for (const auto policy : {FusionPolicy::lower_then_fuse, FusionPolicy::bypass}) {
        const auto unbiased = fuse_network(net, policy).network.without_biases();
        for (int i = 0; i < 4; ++i) {
            const auto x =
                normalize_pixels(read_image(fixtures / ("samples/mnist_" + std::to_string(i) + ".pgm")));
            const auto t = explain(unbiased, x, exact);
            if (t.seed_logit <= 0.0) continue;
            ++runs;
            worst = std::max(worst, conservation_error(t));
        }
    }
    const bool cons_ok = runs > 0 && worst <= 1e-10;
    return {failed.empty() && traces_ok && cons_ok,
            "verify on " + std::to_string(models.size()) + " fixtures: " + (failed.empty() ? "all exit 0" : failed) +
                ";" + trace_detail + "; zero-bias conservation worst " + num(worst) + " over " +
                std::to_string(runs) + " runs (tol 1e-10)"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"fusion exactness", fusion_exactness},
        {"lowering equivalence", lowering_equivalence},
        {"conv-pre padding guard", padding_guard},
        {"conservation and dissipation", conservation},
        {"message oracle", message_oracle},
        {"zB analytic checks", zb_checks},
        {"conv/dense relevance agreement", conv_dense_agreement},
        {"non-negativity", non_negativity},
        {"rendering contracts", rendering},
        {"cli end-to-end", cli_end_to_end},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.passed;
        std::cout << (o.passed ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
    }
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
    return failures ? 1 : 0;
}
