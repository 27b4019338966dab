#include "lrp/cli.hpp"

#include "lrp/error.hpp"
#include "lrp/fusion.hpp"
#include "lrp/heatmap.hpp"
#include "lrp/lrp.hpp"
#include "lrp/model_io.hpp"
#include "lrp/verify.hpp"
#include "overloaded.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace lrp {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return exit_usage;
        case ErrorCategory::io: return exit_io;
        default: return exit_invalid;
    }
}

fs::path report_path_for(const fs::path& model_out) {
    const std::string s = model_out.string();
    const std::string suffix = ".lrp.json";
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
        return s.substr(0, s.size() - suffix.size()) + ".fusion.json";
    return s + ".fusion.json";
}

struct FuseArgs {
    std::string model, policy = "fuse", output;
};

int cmd_fuse(const FuseArgs& a, std::ostream& out) {
    const auto net = load_model(a.model);
    const auto result = fuse_network(net, parse_policy(a.policy));
    save_model(result.network, a.output);
    const auto report = report_path_for(a.output);
    write_text_file(report, result.report.to_json());
    out << "fused " << a.model << " (" << net.layers().size() << " layers) -> " << a.output << " ("
        << result.network.layers().size() << " layers), " << result.report.records.size() << " folded, "
        << result.report.unfused.size() << " unfused; report " << report.string() << "\n";
    return exit_ok;
}

struct ExplainArgs {
    std::string model, image, bias_policy = "absorb_in_denominator", pool_rule = "winner_take_all", norm = "max";
    std::string out_prefix;
    double epsilon = 1e-9;
    long seed_class = -1;
    bool no_fuse_bn = false;
};

std::string trace_json(const RelevanceTrace& t, const std::string& policy, const LrpConfig& cfg) {
    nlohmann::ordered_json j;
    j["policy"] = policy;
    j["bias_policy"] = bias_policy_name(cfg.bias_policy);
    j["pool_rule"] = pool_rule_name(cfg.pool_rule);
    j["epsilon"] = cfg.epsilon;
    j["class_index"] = t.class_index;
    j["seed_logit"] = t.seed_logit;
    j["logits"] = t.logits.values();
    j["layer_sums"] = t.sums;
    j["min_relevance"] = min_relevance(t);
    j["dropped_relevance"] = t.diagnostics.dropped_relevance;
    j["warnings"] = t.warnings;
    return j.dump(2) + "\n";
}

int cmd_explain(const ExplainArgs& a, std::ostream& out, std::ostream& err) {
    const auto net = load_model(a.model);
    LrpConfig cfg;
    cfg.bias_policy = parse_bias_policy(a.bias_policy);
    cfg.pool_rule = parse_pool_rule(a.pool_rule);
    cfg.epsilon = a.epsilon;
    if (a.seed_class >= 0) cfg.seed_class = static_cast<std::size_t>(a.seed_class);
    const auto norm = Normalization::parse(a.norm);

    const auto policy = a.no_fuse_bn ? FusionPolicy::bypass : FusionPolicy::lower_then_fuse;
    const auto fused = fuse_network(net, policy);
    const auto input = normalize_pixels(read_image(a.image));
    if (input.shape() != net.input_shape())
        fail(ErrorCategory::shape, "image " + shape_to_string(input.shape()) + " does not match model input " +
                                       shape_to_string(net.input_shape()));
    const auto trace = explain(fused.network, input, cfg);

    fs::path prefix = a.out_prefix.empty() ? fs::path(a.image).replace_extension() : fs::path(a.out_prefix);
    const fs::path csv = prefix.string() + ".relevance.csv";
    const fs::path ppm = prefix.string() + ".heat.ppm";
    const fs::path js = prefix.string() + ".trace.json";
    const auto heat = render_heatmap(trace.relevance.front(), norm);
    write_csv(trace.relevance.front(), csv);
    write_ppm(heat, ppm);
    write_text_file(js, trace_json(trace, policy_name(policy), cfg));

    for (const auto& w : trace.warnings) err << "warning: " << w << "\n";
    if (heat.all_zero) err << "warning: input relevance is all zero; heat-map is white\n";
    out << "class " << trace.class_index << " logit " << format_number(trace.seed_logit) << " input relevance "
        << format_number(trace.sums.front()) << "\n"
        << "wrote " << csv.string() << ", " << ppm.string() << ", " << js.string() << "\n";
    return exit_ok;
}

struct VerifyArgs {
    std::string model, manifest;
    std::size_t probes = 100;
    std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    const auto net = load_model(a.model);
    auto report = verify_network(net, {a.probes, a.seed});
    if (!a.manifest.empty()) report.checks.push_back(verify_manifest(net, a.manifest));
    for (const auto& c : report.checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << " worst=" << std::scientific << std::setprecision(3)
            << c.worst << " tol=" << c.tolerance << std::defaultfloat;
        if (!c.detail.empty()) out << " (" << c.detail << ")";
        out << "\n";
    }
    if (!report.passed()) fail(ErrorCategory::invariant, "invariant suite failed on " + a.model);
    out << "all " << report.checks.size() << " checks passed\n";
    return exit_ok;
}

int cmd_render(const std::string& csv, const std::string& output, const std::string& norm, std::ostream& out,
               std::ostream& err) {
    const auto heat = render_heatmap(read_csv(csv), Normalization::parse(norm));
    write_ppm(heat, output);
    if (heat.all_zero) err << "warning: relevance is all zero; heat-map is white\n";
    if (heat.had_negative) err << "warning: negative relevance rendered as white\n";
    out << "wrote " << output << " (" << heat.width << "x" << heat.height << ")\n";
    return exit_ok;
}

int cmd_info(const std::string& model, std::ostream& out) {
    const auto net = load_model(model);
    const auto& meta = net.metadata();
    out << "model " << (meta.name.empty() ? model : meta.name) << "\n"
        << "input " << shape_to_string(net.input_shape()) << " in [" << format_number(net.input_low()) << ", "
        << format_number(net.input_high()) << "], " << net.class_count() << " classes\n";
    if (meta.accuracy) out << "accuracy " << format_number(*meta.accuracy) << "\n";
    if (meta.extra_json != "{}" && !meta.extra_json.empty()) out << "metadata " << meta.extra_json << "\n";
    const auto& shapes = net.activation_shapes();
    std::size_t total = 0;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const auto& layer = net.layers()[i];
        std::size_t params = 0;
        std::string detail = std::visit(
            detail::overloaded{
                [&](const Dense& d) {
                    params = d.weights.size() + d.bias.size();
                    return shape_to_string(d.weights.shape());
                },
                [&](const Conv2D& c) {
                    params = c.kernel.size() + c.bias.size();
                    return shape_to_string(c.kernel.shape()) + " stride " + std::to_string(c.stride) + " padding " +
                           std::to_string(c.padding);
                },
                [&](const BatchNorm& b) {
                    params = 4 * b.params.size();
                    return std::string(b.placement ? placement_name(*b.placement) : "untagged") +
                           (b.bypass ? " bypass" : "");
                },
                [](const MaxPool& p) { return "window " + std::to_string(p.window) + " stride " + std::to_string(p.stride); },
                [](const AvgPool& p) { return "window " + std::to_string(p.window) + " stride " + std::to_string(p.stride); },
                [](const auto&) { return std::string(); },
            },
            layer);
        total += params;
        out << std::setw(3) << i << "  " << std::left << std::setw(10) << layer_kind(layer) << std::setw(14)
            << shape_to_string(shapes[i + 1]) << std::right << std::setw(9) << params << "  " << detail << "\n";
    }
    out << "parameters " << total << "\n";
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Batch-norm fusion and layer-wise relevance propagation for small classifiers", "lrp"};
    app.require_subcommand(1);

    FuseArgs fa;
    auto* fuse = app.add_subcommand("fuse", "fold batch-norm layers and write the fused model plus a .fusion.json report");
    fuse->add_option("model", fa.model, "input .lrp.json")->required();
    fuse->add_option("--policy", fa.policy, "fuse | lower_then_fuse | bypass")
        ->check(CLI::IsMember({"fuse", "lower_then_fuse", "bypass"}));
    fuse->add_option("-o,--output", fa.output, "output .lrp.json")->required();

    ExplainArgs ea;
    auto* expl = app.add_subcommand("explain", "forward + relevance propagation; writes CSV, PPM heat-map and trace");
    expl->add_option("model", ea.model)->required();
    expl->add_option("image", ea.image, "PGM/PPM (0-255) or CSV grey image")->required();
    expl->add_option("--class", ea.seed_class, "explain this class instead of the argmax");
    expl->add_option("--bias-policy", ea.bias_policy)
        ->check(CLI::IsMember({"absorb_in_denominator", "require_nonpositive"}));
    expl->add_option("--pool-rule", ea.pool_rule)->check(CLI::IsMember({"winner_take_all", "proportional"}));
    expl->add_option("--epsilon", ea.epsilon, "denominator stabilizer");
    expl->add_option("--norm", ea.norm, "max | pN");
    expl->add_option("--out-prefix", ea.out_prefix, "output path prefix (default: image path without extension)");
    expl->add_flag("--no-fuse-bn", ea.no_fuse_bn, "bypass batch-norm layers instead of fusing them");

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "run the invariant suite on random probes");
    ver->add_option("model", va.model)->required();
    ver->add_option("--probes", va.probes)->check(CLI::PositiveNumber);
    ver->add_option("--seed", va.seed);
    ver->add_option("--manifest", va.manifest, "also compare logits against an exporter manifest.json");

    std::string r_csv, r_out, r_norm = "max";
    auto* ren = app.add_subcommand("render", "render a relevance CSV as a PPM heat-map");
    ren->add_option("relevance", r_csv)->required();
    ren->add_option("-o,--output", r_out)->required();
    ren->add_option("--norm", r_norm, "max | pN");

    std::string i_model;
    auto* info = app.add_subcommand("info", "print the layer table");
    info->add_option("model", i_model)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error:usage: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (*fuse) return cmd_fuse(fa, out);
        if (*expl) return cmd_explain(ea, out, err);
        if (*ver) return cmd_verify(va, out);
        if (*ren) return cmd_render(r_csv, r_out, r_norm, out, err);
        if (*info) return cmd_info(i_model, out);
    } catch (const Error& e) {
        err << "error:" << category_name(e.category()) << ": " << e.what() << "\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        err << "error:internal: " << e.what() << "\n";
        return exit_invalid;
    }
    return exit_usage;
}

}  // namespace lrp
