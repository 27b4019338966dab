#include "lrp/model_io.hpp"

#include "lrp/error.hpp"
#include "overloaded.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace lrp {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    fail(ErrorCategory::schema, where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) schema_error(where, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field \"") + key + "\"");
    return *it;
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) schema_error(where, "expected a number");
    return j.get<double>();
}

std::size_t count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) schema_error(where, "expected a non-negative integer");
    return j.get<std::size_t>();
}

std::vector<double> number_array(const json& j, const std::string& where) {
    if (!j.is_array()) schema_error(where, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(number(v, where));
    return out;
}

Shape shape_array(const json& j, const std::string& where) {
    if (!j.is_array()) schema_error(where, "expected an array of extents");
    Shape out;
    for (const auto& v : j) out.push_back(count(v, where));
    return out;
}

Tensor tensor(const json& obj, const char* key, const std::string& where) {
    const std::string w = where + "." + key;
    const auto& t = field(obj, key, where);
    return Tensor(shape_array(field(t, "shape", w), w + ".shape"), number_array(field(t, "data", w), w + ".data"));
}

Layer parse_layer(const json& j, const std::string& where) {
    const auto& type_field = field(j, "type", where);
    if (!type_field.is_string()) schema_error(where, "\"type\" must be a string");
    const auto type = type_field.get<std::string>();
    if (type == "dense") {
        Dense d{tensor(j, "weights", where), tensor(j, "bias", where), {}};
        if (j.contains("output_shape")) d.output_shape = shape_array(j["output_shape"], where + ".output_shape");
        return d;
    }
    if (type == "conv2d") {
        Conv2D c{tensor(j, "kernel", where), tensor(j, "bias", where), 1, 0};
        if (j.contains("stride")) c.stride = count(j["stride"], where + ".stride");
        if (j.contains("padding")) c.padding = count(j["padding"], where + ".padding");
        if (c.stride == 0) fail(ErrorCategory::value, where + ": stride must be >= 1");
        return c;
    }
    if (type == "batchnorm") {
        BatchNorm b{BnParams(number_array(field(j, "gamma", where), where + ".gamma"),
                             number_array(field(j, "beta", where), where + ".beta"),
                             number_array(field(j, "mu_run", where), where + ".mu_run"),
                             number_array(field(j, "sigma_run", where), where + ".sigma_run")),
                    std::nullopt, false};
        if (j.contains("placement")) {
            const auto& p = j["placement"];
            if (p == "before_activation")
                b.placement = BnPlacement::before_activation;
            else if (p == "after_activation")
                b.placement = BnPlacement::after_activation;
            else
                schema_error(where + ".placement", "expected \"before_activation\" or \"after_activation\"");
        }
        if (j.contains("bypass")) {
            if (!j["bypass"].is_boolean()) schema_error(where + ".bypass", "expected a boolean");
            b.bypass = j["bypass"].get<bool>();
        }
        return b;
    }
    if (type == "relu") return ReLU{};
    if (type == "flatten") return Flatten{};
    if (type == "maxpool" || type == "avgpool") {
        const auto window = count(field(j, "window", where), where + ".window");
        const auto stride = j.contains("stride") ? count(j["stride"], where + ".stride") : window;
        if (window == 0 || stride == 0) fail(ErrorCategory::value, where + ": window and stride must be >= 1");
        if (type == "maxpool") return MaxPool{window, stride};
        return AvgPool{window, stride};
    }
    schema_error(where, "unknown layer type \"" + type + "\"");
}

void write_numbers(std::ostream& os, std::span<const double> values) {
    os << '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << format_number(values[i]);
    }
    os << ']';
}

void write_shape(std::ostream& os, const Shape& shape) {
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
}

void write_tensor(std::ostream& os, const char* key, const Tensor& t) {
    os << ",\"" << key << "\":{\"shape\":";
    write_shape(os, t.shape());
    os << ",\"data\":";
    write_numbers(os, t.data());
    os << '}';
}

void write_layer(std::ostream& os, const Layer& layer) {
    os << "{\"type\":\"" << layer_kind(layer) << '"';
    std::visit(detail::overloaded{
                   [&](const Dense& d) {
                       write_tensor(os, "weights", d.weights);
                       write_tensor(os, "bias", d.bias);
                       if (!d.output_shape.empty()) {
                           os << ",\"output_shape\":";
                           write_shape(os, d.output_shape);
                       }
                   },
                   [&](const Conv2D& c) {
                       write_tensor(os, "kernel", c.kernel);
                       write_tensor(os, "bias", c.bias);
                       os << ",\"stride\":" << c.stride << ",\"padding\":" << c.padding;
                   },
                   [&](const BatchNorm& b) {
                       os << ",\"gamma\":";
                       write_numbers(os, b.params.gamma());
                       os << ",\"beta\":";
                       write_numbers(os, b.params.beta());
                       os << ",\"mu_run\":";
                       write_numbers(os, b.params.mu_run());
                       os << ",\"sigma_run\":";
                       write_numbers(os, b.params.sigma_run());
                       if (b.placement) os << ",\"placement\":\"" << placement_name(*b.placement) << '"';
                       if (b.bypass) os << ",\"bypass\":true";
                   },
                   [&](const MaxPool& p) { os << ",\"window\":" << p.window << ",\"stride\":" << p.stride; },
                   [&](const AvgPool& p) { os << ",\"window\":" << p.window << ",\"stride\":" << p.stride; },
                   [](const auto&) {},
               },
               layer);
    os << '}';
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) fail(ErrorCategory::value, "cannot format number");
    return std::string(buf, end);
}

Network parse_model(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCategory::parse, "byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) schema_error("model", "top level must be an object");
    const auto version = count(field(doc, "format_version", "model"), "format_version");
    if (version != kFormatVersion)
        schema_error("format_version", "unsupported version " + std::to_string(version));

    const auto& layers_json = field(doc, "layers", "model");
    if (!layers_json.is_array()) schema_error("layers", "expected an array");
    std::vector<Layer> layers;
    for (std::size_t i = 0; i < layers_json.size(); ++i) {
        const std::string where = "layers[" + std::to_string(i) + "]";
        try {
            layers.push_back(parse_layer(layers_json[i], where));
        } catch (const Error& e) {
            if (e.category() == ErrorCategory::schema) throw;
            fail(e.category(), "layer " + std::to_string(i) + ": " + e.what());
        }
    }

    Metadata meta;
    meta.extra_json = "{}";
    if (doc.contains("metadata")) {
        json m = doc["metadata"];
        if (!m.is_object()) schema_error("metadata", "expected an object");
        if (m.contains("name")) {
            if (!m["name"].is_string()) schema_error("metadata.name", "expected a string");
            meta.name = m["name"].get<std::string>();
            m.erase("name");
        }
        if (m.contains("accuracy")) {
            meta.accuracy = number(m["accuracy"], "metadata.accuracy");
            m.erase("accuracy");
        }
        meta.extra_json = m.dump();
    }

    return Network(std::move(layers), shape_array(field(doc, "input_shape", "model"), "input_shape"),
                   number(field(doc, "input_low", "model"), "input_low"),
                   number(field(doc, "input_high", "model"), "input_high"),
                   count(field(doc, "class_count", "model"), "class_count"), std::move(meta));
}

Network load_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

std::string serialize_model(const Network& network) {
    std::ostringstream os;
    os << "{\"format_version\":" << kFormatVersion << ",\"input_shape\":";
    write_shape(os, network.input_shape());
    os << ",\"input_low\":" << format_number(network.input_low())
       << ",\"input_high\":" << format_number(network.input_high())
       << ",\"class_count\":" << network.class_count();

    json meta = json::parse(network.metadata().extra_json.empty() ? "{}" : network.metadata().extra_json);
    if (!network.metadata().name.empty()) meta["name"] = network.metadata().name;
    if (network.metadata().accuracy) meta["accuracy"] = *network.metadata().accuracy;
    os << ",\"metadata\":" << meta.dump() << ",\"layers\":[";
    const auto& layers = network.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        os << (i ? ",\n" : "\n");
        write_layer(os, layers[i]);
    }
    os << "\n]}\n";
    return os.str();
}

void save_model(const Network& network, const std::filesystem::path& path) {
    write_text_file(path, serialize_model(network));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCategory::io, "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCategory::io, "write to " + path.string() + " failed");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorCategory::io, "read from " + path.string() + " failed");
    return ss.str();
}

}  // namespace lrp
