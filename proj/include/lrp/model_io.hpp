#pragma once

// `.lrp.json` model files:
//
//   {"format_version":1, "input_shape":[1,28,28], "input_low":-1.0, "input_high":1.0,
//    "class_count":10, "metadata":{...},
//    "layers":[{"type":"dense","weights":{"shape":[o,i],"data":[...]},"bias":{...}}, ...]}
//
// Layer types: dense (optional "output_shape"), conv2d (kernel, bias, stride,
// padding), batchnorm (gamma, beta, mu_run, sigma_run as number arrays, optional
// "placement" and "bypass"), relu, maxpool/avgpool (window, stride), flatten.
// Numbers are written in their shortest round-trip decimal form.

#include "lrp/network.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace lrp {

Network load_model(const std::filesystem::path& path);
Network parse_model(std::string_view json_text);

void save_model(const Network& network, const std::filesystem::path& path);
std::string serialize_model(const Network& network);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_number(double value);

/// Writes `text` to `path`, throwing an io error on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lrp
