#pragma once

// Invariant suite run by `lrp verify` and by the acceptance tests: fusion
// equivalence, conv lowering equivalence, relevance conservation/dissipation,
// non-negativity and conv/dense LRP agreement, all on random probe inputs.

#include "lrp/lrp.hpp"
#include "lrp/network.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lrp {

namespace tolerance {
inline constexpr double fusion_logits = 1e-6;  // relative, max(1, |logit|)
inline constexpr double lowering = 1e-9;       // absolute
inline constexpr double conservation = 1e-10;  // relative to |seed|
inline constexpr double conv_dense_lrp = 1e-9; // absolute
inline constexpr double manifest_logits = 1e-4;
}  // namespace tolerance

struct CheckResult {
    std::string name;
    bool passed = true;
    double worst = 0.0;  // worst observed deviation
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const;
};

struct VerifyOptions {
    std::size_t probes = 100;
    std::uint64_t seed = 1;
};

VerifyReport verify_network(const Network& network, const VerifyOptions& options = {});

/// Compares forward logits with a `manifest.json` {samples:[{input, logits, label}]}
/// whose input paths are relative to the manifest.
CheckResult verify_manifest(const Network& network, const std::filesystem::path& manifest);

/// max_k |sum(R_k) - seed| / |seed| over all layers of the trace.
double conservation_error(const RelevanceTrace& trace);

/// Largest amount by which a layer's relevance sum exceeds the sum of the layer
/// above it, relative to |seed|; <= 0 means the trace never amplifies.
double dissipation_excess(const RelevanceTrace& trace);

double min_relevance(const RelevanceTrace& trace);

/// Uniform random tensor in [low, high].
Tensor random_tensor(const Shape& shape, double low, double high, std::uint64_t seed);

}  // namespace lrp
