#pragma once

// White-to-red heat-maps of input relevance, and the image/CSV formats the CLI
// reads and writes.

#include "lrp/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lrp {

struct Normalization {
    enum class Kind { max, percentile } kind = Kind::max;
    double percentile = 100.0;  // in (0, 100], used with Kind::percentile

    static Normalization parse(const std::string& text);  // "max" or "pN"
};

struct Heatmap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;     // row-major, in [0, 1]
    std::vector<std::uint8_t> rgb;  // row-major triples
    bool all_zero = false;          // nothing to show; the map is white
    bool had_negative = false;      // negative relevance was clamped to white

    bool operator==(const Heatmap& other) const = default;
};

/// Sums a [c,h,w] tensor over channels into [h,w]; rank-2 tensors pass through.
Tensor channel_sum(const Tensor& relevance);

/// v = clamp(R / reference, 0, 1), reference being the maximum or the given
/// percentile (nearest rank) of the positive values; colour (255, 255(1-v),
/// 255(1-v)) rounded half away from zero.
Heatmap render_heatmap(const Tensor& relevance, Normalization norm = {});

std::string encode_ppm(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb);
void write_ppm(const Heatmap& heatmap, const std::filesystem::path& path);

struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;
};
RgbImage read_ppm(const std::filesystem::path& path);

/// Raw 0..maxval pixels of a P2/P3/P5/P6 file as [1,h,w] (grey) or [3,h,w].
Tensor read_pnm(const std::filesystem::path& path);

/// One line per row, comma separated, shortest round-trip decimals.
std::string format_csv(const Tensor& relevance);
void write_csv(const Tensor& relevance, const std::filesystem::path& path);
Tensor read_csv(const std::filesystem::path& path);  // [h,w]

/// PGM/PPM by magic number, otherwise CSV read as a [1,h,w] grey image.
Tensor read_image(const std::filesystem::path& path);

}  // namespace lrp
