#include "lrp/heatmap.hpp"

#include "lrp/error.hpp"
#include "lrp/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lrp {

Normalization Normalization::parse(const std::string& text) {
    if (text == "max") return {};
    if (text.size() > 1 && text[0] == 'p') {
        double p = 0.0;
        const char* first = text.data() + 1;
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, p);
        if (ec == std::errc{} && ptr == last && p > 0.0 && p <= 100.0) return {Kind::percentile, p};
    }
    fail(ErrorCategory::usage, "normalization must be \"max\" or \"pN\" with 0 < N <= 100, got \"" + text + "\"");
}

Tensor channel_sum(const Tensor& relevance) {
    if (relevance.rank() == 2) return relevance;
    if (relevance.rank() != 3)
        fail(ErrorCategory::dimension, "relevance map must be rank 2 or 3, got " + shape_to_string(relevance.shape()));
    const std::size_t C = relevance.extent(0), H = relevance.extent(1), W = relevance.extent(2);
    Tensor out = Tensor::zeros({H, W});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H * W; ++i) out[i] += relevance[c * H * W + i];
    return out;
}

Heatmap render_heatmap(const Tensor& relevance, Normalization norm) {
    const Tensor grid = channel_sum(relevance);
    Heatmap map;
    map.height = grid.extent(0);
    map.width = grid.extent(1);
    const std::size_t n = grid.size();
    map.values.assign(n, 0.0);
    map.rgb.assign(3 * n, 255);

    std::vector<double> positive;
    for (double v : grid.data()) {
        if (v > 0.0) positive.push_back(v);
        if (v < 0.0) map.had_negative = true;
    }
    if (positive.empty()) {
        map.all_zero = true;
        return map;
    }
    double reference;
    if (norm.kind == Normalization::Kind::max) {
        reference = *std::max_element(positive.begin(), positive.end());
    } else {
        const auto rank = static_cast<std::size_t>(std::ceil(norm.percentile / 100.0 * static_cast<double>(positive.size())));
        const std::size_t idx = std::clamp<std::size_t>(rank, 1, positive.size()) - 1;
        std::nth_element(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(idx), positive.end());
        reference = positive[idx];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::clamp(grid[i] / reference, 0.0, 1.0);
        map.values[i] = v;
        const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - v)));
        map.rgb[3 * i + 1] = fade;
        map.rgb[3 * i + 2] = fade;
    }
    return map;
}

std::string encode_ppm(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != 3 * width * height) fail(ErrorCategory::dimension, "rgb buffer does not match image size");
    std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(rgb.begin(), rgb.end());
    return out;
}

void write_ppm(const Heatmap& heatmap, const std::filesystem::path& path) {
    write_text_file(path, encode_ppm(heatmap.width, heatmap.height, heatmap.rgb));
}

namespace {

// Netpbm header token reader; '#' starts a comment running to end of line.
class PnmReader {
public:
    explicit PnmReader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::string token() {
        skip_space();
        std::string t;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#')
            t += bytes_[pos_++];
        if (t.empty()) fail(ErrorCategory::parse, "truncated netpbm header");
        return t;
    }

    std::size_t integer() {
        const auto t = token();
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || ptr != t.data() + t.size())
            fail(ErrorCategory::parse, "expected an integer in netpbm data, got \"" + t + "\"");
        return v;
    }

    // After maxval exactly one whitespace byte precedes binary samples.
    void skip_single_space() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            fail(ErrorCategory::parse, "missing whitespace after netpbm header");
        ++pos_;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    unsigned char byte() { return static_cast<unsigned char>(bytes_[pos_++]); }

private:
    void skip_space() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::string bytes_;
    std::size_t pos_ = 0;
};

struct PnmData {
    std::size_t channels, width, height, maxval;
    std::vector<unsigned> samples;  // interleaved, row-major
};

PnmData parse_pnm(const std::filesystem::path& path) {
    PnmReader r(read_text_file(path));
    const auto magic = r.token();
    if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
        fail(ErrorCategory::parse, path.string() + ": unsupported netpbm magic \"" + magic + "\"");
    PnmData d;
    d.channels = (magic == "P3" || magic == "P6") ? 3 : 1;
    d.width = r.integer();
    d.height = r.integer();
    d.maxval = r.integer();
    if (d.width == 0 || d.height == 0) fail(ErrorCategory::parse, path.string() + ": empty image");
    if (d.maxval == 0 || d.maxval > 255)
        fail(ErrorCategory::value, path.string() + ": only 8-bit netpbm files (maxval 1..255) are supported");
    const std::size_t n = d.width * d.height * d.channels;
    d.samples.resize(n);
    if (magic == "P5" || magic == "P6") {
        r.skip_single_space();
        if (r.remaining() < n) fail(ErrorCategory::parse, path.string() + ": truncated pixel data");
        for (auto& s : d.samples) s = r.byte();
    } else {
        for (auto& s : d.samples) s = static_cast<unsigned>(r.integer());
    }
    for (auto s : d.samples)
        if (s > d.maxval) fail(ErrorCategory::value, path.string() + ": sample exceeds maxval");
    return d;
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
    const auto d = parse_pnm(path);
    if (d.channels != 3) fail(ErrorCategory::parse, path.string() + ": not a colour (P3/P6) image");
    RgbImage img{d.width, d.height, {}};
    img.rgb.assign(d.samples.begin(), d.samples.end());
    return img;
}

Tensor read_pnm(const std::filesystem::path& path) {
    const auto d = parse_pnm(path);
    Tensor t = Tensor::zeros({d.channels, d.height, d.width});
    const std::size_t plane = d.width * d.height;
    for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < d.channels; ++c) t[c * plane + p] = d.samples[p * d.channels + c];
    return t;
}

std::string format_csv(const Tensor& relevance) {
    const Tensor grid = channel_sum(relevance);
    const std::size_t H = grid.extent(0), W = grid.extent(1);
    std::string out;
    for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
            if (x) out += ',';
            out += format_number(grid[y * W + x]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const Tensor& relevance, const std::filesystem::path& path) {
    write_text_file(path, format_csv(relevance));
}

Tensor read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<double> values;
    std::size_t width = 0, height = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t cols = 0, start = 0;
        while (true) {
            const auto end = line.find(',', start);
            std::string cell = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
            cell.erase(0, cell.find_first_not_of(" \t"));
            cell.erase(cell.find_last_not_of(" \t") + 1);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size())
                fail(ErrorCategory::parse, path.string() + ": row " + std::to_string(height + 1) +
                                               " has a non-numeric cell \"" + cell + "\"");
            values.push_back(v);
            ++cols;
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (height == 0) width = cols;
        if (cols != width)
            fail(ErrorCategory::parse, path.string() + ": row " + std::to_string(height + 1) + " has " +
                                           std::to_string(cols) + " cells, expected " + std::to_string(width));
        ++height;
    }
    if (height == 0) fail(ErrorCategory::parse, path.string() + ": empty CSV");
    try {
        return Tensor({height, width}, std::move(values));
    } catch (const Error& e) {
        fail(ErrorCategory::value, path.string() + ": " + e.what());
    }
}

Tensor read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] == 'P' && (magic[1] == '2' || magic[1] == '3' || magic[1] == '5' || magic[1] == '6'))
        return read_pnm(path);
    const auto grid = read_csv(path);
    return grid.reshaped({1, grid.extent(0), grid.extent(1)});
}

}  // namespace lrp
