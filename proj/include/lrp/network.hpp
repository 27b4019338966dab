#pragma once

#include "lrp/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lrp {

// Fully connected layer. The input is consumed in row-major order whatever its
// shape; `output_shape` (empty means [out]) lets a dense layer produced by
// convolution lowering keep emitting [c,h,w] tensors.
struct Dense {
    Tensor weights;  // [out, in]
    Tensor bias;     // [out]
    Shape output_shape;

    std::size_t inputs() const { return weights.extent(1); }
    std::size_t outputs() const { return weights.extent(0); }
    Shape out_shape() const { return output_shape.empty() ? Shape{outputs()} : output_shape; }
};

struct Conv2D {
    Tensor kernel;  // [oc, ic, kh, kw]
    Tensor bias;    // [oc]
    std::size_t stride = 1;
    std::size_t padding = 0;
};

enum class BnPlacement { before_activation, after_activation };

struct BatchNorm {
    BnParams params;
    // Absent only in legacy files; decides the fusion direction.
    std::optional<BnPlacement> placement;
    // Relevance passes through unchanged; the forward pass still normalizes.
    bool bypass = false;
};

struct ReLU {};
struct MaxPool {
    std::size_t window = 2;
    std::size_t stride = 2;
};
struct AvgPool {
    std::size_t window = 2;
    std::size_t stride = 2;
};
struct Flatten {};

using Layer = std::variant<Dense, Conv2D, BatchNorm, ReLU, MaxPool, AvgPool, Flatten>;

std::string layer_kind(const Layer& layer);
std::string placement_name(BnPlacement placement);

/// Output shape of `layer` applied to `input`; throws shape/geometry/dimension
/// errors exactly where the forward pass would.
Shape layer_output_shape(const Layer& layer, const Shape& input);

struct Metadata {
    std::string name;
    std::optional<double> accuracy;
    std::string extra_json;  // remaining metadata object, serialized; "{}" when empty
};

// Sequential classifier ending in logits (no softmax), with the value range of
// its input pixels.
class Network {
public:
    Network(std::vector<Layer> layers, Shape input_shape, double input_low, double input_high,
            std::size_t class_count, Metadata metadata = {});

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    const Shape& input_shape() const noexcept { return input_shape_; }
    double input_low() const noexcept { return input_low_; }
    double input_high() const noexcept { return input_high_; }
    std::size_t class_count() const noexcept { return class_count_; }
    const Metadata& metadata() const noexcept { return metadata_; }

    /// Shapes of every activation: [input, after layer 0, ..., after last].
    const std::vector<Shape>& activation_shapes() const noexcept { return shapes_; }

    /// Copy with every dense/conv bias set to zero.
    Network without_biases() const;

private:
    std::vector<Layer> layers_;
    Shape input_shape_;
    double input_low_;
    double input_high_;
    std::size_t class_count_;
    Metadata metadata_;
    std::vector<Shape> shapes_;
};

struct ForwardResult {
    Tensor logits;
    std::vector<Tensor> activations;  // layers + 1 entries, activations.front() is the input
    // Winning input indices per max-pool layer (empty for other layers).
    std::vector<std::vector<std::size_t>> pool_argmax;
};

ForwardResult forward(const Network& network, const Tensor& input);

/// Applies a single layer.
Tensor apply_layer(const Layer& layer, const Tensor& input, std::vector<std::size_t>* argmax = nullptr);

/// Maps raw 8-bit pixel values to [-1, 1] via ((x/255) - 0.5) / 0.5.
Tensor normalize_pixels(const Tensor& raw);

}  // namespace lrp
