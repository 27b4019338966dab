#include "lrp/network.hpp"

#include "lrp/error.hpp"
#include "lrp/kernels.hpp"
#include "lrp/ops.hpp"
#include "overloaded.hpp"

namespace lrp {

using detail::overloaded;

std::string layer_kind(const Layer& layer) {
    return std::visit(overloaded{
                          [](const Dense&) { return std::string("dense"); },
                          [](const Conv2D&) { return std::string("conv2d"); },
                          [](const BatchNorm&) { return std::string("batchnorm"); },
                          [](const ReLU&) { return std::string("relu"); },
                          [](const MaxPool&) { return std::string("maxpool"); },
                          [](const AvgPool&) { return std::string("avgpool"); },
                          [](const Flatten&) { return std::string("flatten"); },
                      },
                      layer);
}

std::string placement_name(BnPlacement placement) {
    return placement == BnPlacement::before_activation ? "before_activation" : "after_activation";
}

Shape layer_output_shape(const Layer& layer, const Shape& input) {
    return std::visit(
        overloaded{
            [&](const Dense& d) -> Shape {
                if (d.weights.rank() != 2)
                    fail(ErrorCategory::dimension, "weights must be rank 2, got " + shape_to_string(d.weights.shape()));
                if (d.bias.rank() != 1 || d.bias.size() != d.outputs())
                    fail(ErrorCategory::dimension, "bias " + shape_to_string(d.bias.shape()) +
                                                       " does not match weights " + shape_to_string(d.weights.shape()));
                if (shape_size(input) != d.inputs())
                    fail(ErrorCategory::dimension, "expected " + std::to_string(d.inputs()) + " inputs, got " +
                                                       shape_to_string(input));
                if (!d.output_shape.empty() && shape_size(d.output_shape) != d.outputs())
                    fail(ErrorCategory::dimension, "output_shape " + shape_to_string(d.output_shape) +
                                                       " does not hold " + std::to_string(d.outputs()) + " outputs");
                return d.out_shape();
            },
            [&](const Conv2D& c) -> Shape {
                const auto g = kernels::conv_geometry(c.kernel.shape(), input, c.stride, c.padding);
                if (c.bias.rank() != 1 || c.bias.size() != g.out_channels)
                    fail(ErrorCategory::dimension, "bias " + shape_to_string(c.bias.shape()) +
                                                       " does not match kernel " + shape_to_string(c.kernel.shape()));
                return {g.out_channels, g.out_height, g.out_width};
            },
            [&](const BatchNorm& b) -> Shape {
                batchnorm_per_element(b.params, input);
                return input;
            },
            [&](const ReLU&) { return input; },
            [&](const MaxPool& p) -> Shape {
                if (input.size() != 3)
                    fail(ErrorCategory::dimension, "pooling expects [c,h,w], got " + shape_to_string(input));
                return {input[0], kernels::window_extent(input[1], p.window, p.stride, 0),
                        kernels::window_extent(input[2], p.window, p.stride, 0)};
            },
            [&](const AvgPool& p) -> Shape {
                if (input.size() != 3)
                    fail(ErrorCategory::dimension, "pooling expects [c,h,w], got " + shape_to_string(input));
                return {input[0], kernels::window_extent(input[1], p.window, p.stride, 0),
                        kernels::window_extent(input[2], p.window, p.stride, 0)};
            },
            [&](const Flatten&) -> Shape { return {shape_size(input)}; },
        },
        layer);
}

Network::Network(std::vector<Layer> layers, Shape input_shape, double input_low, double input_high,
                 std::size_t class_count, Metadata metadata)
    : layers_(std::move(layers)),
      input_shape_(std::move(input_shape)),
      input_low_(input_low),
      input_high_(input_high),
      class_count_(class_count),
      metadata_(std::move(metadata)) {
    if (input_shape_.empty() || input_shape_.size() > 4 || shape_size(input_shape_) == 0)
        fail(ErrorCategory::shape, "invalid input_shape " + shape_to_string(input_shape_));
    if (!(input_low_ < input_high_))
        fail(ErrorCategory::value, "input_low must be < input_high");
    if (class_count_ == 0) fail(ErrorCategory::value, "class_count must be positive");
    if (layers_.empty()) fail(ErrorCategory::shape, "network has no layers");
    shapes_.push_back(input_shape_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        try {
            if (const auto* p = std::get_if<MaxPool>(&layers_[i]); p && (p->window == 0 || p->stride == 0))
                fail(ErrorCategory::value, "window and stride must be >= 1");
            if (const auto* p = std::get_if<AvgPool>(&layers_[i]); p && (p->window == 0 || p->stride == 0))
                fail(ErrorCategory::value, "window and stride must be >= 1");
            shapes_.push_back(layer_output_shape(layers_[i], shapes_.back()));
        } catch (const Error& e) {
            const auto cat = e.category() == ErrorCategory::value ? ErrorCategory::value : ErrorCategory::shape;
            fail(cat, "layer " + std::to_string(i) + " (" + layer_kind(layers_[i]) + "): " + e.what());
        }
    }
    if (shapes_.back() != Shape{class_count_})
        fail(ErrorCategory::shape, "last layer produces " + shape_to_string(shapes_.back()) + ", expected [" +
                                       std::to_string(class_count_) + "] logits");
}

Network Network::without_biases() const {
    auto layers = layers_;
    for (auto& layer : layers) {
        if (auto* d = std::get_if<Dense>(&layer)) d->bias = Tensor::zeros(d->bias.shape());
        if (auto* c = std::get_if<Conv2D>(&layer)) c->bias = Tensor::zeros(c->bias.shape());
    }
    return Network(std::move(layers), input_shape_, input_low_, input_high_, class_count_, metadata_);
}

Tensor apply_layer(const Layer& layer, const Tensor& input, std::vector<std::size_t>* argmax) {
    return std::visit(overloaded{
                          [&](const Dense& d) {
                              auto y = dense_forward(d.weights, d.bias, input);
                              return d.output_shape.empty() ? y : y.reshaped(d.output_shape);
                          },
                          [&](const Conv2D& c) { return conv2d_forward(c.kernel, c.bias, input, c.stride, c.padding); },
                          [&](const BatchNorm& b) { return batchnorm_forward(b.params, input); },
                          [&](const ReLU&) { return relu(input); },
                          [&](const MaxPool& p) {
                              auto r = maxpool(input, p.window, p.stride);
                              if (argmax) *argmax = std::move(r.argmax);
                              return std::move(r.output);
                          },
                          [&](const AvgPool& p) { return avgpool(input, p.window, p.stride); },
                          [&](const Flatten&) { return flatten(input); },
                      },
                      layer);
}

ForwardResult forward(const Network& network, const Tensor& input) {
    if (input.shape() != network.input_shape())
        fail(ErrorCategory::dimension, "input shape " + shape_to_string(input.shape()) + " does not match network input " +
                                           shape_to_string(network.input_shape()));
    ForwardResult r;
    const auto& layers = network.layers();
    r.activations.reserve(layers.size() + 1);
    r.pool_argmax.resize(layers.size());
    r.activations.push_back(input);
    for (std::size_t i = 0; i < layers.size(); ++i)
        r.activations.push_back(apply_layer(layers[i], r.activations.back(), &r.pool_argmax[i]));
    r.logits = r.activations.back();
    return r;
}

Tensor normalize_pixels(const Tensor& raw) {
    Tensor out = raw;
    for (double& v : out.data()) {
        if (!(v >= 0.0 && v <= 255.0))
            fail(ErrorCategory::value, "pixel value " + std::to_string(v) + " outside [0,255]");
        v = ((v / 255.0) - 0.5) / 0.5;
    }
    return out;
}

}  // namespace lrp
