#include "lrp/tensor.hpp"

#include "lrp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lrp {

std::string_view category_name(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::dimension: return "dimension";
        case ErrorCategory::geometry: return "geometry";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::schema: return "schema";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::value: return "value";
        case ErrorCategory::io: return "io";
        case ErrorCategory::policy: return "policy";
        case ErrorCategory::precondition: return "precondition";
        case ErrorCategory::unsupported_fusion: return "unsupported_fusion";
        case ErrorCategory::invariant: return "invariant";
    }
    return "unknown";
}

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 4)
        fail(ErrorCategory::dimension, "tensor rank must be 1..4, got shape " + shape_to_string(shape));
    for (auto e : shape)
        if (e == 0) fail(ErrorCategory::dimension, "zero extent in shape " + shape_to_string(shape));
}

}  // namespace

Tensor::Tensor() : shape_{1}, data_(1, 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (shape_size(shape_) != data_.size())
        fail(ErrorCategory::dimension, "shape " + shape_to_string(shape_) + " holds " +
                                           std::to_string(shape_size(shape_)) + " elements but " +
                                           std::to_string(data_.size()) + " were given");
    require_finite("tensor");
}

Tensor::Tensor(Shape shape, std::initializer_list<double> data)
    : Tensor(std::move(shape), std::vector<double>(data)) {}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
    check_shape(shape);
    const auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::reshaped(Shape shape) const {
    check_shape(shape);
    if (shape_size(shape) != size())
        fail(ErrorCategory::dimension,
             "cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    Tensor out = *this;
    out.shape_ = std::move(shape);
    return out;
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }
double Tensor::min() const { return *std::min_element(data_.begin(), data_.end()); }
double Tensor::max() const { return *std::max_element(data_.begin(), data_.end()); }

void Tensor::require_finite(const std::string& what) const {
    for (std::size_t i = 0; i < data_.size(); ++i)
        if (!std::isfinite(data_[i]))
            fail(ErrorCategory::value, what + " has a non-finite value at flat index " + std::to_string(i));
}

BnParams::BnParams(std::vector<double> gamma, std::vector<double> beta, std::vector<double> mu_run,
                   std::vector<double> sigma_run)
    : gamma_(std::move(gamma)), beta_(std::move(beta)), mu_(std::move(mu_run)), sigma_(std::move(sigma_run)) {
    const auto n = gamma_.size();
    if (n == 0 || beta_.size() != n || mu_.size() != n || sigma_.size() != n)
        fail(ErrorCategory::dimension, "batch-norm vectors must share a non-zero length (gamma " +
                                           std::to_string(n) + ", beta " + std::to_string(beta_.size()) +
                                           ", mu " + std::to_string(mu_.size()) + ", sigma " +
                                           std::to_string(sigma_.size()) + ")");
    for (const auto* v : {&gamma_, &beta_, &mu_, &sigma_})
        for (double x : *v)
            if (!std::isfinite(x)) fail(ErrorCategory::value, "batch-norm parameter is not finite");
    for (std::size_t i = 0; i < n; ++i)
        if (!(sigma_[i] > 0.0))
            fail(ErrorCategory::value, "sigma_run[" + std::to_string(i) + "] must be > 0");
}

BnParams BnParams::identity(std::size_t channels) {
    return BnParams(std::vector<double>(channels, 1.0), std::vector<double>(channels, 0.0),
                    std::vector<double>(channels, 0.0), std::vector<double>(channels, 1.0));
}

BnParams BnParams::expanded(std::size_t per_channel) const {
    auto rep = [per_channel](const std::vector<double>& v) {
        std::vector<double> out;
        out.reserve(v.size() * per_channel);
        for (double x : v) out.insert(out.end(), per_channel, x);
        return out;
    };
    return BnParams(rep(gamma_), rep(beta_), rep(mu_), rep(sigma_));
}

}  // namespace lrp
