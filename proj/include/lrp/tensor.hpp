#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace lrp {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Row-major array of doubles tagged with its extents. Rank is 1 to 4; images
// are [channels, height, width], dense weights [out, in], conv kernels
// [out_ch, in_ch, kh, kw]. Every element is finite and every extent is >= 1.
class Tensor {
public:
    Tensor();  // rank-1 tensor holding a single zero
    Tensor(Shape shape, std::vector<double> data);
    Tensor(Shape shape, std::initializer_list<double> data);

    static Tensor zeros(Shape shape);
    static Tensor filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    /// Same data under a new shape with equal element count.
    Tensor reshaped(Shape shape) const;

    double sum() const;
    double min() const;
    double max() const;

    /// Throws a value error if any element is NaN or infinite.
    void require_finite(const std::string& what) const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Inference-time batch normalization: out = gamma * (x - mu) / sigma + beta.
// sigma_run is a standard deviation with any training epsilon already folded in.
// The vectors hold either one entry per channel or one entry per element of the
// normalized tensor.
class BnParams {
public:
    BnParams(std::vector<double> gamma, std::vector<double> beta, std::vector<double> mu_run,
             std::vector<double> sigma_run);

    static BnParams identity(std::size_t channels);

    std::size_t size() const noexcept { return gamma_.size(); }
    const std::vector<double>& gamma() const noexcept { return gamma_; }
    const std::vector<double>& beta() const noexcept { return beta_; }
    const std::vector<double>& mu_run() const noexcept { return mu_; }
    const std::vector<double>& sigma_run() const noexcept { return sigma_; }

    /// Replicates per-channel parameters over `per_channel` positions each.
    BnParams expanded(std::size_t per_channel) const;

    // As an affine map x -> scale*x + shift: scale = gamma/sigma,
    // shift = beta - gamma*mu/sigma.
    double scale(std::size_t i) const { return gamma_[i] / sigma_[i]; }
    double shift(std::size_t i) const { return beta_[i] - mu_[i] * scale(i); }

    bool operator==(const BnParams& other) const = default;

private:
    std::vector<double> gamma_;
    std::vector<double> beta_;
    std::vector<double> mu_;
    std::vector<double> sigma_;
};

}  // namespace lrp
