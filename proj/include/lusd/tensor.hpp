#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lusd {

struct Shape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t numel() const noexcept { return channels * height * width; }
    std::size_t plane() const noexcept { return height * width; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense channels x height x width float array, channel-major, row-major
/// inside each channel. Carries latents, noise, gradients, masks and images.
class GridTensor {
public:
    GridTensor() = default;
    explicit GridTensor(Shape shape, float fill = 0.0f);
    GridTensor(Shape shape, std::vector<float> data);

    /// Construct from untrusted input: additionally rejects NaN/Inf.
    static GridTensor from_external(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
        return data_[(c * shape_.height + y) * shape_.width + x];
    }
    float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return data_[(c * shape_.height + y) * shape_.width + x];
    }

    GridTensor& operator+=(const GridTensor& other);
    GridTensor& operator-=(const GridTensor& other);
    GridTensor& operator*=(float s) noexcept;

    bool operator==(const GridTensor&) const = default;

private:
    Shape shape_{};
    std::vector<float> data_;
};

GridTensor operator+(GridTensor a, const GridTensor& b);
GridTensor operator-(GridTensor a, const GridTensor& b);
GridTensor operator*(GridTensor a, float s);
GridTensor operator*(float s, GridTensor a);

/// Elementwise product of equal shapes.
GridTensor hadamard(const GridTensor& a, const GridTensor& b);

/// Multiply every channel of `t` by the single-channel `mask`.
GridTensor broadcast_multiply(const GridTensor& t, const GridTensor& mask);

/// Throws ShapeError naming `what` unless the shapes agree.
void require_same_shape(const GridTensor& a, const GridTensor& b, const char* what);

double mean(const GridTensor& t);
double mean_abs(const GridTensor& t);
float min_value(const GridTensor& t);
float max_value(const GridTensor& t);
bool all_finite(const GridTensor& t);

}  // namespace lusd
