#include "lusd/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "lusd/error.hpp"

namespace lusd {

std::string Shape::str() const {
    return "(" + std::to_string(channels) + "," + std::to_string(height) + "," +
           std::to_string(width) + ")";
}

GridTensor::GridTensor(Shape shape, float fill) : shape_(shape), data_(shape.numel(), fill) {}

GridTensor::GridTensor(Shape shape, std::vector<float> data)
    : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
    }
}

GridTensor GridTensor::from_external(Shape shape, std::vector<float> data) {
    GridTensor t(shape, std::move(data));
    if (!all_finite(t)) throw ShapeError("tensor contains non-finite values");
    return t;
}

GridTensor& GridTensor::operator+=(const GridTensor& other) {
    require_same_shape(*this, other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

GridTensor& GridTensor::operator-=(const GridTensor& other) {
    require_same_shape(*this, other, "subtract");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

GridTensor& GridTensor::operator*=(float s) noexcept {
    for (float& v : data_) v *= s;
    return *this;
}

GridTensor operator+(GridTensor a, const GridTensor& b) { return a += b; }
GridTensor operator-(GridTensor a, const GridTensor& b) { return a -= b; }
GridTensor operator*(GridTensor a, float s) { return a *= s; }
GridTensor operator*(float s, GridTensor a) { return a *= s; }

GridTensor hadamard(const GridTensor& a, const GridTensor& b) {
    require_same_shape(a, b, "hadamard");
    GridTensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

GridTensor broadcast_multiply(const GridTensor& t, const GridTensor& mask) {
    const Shape& s = t.shape();
    const Shape& m = mask.shape();
    if (m.channels != 1 || m.height != s.height || m.width != s.width) {
        throw ShapeError("mask " + m.str() + " cannot broadcast over " + s.str());
    }
    GridTensor out = t;
    const std::size_t plane = s.plane();
    for (std::size_t c = 0; c < s.channels; ++c) {
        for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] *= mask[i];
    }
    return out;
}

void require_same_shape(const GridTensor& a, const GridTensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
    }
}

double mean(const GridTensor& t) {
    if (t.empty()) return 0.0;
    double s = 0.0;
    for (float v : t.data()) s += v;
    return s / static_cast<double>(t.size());
}

double mean_abs(const GridTensor& t) {
    if (t.empty()) return 0.0;
    double s = 0.0;
    for (float v : t.data()) s += std::fabs(v);
    return s / static_cast<double>(t.size());
}

float min_value(const GridTensor& t) {
    return t.empty() ? 0.0f : *std::min_element(t.data().begin(), t.data().end());
}

float max_value(const GridTensor& t) {
    return t.empty() ? 0.0f : *std::max_element(t.data().begin(), t.data().end());
}

bool all_finite(const GridTensor& t) {
    return std::all_of(t.data().begin(), t.data().end(), [](float v) { return std::isfinite(v); });
}

}  // namespace lusd
