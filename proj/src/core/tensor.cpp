#include "normlab/core/tensor.hpp"

#include "normlab/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace normlab {

std::string Shape4::str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
           std::to_string(h) + ", " + std::to_string(w) + ")";
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
        throw ShapeError("tensor data has " + std::to_string(data_.size()) +
                         " values but shape " + shape_.str() + " needs " +
                         std::to_string(shape_.size()));
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor4::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
}

Tensor4 Tensor4::reshaped(Shape4 shape) const & {
    return Tensor4(shape, data_);
}

Tensor4 Tensor4::reshaped(Shape4 shape) && {
    return Tensor4(shape, std::move(data_));
}

AxisSet::AxisSet(std::initializer_list<Axis> axes) {
    for (Axis a : axes) bits_ |= static_cast<std::uint8_t>(a);
    if (bits_ == 0) throw ShapeError("axis set must select at least one axis");
}

Shape4 AxisSet::reduced_shape(const Shape4 &s) const {
    return {contains(Axis::N) ? 1 : s.n, contains(Axis::C) ? 1 : s.c,
            contains(Axis::H) ? 1 : s.h, contains(Axis::W) ? 1 : s.w};
}

std::size_t AxisSet::extent(const Shape4 &s) const {
    return (contains(Axis::N) ? s.n : 1) * (contains(Axis::C) ? s.c : 1) *
           (contains(Axis::H) ? s.h : 1) * (contains(Axis::W) ? s.w : 1);
}

} // namespace normlab
