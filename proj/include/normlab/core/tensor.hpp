#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace normlab {

struct Shape4 {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    constexpr std::size_t size() const { return n * c * h * w; }
    constexpr std::size_t plane() const { return h * w; }
    constexpr bool operator==(const Shape4 &) const = default;

    std::string str() const;
};

// Dense (N, C, H, W) array of doubles, row-major.
class Tensor4 {
  public:
    Tensor4() = default;
    explicit Tensor4(Shape4 shape, double fill = 0.0);
    // Throws ShapeError if data.size() != shape.size().
    Tensor4(Shape4 shape, std::vector<double> data);

    static Tensor4 zeros_like(const Tensor4 &other) { return Tensor4(other.shape()); }

    const Shape4 &shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double *ptr() { return data_.data(); }
    const double *ptr() const { return data_.data(); }

    std::size_t index(std::size_t n, std::size_t c, std::size_t h,
                      std::size_t w) const {
        return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }
    double &operator()(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
        return data_[index(n, c, h, w)];
    }
    double operator()(std::size_t n, std::size_t c, std::size_t h,
                      std::size_t w) const {
        return data_[index(n, c, h, w)];
    }

    // Contiguous H*W plane of (n, c).
    std::span<double> plane(std::size_t n, std::size_t c) {
        return {data_.data() + (n * shape_.c + c) * shape_.plane(), shape_.plane()};
    }
    std::span<const double> plane(std::size_t n, std::size_t c) const {
        return {data_.data() + (n * shape_.c + c) * shape_.plane(), shape_.plane()};
    }

    void fill(double v);
    bool all_finite() const;

    // Same data, different shape of equal element count.
    Tensor4 reshaped(Shape4 shape) const &;
    Tensor4 reshaped(Shape4 shape) &&;

    bool operator==(const Tensor4 &) const = default;

  private:
    Shape4 shape_{};
    std::vector<double> data_;
};

enum class Axis : std::uint8_t { N = 1, C = 2, H = 4, W = 8 };

// Non-empty subset of {N, C, H, W}.
class AxisSet {
  public:
    AxisSet(std::initializer_list<Axis> axes);

    bool contains(Axis a) const { return (bits_ & static_cast<std::uint8_t>(a)) != 0; }
    // Shape with every selected axis collapsed to extent 1.
    Shape4 reduced_shape(const Shape4 &s) const;
    // Number of elements folded into each output value.
    std::size_t extent(const Shape4 &s) const;

  private:
    std::uint8_t bits_ = 0;
};

} // namespace normlab
