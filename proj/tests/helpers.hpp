#pragma once

#include "normlab/core/random.hpp"
#include "normlab/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace testing {

inline normlab::Tensor4 random_tensor(normlab::Shape4 s, std::uint64_t seed, double scale = 1.0,
                                      double offset = 0.0) {
    normlab::Rng rng(seed);
    normlab::Tensor4 t(s);
    for (double &v : t.data()) v = offset + scale * rng.normal();
    return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Central differences of f with respect to every entry of `values`.
inline std::vector<double> numeric_gradient(std::span<double> values,
                                            const std::function<double()> &f,
                                            double step = 1e-5) {
    std::vector<double> g(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + step;
        const double up = f();
        values[i] = saved - step;
        const double down = f();
        values[i] = saved;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

// Largest |a - b| / max(|a|, |b|, floor) over the pair of vectors.
inline double max_rel_error(std::span<const double> analytic, std::span<const double> numeric,
                            double floor = 1e-4) {
    double m = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        m = std::max(m, std::abs(analytic[i] - numeric[i]) / scale);
    }
    return m;
}

} // namespace testing
