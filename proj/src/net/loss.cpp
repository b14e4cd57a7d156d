#include "normlab/net/loss.hpp"

#include "normlab/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace normlab {

CrossEntropyResult cross_entropy(const Tensor4 &logits, std::span<const int> labels) {
    const Shape4 &s = logits.shape();
    const std::size_t batch = s.n;
    const std::size_t classes = s.c * s.plane();
    if (classes < 2) throw ShapeError("cross_entropy needs at least 2 classes, got " + s.str());
    if (labels.size() != batch)
        throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(batch) + " rows");
    if (batch == 0) throw ShapeError("cross_entropy: empty batch");

    CrossEntropyResult r{0.0, Tensor4(s), 0};
    const double inv_n = 1.0 / static_cast<double>(batch);
    for (std::size_t n = 0; n < batch; ++n) {
        const int label = labels[n];
        if (label < 0 || static_cast<std::size_t>(label) >= classes)
            throw InputError("label " + std::to_string(label) + " outside [0, " +
                             std::to_string(classes) + ")");
        const double *z = logits.ptr() + n * classes;
        double *d = r.dlogits.ptr() + n * classes;
        const double *top = std::max_element(z, z + classes);
        const double zmax = *top;
        double denom = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            d[k] = std::exp(z[k] - zmax);
            denom += d[k];
        }
        r.loss += (std::log(denom) + zmax - z[label]) * inv_n;
        for (std::size_t k = 0; k < classes; ++k) d[k] = d[k] / denom * inv_n;
        d[label] -= inv_n;
        if (static_cast<std::size_t>(top - z) == static_cast<std::size_t>(label)) ++r.correct;
    }
    return r;
}

} // namespace normlab
