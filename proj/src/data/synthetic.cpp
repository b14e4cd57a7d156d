#include "normlab/data/synthetic.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/core/random.hpp"

#include <cmath>
#include <numbers>

namespace normlab {

LabeledImageSet synth_dataset(std::uint64_t seed, std::size_t n_per_class, int classes,
                              std::size_t height, std::size_t width, Split split) {
    if (classes < 2) throw ConfigError("synthetic set needs at least 2 classes");
    if (n_per_class == 0) throw InputError("synthetic set: n_per_class must be positive");
    if (height == 0 || width == 0) throw ConfigError("synthetic set: empty image size");

    constexpr double pi = std::numbers::pi;
    constexpr double kNoise = 0.1;
    constexpr double kTint = 0.4;
    const std::size_t k_count = static_cast<std::size_t>(classes);
    const std::size_t total = n_per_class * k_count;
    const double freq = 2.0 * pi / (0.5 * static_cast<double>(std::max(height, width)));

    LabeledImageSet set;
    set.images = Tensor4({total, 3, height, width});
    set.labels.resize(total);
    set.class_count = classes;
    set.split = split;

    Rng rng(mix_seed(seed, 0x5EED));
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t k = i % k_count;
        set.labels[i] = static_cast<int>(k);
        const double angle = pi * static_cast<double>(k) / static_cast<double>(k_count);
        const double ca = std::cos(angle), sa = std::sin(angle);
        const double phase = rng.uniform(0.0, 2.0 * pi);
        for (std::size_t c = 0; c < 3; ++c) {
            const double tint =
                kTint * std::cos(2.0 * pi * static_cast<double>(k) / static_cast<double>(k_count) -
                                 2.0 * pi * static_cast<double>(c) / 3.0);
            for (std::size_t y = 0; y < height; ++y)
                for (std::size_t x = 0; x < width; ++x) {
                    const double t = freq * (ca * static_cast<double>(x) + sa * static_cast<double>(y));
                    set.images(i, c, y, x) = 0.5 * std::sin(t + phase) + tint + kNoise * rng.normal();
                }
        }
    }
    return set;
}

} // namespace normlab
