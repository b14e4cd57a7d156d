#pragma once

#include "normlab/data/dataset.hpp"

#include <cstddef>
#include <cstdint>

namespace normlab {

// Seeded image-classification set with 3 channels. Class k is a sinusoidal
// grating at angle pi * k / K with a random phase, plus a class-specific colour
// tint and Gaussian pixel noise (std 0.1). The tints are distinct points on a
// circle, so the classes are linearly separable from the globally pooled
// channel means alone. Samples are interleaved by class.
LabeledImageSet synth_dataset(std::uint64_t seed, std::size_t n_per_class,
                              int classes, std::size_t height, std::size_t width,
                              Split split = Split::Train);

} // namespace normlab
