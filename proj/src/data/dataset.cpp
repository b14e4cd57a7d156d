#include "normlab/data/dataset.hpp"

#include "normlab/core/errors.hpp"

#include <algorithm>
#include <string>

namespace normlab {

void LabeledImageSet::validate() const {
    if (images.shape().n != labels.size())
        throw InputError("image count " + std::to_string(images.shape().n) +
                         " does not match label count " + std::to_string(labels.size()));
    if (class_count < 1) throw InputError("class count must be positive");
    for (int l : labels)
        if (l < 0 || l >= class_count)
            throw InputError("label " + std::to_string(l) + " outside [0, " +
                             std::to_string(class_count) + ")");
}

LabeledImageSet LabeledImageSet::head(std::size_t count) const {
    count = std::min(count, size());
    const Shape4 &s = images.shape();
    const std::size_t per = s.c * s.plane();
    LabeledImageSet out;
    out.images = Tensor4(
        {count, s.c, s.h, s.w},
        std::vector<double>(images.data().begin(),
                            images.data().begin() + static_cast<std::ptrdiff_t>(count * per)));
    out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
    out.class_count = class_count;
    out.split = split;
    return out;
}

} // namespace normlab
