#include "normlab/data/batch_iterator.hpp"

#include "normlab/core/errors.hpp"
#include "normlab/core/random.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

namespace normlab {

BatchIterator::BatchIterator(const LabeledImageSet &set, std::size_t batch_size,
                             IterMode mode, std::uint64_t shuffle_seed, std::size_t epoch)
    : set_(&set), batch_size_(batch_size), mode_(mode), order_(set.size()) {
    if (batch_size == 0) throw ConfigError("batch size must be at least 1");
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (mode == IterMode::Train) {
        Rng rng(mix_seed(shuffle_seed, epoch));
        for (std::size_t i = order_.size(); i > 1; --i)
            std::swap(order_[i - 1], order_[rng.below(i)]);
    }
}

std::size_t BatchIterator::batch_count() const {
    const std::size_t n = order_.size();
    return mode_ == IterMode::Train ? n / batch_size_ : (n + batch_size_ - 1) / batch_size_;
}

bool BatchIterator::next(Batch &out) {
    const std::size_t n = order_.size();
    const std::size_t left = n - cursor_;
    if (left == 0 || (mode_ == IterMode::Train && left < batch_size_)) return false;
    const std::size_t take = std::min(left, batch_size_);

    const Shape4 &s = set_->images.shape();
    const std::size_t per = s.c * s.plane();
    out.images = Tensor4({take, s.c, s.h, s.w});
    out.labels.resize(take);
    out.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                       order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t src = out.indices[i];
        std::copy_n(set_->images.ptr() + src * per, per, out.images.ptr() + i * per);
        out.labels[i] = set_->labels[src];
    }
    cursor_ += take;
    return true;
}

} // namespace normlab
