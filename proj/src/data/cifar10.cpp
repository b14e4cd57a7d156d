#include "normlab/data/cifar10.hpp"

#include "normlab/core/errors.hpp"

#include <fstream>
#include <vector>

namespace normlab::cifar10 {

void decode_records(std::span<const std::uint8_t> bytes, Scaling scaling,
                    LabeledImageSet &out, std::size_t offset) {
    const std::size_t records = bytes.size() / kRecordBytes;
    if (offset + records > out.labels.size() || out.images.shape().n != out.labels.size())
        throw UsageError("decode_records: destination too small");
    for (std::size_t r = 0; r < records; ++r) {
        const std::uint8_t *rec = bytes.data() + r * kRecordBytes;
        if (rec[0] >= kClasses)
            throw FormatError("record " + std::to_string(r) + " has label " +
                              std::to_string(rec[0]) + ", expected 0..9");
        out.labels[offset + r] = rec[0];
        double *img = out.images.ptr() + (offset + r) * kPixelBytes;
        for (std::size_t c = 0; c < 3; ++c) {
            const std::uint8_t *src = rec + 1 + c * kSide * kSide;
            double *dst = img + c * kSide * kSide;
            for (std::size_t i = 0; i < kSide * kSide; ++i) {
                const double v = static_cast<double>(src[i]) / 255.0;
                dst[i] = scaling == Scaling::Standardized ? (v - kMean[c]) / kStd[c] : v;
            }
        }
    }
}

namespace {

std::vector<std::uint8_t> read_exact(const std::filesystem::path &file) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(file, ec);
    if (ec) throw InputError("cannot open CIFAR-10 file " + file.string());
    if (size != kFileBytes)
        throw FormatError(file.string() + " is " + std::to_string(size) +
                          " bytes, expected " + std::to_string(kFileBytes));
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputError("cannot open CIFAR-10 file " + file.string());
    std::vector<std::uint8_t> bytes(kFileBytes);
    in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw FormatError("short read on " + file.string());
    return bytes;
}

LabeledImageSet allocate(std::size_t n, Split split) {
    LabeledImageSet set;
    set.images = Tensor4({n, 3, kSide, kSide});
    set.labels.assign(n, 0);
    set.class_count = kClasses;
    set.split = split;
    return set;
}

} // namespace

LabeledImageSet read_batch_file(const std::filesystem::path &file, Split split,
                                Scaling scaling) {
    const auto bytes = read_exact(file);
    LabeledImageSet set = allocate(kRecordsPerFile, split);
    decode_records(bytes, scaling, set, 0);
    return set;
}

Splits load(const std::filesystem::path &dir, Scaling scaling) {
    if (!std::filesystem::is_directory(dir))
        throw InputError("CIFAR-10 directory not found: " + dir.string());
    Splits s{allocate(kTrainFiles.size() * kRecordsPerFile, Split::Train),
             allocate(kRecordsPerFile, Split::Val)};
    for (std::size_t f = 0; f < kTrainFiles.size(); ++f) {
        const auto bytes = read_exact(dir / kTrainFiles[f]);
        decode_records(bytes, scaling, s.train, f * kRecordsPerFile);
    }
    decode_records(read_exact(dir / kTestFile), scaling, s.val, 0);
    return s;
}

} // namespace normlab::cifar10
