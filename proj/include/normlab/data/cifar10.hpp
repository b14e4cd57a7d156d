#pragma once

#include "normlab/data/dataset.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

namespace normlab::cifar10 {

// Binary layout: 10000 records per file, each a label byte followed by
// 3072 pixel bytes (R plane, G plane, B plane; each 32x32 row-major).
inline constexpr std::size_t kSide = 32;
inline constexpr std::size_t kPixelBytes = 3 * kSide * kSide;
inline constexpr std::size_t kRecordBytes = 1 + kPixelBytes;
inline constexpr std::size_t kRecordsPerFile = 10000;
inline constexpr std::size_t kFileBytes = kRecordBytes * kRecordsPerFile;
inline constexpr int kClasses = 10;

inline constexpr std::array<double, 3> kMean{0.4914, 0.4822, 0.4465};
inline constexpr std::array<double, 3> kStd{0.2470, 0.2435, 0.2616};

inline constexpr std::array<const char *, 5> kTrainFiles{
    "data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
    "data_batch_4.bin", "data_batch_5.bin"};
inline constexpr const char *kTestFile = "test_batch.bin";

enum class Scaling { UnitRange, Standardized };

// Decodes whole records into images[(i, c, y, x)] and labels[i], starting at
// sample `offset`. Pixels map byte/255 to [0, 1]; Standardized then applies
// (v - kMean[c]) / kStd[c]. Throws FormatError on a label >= 10.
void decode_records(std::span<const std::uint8_t> bytes, Scaling scaling,
                    LabeledImageSet &out, std::size_t offset);

// One batch file; throws FormatError naming the file unless it is exactly
// kFileBytes long.
LabeledImageSet read_batch_file(const std::filesystem::path &file, Split split,
                                Scaling scaling = Scaling::Standardized);

struct Splits {
    LabeledImageSet train; // 50000, data_batch_1..5
    LabeledImageSet val;   // 10000, test_batch
};

// Throws InputError if the directory or a file is missing.
Splits load(const std::filesystem::path &dir, Scaling scaling = Scaling::Standardized);

} // namespace normlab::cifar10
