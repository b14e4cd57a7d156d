#include "normlab/cli/csv.hpp"

#include "normlab/core/errors.hpp"

#include <charconv>
#include <cmath>

namespace normlab::cli {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, end};
}

std::string format_number(std::size_t v) {
    char buf[24];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, end};
}

CsvWriter::CsvWriter(const std::filesystem::path &path, const std::vector<std::string> &header)
    : out_(path), columns_(header.size()) {
    if (!out_) throw InputError("cannot write " + path.string());
    row(header);
}

void CsvWriter::row(const std::vector<std::string> &fields) {
    if (fields.size() != columns_)
        throw UsageError("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(columns_));
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
    out_.flush();
}

} // namespace normlab::cli
