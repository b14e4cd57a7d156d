#include "normlab/cli/checkpoint.hpp"

#include "normlab/core/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

namespace normlab::cli {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

struct Blob {
    std::string name;
    std::uint32_t role;
    std::vector<std::size_t> dims;
    std::span<double> values;
};

std::vector<Blob> blobs_of(Model &model) {
    std::vector<Blob> out;
    for (auto &p : model.params()) out.push_back({p.name, 0, p.dims, p.value});
    for (auto &b : model.buffers()) out.push_back({b.name, 1, {b.value.size()}, b.value});
    return out;
}

template <class T> void put(std::ofstream &out, T v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

class Reader {
  public:
    Reader(const std::filesystem::path &path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw InputError("cannot open checkpoint " + path.string());
    }
    template <class T> T get() {
        T v{};
        read(&v, sizeof v);
        return v;
    }
    void read(void *dst, std::size_t n) {
        if (!in_.read(static_cast<char *>(dst), static_cast<std::streamsize>(n)))
            fail("truncated");
    }
    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
    [[noreturn]] void fail(const std::string &why) {
        throw FormatError("checkpoint " + path_.string() + ": " + why);
    }

  private:
    std::ifstream in_;
    std::filesystem::path path_;
};

} // namespace

void save_checkpoint(const std::filesystem::path &path, Model &model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint " + path.string());
    const auto blobs = blobs_of(model);
    out.write(kCheckpointMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(blobs.size()));
    for (const auto &b : blobs) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
        out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
        put<std::uint32_t>(out, b.role);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(b.dims.size()));
        for (std::size_t d : b.dims) put<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char *>(b.values.data()),
                  static_cast<std::streamsize>(b.values.size_bytes()));
    }
    if (!out) throw InputError("failed writing checkpoint " + path.string());
}

void load_checkpoint(const std::filesystem::path &path, Model &model) {
    Reader in(path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) in.fail("bad magic");
    if (in.get<std::uint32_t>() != kCheckpointVersion) in.fail("unsupported version");

    auto blobs = blobs_of(model);
    if (in.get<std::uint32_t>() != blobs.size()) in.fail("blob count does not match the model");

    // Stage everything first so a mismatch leaves the model untouched.
    std::vector<std::vector<double>> staged;
    for (const auto &b : blobs) {
        std::string name(in.get<std::uint32_t>(), '\0');
        in.read(name.data(), name.size());
        if (name != b.name) in.fail("expected blob '" + b.name + "', found '" + name + "'");
        if (in.get<std::uint32_t>() != b.role) in.fail("role mismatch for '" + name + "'");
        std::vector<std::size_t> dims(in.get<std::uint32_t>());
        for (auto &d : dims) d = in.get<std::uint64_t>();
        if (dims != b.dims) in.fail("shape mismatch for '" + name + "'");
        std::vector<double> values(b.values.size());
        in.read(values.data(), values.size() * sizeof(double));
        staged.push_back(std::move(values));
    }
    if (!in.at_end()) in.fail("trailing bytes");
    for (std::size_t i = 0; i < blobs.size(); ++i) std::ranges::copy(staged[i], blobs[i].values.begin());
}

} // namespace normlab::cli
