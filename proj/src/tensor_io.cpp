#include "mlo/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <ostream>

namespace mlo {

static_assert(std::endian::native == std::endian::little,
              "MLOT serialization assumes a little-endian host");

namespace {

void write_header(std::ostream& out, std::uint8_t dtype, std::span<const std::uint64_t> shape) {
    out.write("MLOT", 4);
    const std::uint32_t version = kMlotVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&dtype), 1);
    const std::uint8_t ndim = static_cast<std::uint8_t>(shape.size());
    out.write(reinterpret_cast<const char*>(&ndim), 1);
    for (std::uint64_t s : shape) {
        out.write(reinterpret_cast<const char*>(&s), 8);
    }
}

std::uint64_t checked_count(std::span<const std::uint64_t> shape, std::size_t payload,
                            const char* what) {
    std::uint64_t n = 1;
    for (std::uint64_t s : shape) n *= s;
    if (n != payload) throw ValidationError(std::string(what) + ": shape/payload mismatch");
    return n;
}

}  // namespace

void write_mlot(std::ostream& out, std::span<const std::uint64_t> shape,
                std::span<const float> data) {
    checked_count(shape, data.size(), "mlot f32");
    write_header(out, kMlotF32, shape);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * 4));
    if (!out) throw IoError("mlot write failed");
}

void write_mlot(std::ostream& out, std::span<const std::uint64_t> shape,
                std::span<const double> data) {
    checked_count(shape, data.size(), "mlot f64");
    write_header(out, kMlotF64, shape);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * 8));
    if (!out) throw IoError("mlot write failed");
}

void write_mlot(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                std::span<const float> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    write_mlot(out, shape, data);
}

void write_mlot(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                std::span<const double> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    write_mlot(out, shape, data);
}

MlotTensor read_mlot(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "MLOT", 4) != 0) {
        throw ValidationError("not an MLOT tensor (bad magic)");
    }
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != kMlotVersion) {
        throw ValidationError("unsupported MLOT version " + std::to_string(version));
    }
    MlotTensor t;
    std::uint8_t ndim = 0;
    in.read(reinterpret_cast<char*>(&t.dtype), 1);
    in.read(reinterpret_cast<char*>(&ndim), 1);
    if (t.dtype != kMlotF32 && t.dtype != kMlotF64) {
        throw ValidationError("unsupported MLOT dtype " + std::to_string(t.dtype));
    }
    t.shape.resize(ndim);
    for (std::uint8_t i = 0; i < ndim; ++i) {
        in.read(reinterpret_cast<char*>(&t.shape[i]), 8);
    }
    if (!in) throw ValidationError("truncated MLOT header");

    const std::uint64_t n = t.element_count();
    if (t.dtype == kMlotF32) {
        t.f32.resize(n);
        in.read(reinterpret_cast<char*>(t.f32.data()), static_cast<std::streamsize>(n * 4));
        if (static_cast<std::uint64_t>(in.gcount()) != n * 4) {
            throw ValidationError("truncated MLOT payload");
        }
    } else {
        t.f64.resize(n);
        in.read(reinterpret_cast<char*>(t.f64.data()), static_cast<std::streamsize>(n * 8));
        if (static_cast<std::uint64_t>(in.gcount()) != n * 8) {
            throw ValidationError("truncated MLOT payload");
        }
    }
    return t;
}

MlotTensor read_mlot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return read_mlot(in);
}

}  // namespace mlo
