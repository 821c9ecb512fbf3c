#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mlo/errors.hpp"

namespace mlo {

/// MLOT tensor container:
///   magic "MLOT" | u32 version = 1 | u8 dtype (1 = f32, 2 = f64) | u8 ndim |
///   ndim x u64 shape | row-major payload.
/// All integers and payload scalars are little-endian.
struct MlotTensor {
    std::uint8_t dtype = 1;  // 1 = f32, 2 = f64
    std::vector<std::uint64_t> shape;
    std::vector<float> f32;
    std::vector<double> f64;

    std::uint64_t element_count() const {
        std::uint64_t n = 1;
        for (std::uint64_t s : shape) n *= s;
        return n;
    }
};

inline constexpr std::uint32_t kMlotVersion = 1;
inline constexpr std::uint8_t kMlotF32 = 1;
inline constexpr std::uint8_t kMlotF64 = 2;

void write_mlot(std::ostream& out, std::span<const std::uint64_t> shape,
                std::span<const float> data);
void write_mlot(std::ostream& out, std::span<const std::uint64_t> shape,
                std::span<const double> data);
void write_mlot(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                std::span<const float> data);
void write_mlot(const std::filesystem::path& path, std::span<const std::uint64_t> shape,
                std::span<const double> data);

MlotTensor read_mlot(std::istream& in);
MlotTensor read_mlot(const std::filesystem::path& path);

}  // namespace mlo
