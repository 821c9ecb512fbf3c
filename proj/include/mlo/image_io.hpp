#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "mlo/errors.hpp"

namespace mlo {

/// Binary PPM (P6), 8-bit. rgb01 holds H*W*3 values in [0,1]; values are
/// rounded to the nearest byte.
void write_ppm(std::ostream& out, int width, int height, std::span<const float> rgb01);
void write_ppm(const std::filesystem::path& path, int width, int height,
               std::span<const float> rgb01);

struct PpmImage {
    int width = 0;
    int height = 0;
    std::vector<float> rgb01;  // H*W*3
};
PpmImage read_ppm(std::istream& in);
PpmImage read_ppm(const std::filesystem::path& path);

/// Binary PGM (P5) with maxval 65535; samples are stored big-endian as the
/// format requires. gray01 holds H*W values in [0,1] scaled by 65535.
void write_pgm16(std::ostream& out, int width, int height, std::span<const float> gray01);
void write_pgm16(const std::filesystem::path& path, int width, int height,
                 std::span<const float> gray01);

struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<float> gray01;  // H*W
};
PgmImage read_pgm16(std::istream& in);
PgmImage read_pgm16(const std::filesystem::path& path);

}  // namespace mlo
