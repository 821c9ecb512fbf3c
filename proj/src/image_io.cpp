#include "mlo/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mlo {

namespace {

void expect(bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("image parse failure: ") + what);
}

// Reads one whitespace-delimited header token, skipping `#` comments.
std::string header_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

int header_int(std::istream& in) {
    const std::string tok = header_token(in);
    expect(!tok.empty(), "truncated header");
    return std::stoi(tok);
}

std::uint8_t quantize8(float v) {
    const float clamped = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

std::uint16_t quantize16(float v) {
    const float clamped = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint16_t>(std::lround(clamped * 65535.0f));
}

std::ofstream open_binary(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_binary_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return in;
}

}  // namespace

void write_ppm(std::ostream& out, int width, int height, std::span<const float> rgb01) {
    if (rgb01.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        throw ValidationError("ppm payload size mismatch");
    }
    out << "P6\n" << width << ' ' << height << "\n255\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 3);
    for (int y = 0; y < height; ++y) {
        for (int i = 0; i < width * 3; ++i) {
            row[static_cast<std::size_t>(i)] =
                quantize8(rgb01[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * 3 +
                                static_cast<std::size_t>(i)]);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("ppm write failed");
}

void write_ppm(const std::filesystem::path& path, int width, int height,
               std::span<const float> rgb01) {
    auto out = open_binary(path);
    write_ppm(out, width, height, rgb01);
}

PpmImage read_ppm(std::istream& in) {
    expect(header_token(in) == "P6", "not a P6 ppm");
    PpmImage img;
    img.width = header_int(in);
    img.height = header_int(in);
    const int maxval = header_int(in);
    expect(maxval == 255, "ppm maxval must be 255");
    // single whitespace after maxval already consumed by tokenizer
    const std::size_t n = static_cast<std::size_t>(img.width) *
                          static_cast<std::size_t>(img.height) * 3;
    std::vector<std::uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    expect(static_cast<std::size_t>(in.gcount()) == n, "truncated ppm payload");
    img.rgb01.resize(n);
    for (std::size_t i = 0; i < n; ++i) img.rgb01[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

PpmImage read_ppm(const std::filesystem::path& path) {
    auto in = open_binary_in(path);
    return read_ppm(in);
}

void write_pgm16(std::ostream& out, int width, int height, std::span<const float> gray01) {
    if (gray01.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ValidationError("pgm payload size mismatch");
    }
    out << "P5\n" << width << ' ' << height << "\n65535\n";
    std::vector<std::uint8_t> row(static_cast<std::size_t>(width) * 2);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::uint16_t v = quantize16(
                gray01[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                       static_cast<std::size_t>(x)]);
            row[static_cast<std::size_t>(x) * 2] = static_cast<std::uint8_t>(v >> 8);
            row[static_cast<std::size_t>(x) * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("pgm write failed");
}

void write_pgm16(const std::filesystem::path& path, int width, int height,
                 std::span<const float> gray01) {
    auto out = open_binary(path);
    write_pgm16(out, width, height, gray01);
}

PgmImage read_pgm16(std::istream& in) {
    expect(header_token(in) == "P5", "not a P5 pgm");
    PgmImage img;
    img.width = header_int(in);
    img.height = header_int(in);
    const int maxval = header_int(in);
    expect(maxval == 65535, "pgm maxval must be 65535");
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    std::vector<std::uint8_t> bytes(n * 2);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n * 2));
    expect(static_cast<std::size_t>(in.gcount()) == n * 2, "truncated pgm payload");
    img.gray01.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t v = static_cast<std::uint16_t>((bytes[i * 2] << 8) | bytes[i * 2 + 1]);
        img.gray01[i] = static_cast<float>(v) / 65535.0f;
    }
    return img;
}

PgmImage read_pgm16(const std::filesystem::path& path) {
    auto in = open_binary_in(path);
    return read_pgm16(in);
}

}  // namespace mlo
