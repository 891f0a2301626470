#ifndef LENET_PGM_HPP
#define LENET_PGM_HPP

// Binary PGM ("P5") reader/writer for 8-bit grayscale images.

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "lenet/error.hpp"

namespace lenet {

struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels; // row-major, height * width

    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

namespace detail {

class PgmHeaderReader {
public:
    explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t read_uint(const char* field)
    {
        skip_space_and_comments();
        const std::size_t start = pos_;
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            if (value > (1u << 24)) throw Error(ErrorKind::ImageDecodeError, std::string("PGM ") + field + " too large");
            ++pos_;
        }
        if (pos_ == start) throw Error(ErrorKind::ImageDecodeError, std::string("PGM header: missing ") + field);
        return value;
    }

    std::size_t& pos() { return pos_; }
    [[nodiscard]] std::span<const std::uint8_t> bytes() const { return bytes_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Decodes a binary PGM. Samples are rescaled to 0..255 when maxval < 255.
inline GrayImage decode_pgm(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw Error(ErrorKind::ImageDecodeError, "not a binary PGM (magic P5 expected)");
    detail::PgmHeaderReader r(bytes.subspan(2));
    GrayImage img;
    img.width = r.read_uint("width");
    img.height = r.read_uint("height");
    const std::size_t maxval = r.read_uint("maxval");
    if (img.width == 0 || img.height == 0) throw Error(ErrorKind::ImageDecodeError, "PGM has a zero dimension");
    if (maxval == 0 || maxval > 255)
        throw Error(ErrorKind::ImageDecodeError, "PGM maxval " + std::to_string(maxval) + " unsupported (1..255)");
    auto& pos = r.pos();
    if (pos >= r.bytes().size() || !std::isspace(r.bytes()[pos]))
        throw Error(ErrorKind::ImageDecodeError, "PGM header not terminated by whitespace");
    ++pos;

    const std::size_t n = img.width * img.height;
    const auto payload = r.bytes().subspan(pos);
    if (payload.size() < n)
        throw Error(ErrorKind::ImageDecodeError, "PGM payload truncated: " + std::to_string(payload.size()) + " of " +
                                                     std::to_string(n) + " bytes");
    img.pixels.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(n));
    if (maxval != 255) {
        for (auto& v : img.pixels) {
            if (v > maxval) throw Error(ErrorKind::ImageDecodeError, "PGM sample exceeds maxval");
            v = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
        }
    }
    return img;
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img)
{
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path.string());
}

inline GrayImage read_pgm(const std::filesystem::path& path)
{
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::ImageDecodeError, path.string() + ": " + e.what());
    }
    try {
        return decode_pgm(bytes);
    } catch (const Error& e) {
        throw Error(ErrorKind::ImageDecodeError, path.string() + ": " + e.what());
    }
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) { write_file_bytes(path, encode_pgm(img)); }

} // namespace lenet

#endif
