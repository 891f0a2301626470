#ifndef LENET_SYNTHETIC_HPP
#define LENET_SYNTHETIC_HPP

// Desk-scale stand-in dataset: three texture classes written as PGM files in
// the load_dataset layout.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

#include "lenet/pgm.hpp"

namespace lenet::synthetic {

inline constexpr std::size_t kSide = 32;
inline constexpr std::uint8_t kBright = 255;
inline constexpr std::uint8_t kDark = 0;
inline constexpr double kNoiseSigma = 16.0;

enum class Pattern : std::size_t { HorizontalStripes = 0, VerticalStripes = 1, Checkerboard = 2 };

/// Directory names sort into pattern order: stripes-h = 0, stripes-v = 1, checkerboard = 2.
inline constexpr std::array<std::string_view, 3> kClassNames{"benign", "malignant", "normal"};

/// Noise-free image of `p`: stripes with an 8-pixel period, 4-pixel checkerboard squares.
inline GrayImage clean_pattern(Pattern p)
{
    GrayImage img{kSide, kSide, std::vector<std::uint8_t>(kSide * kSide)};
    for (std::size_t y = 0; y < kSide; ++y) {
        for (std::size_t x = 0; x < kSide; ++x) {
            bool on = false;
            switch (p) {
            case Pattern::HorizontalStripes: on = (y % 8) < 4; break;
            case Pattern::VerticalStripes: on = (x % 8) < 4; break;
            case Pattern::Checkerboard: on = ((y / 4) + (x / 4)) % 2 == 0; break;
            }
            img.pixels[y * kSide + x] = on ? kBright : kDark;
        }
    }
    return img;
}

inline GrayImage noisy_pattern(Pattern p, std::mt19937_64& rng)
{
    GrayImage img = clean_pattern(p);
    std::normal_distribution<double> noise(0.0, kNoiseSigma);
    for (auto& v : img.pixels) {
        const double n = std::round(static_cast<double>(v) + noise(rng));
        v = static_cast<std::uint8_t>(std::clamp(n, 0.0, 255.0));
    }
    return img;
}

/// Writes n_per_class images per class into <out_dir>/<split>/<class>/.
inline void gen_synthetic(const std::filesystem::path& out_dir, std::size_t n_per_class, std::uint64_t seed,
                          const std::string& split = "train")
{
    if (n_per_class == 0) throw Error(ErrorKind::InvalidConfig, "n_per_class must be >= 1");
    std::error_code ec;
    for (std::size_t c = 0; c < kClassNames.size(); ++c) {
        const auto dir = out_dir / split / std::string(kClassNames[c]);
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    }
    // One stream per split so train and validation never share noise.
    std::seed_seq seq(split.begin(), split.end());
    std::array<std::uint32_t, 2> salt{};
    seq.generate(salt.begin(), salt.end());
    std::mt19937_64 rng(seed ^ ((static_cast<std::uint64_t>(salt[0]) << 32) | salt[1]));

    for (std::size_t c = 0; c < kClassNames.size(); ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%04zu.pgm", i);
            write_pgm(out_dir / split / std::string(kClassNames[c]) / name, noisy_pattern(static_cast<Pattern>(c), rng));
        }
    }
}

} // namespace lenet::synthetic

#endif
