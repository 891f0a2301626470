#ifndef LENET_DATASET_HPP
#define LENET_DATASET_HPP

/**
 * @file dataset.hpp
 * @brief On-disk dataset layout and seeded augmentation.
 *
 * Layout: <root>/<split>/<class_name>/<file>.pgm. Class labels follow the sorted
 * class directory names; files load in lexicographic path order.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lenet/image.hpp"
#include "lenet/model.hpp"

namespace lenet {

namespace fs = std::filesystem;

struct Sample {
    Tensor pixels; // (1, 32, 32), values in [0, 1]
    std::size_t label = 0;
    std::string source_path;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;
    std::string split;
    /// Non-fatal findings from loading (e.g. empty class directories).
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples.empty(); }

    [[nodiscard]] std::vector<std::size_t> class_counts() const
    {
        std::vector<std::size_t> counts(class_names.size(), 0);
        for (const auto& s : samples) ++counts.at(s.label);
        return counts;
    }
};

inline bool is_pgm_path(const fs::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".pnm";
}

inline std::vector<std::string> discover_classes(const fs::path& split_dir)
{
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(split_dir))
        if (entry.is_directory()) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

/**
 * Loads `<root>/<split>`. When `class_names` is given (e.g. from a checkpoint
 * or the training split) labels follow that list and missing class
 * directories become warnings; otherwise the sorted directory names are used.
 */
inline Dataset load_dataset(const fs::path& root, const std::string& split,
                            std::optional<std::vector<std::string>> class_names = std::nullopt)
{
    if (!fs::is_directory(root)) throw Error(ErrorKind::DatasetNotFound, "dataset root not found: " + root.string());
    const fs::path split_dir = root / split;
    if (!fs::is_directory(split_dir))
        throw Error(ErrorKind::DatasetNotFound, "split directory not found: " + split_dir.string());

    Dataset ds;
    ds.split = split;
    ds.class_names = class_names ? std::move(*class_names) : discover_classes(split_dir);
    if (ds.class_names.empty()) throw Error(ErrorKind::DatasetNotFound, "no class directories in " + split_dir.string());
    for (const auto& extra : discover_classes(split_dir))
        if (std::find(ds.class_names.begin(), ds.class_names.end(), extra) == ds.class_names.end())
            throw Error(ErrorKind::InvalidLabel, "class directory '" + extra + "' in " + split_dir.string() +
                                                     " is not among the known classes");

    for (std::size_t label = 0; label < ds.class_names.size(); ++label) {
        const fs::path class_dir = split_dir / ds.class_names[label];
        if (!fs::is_directory(class_dir)) {
            ds.warnings.push_back("missing class directory " + class_dir.string());
            continue;
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(class_dir))
            if (entry.is_regular_file() && is_pgm_path(entry.path())) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) ds.warnings.push_back("empty class directory " + class_dir.string());
        for (const auto& f : files) ds.samples.push_back({preprocess(read_pgm(f), kImageSize), label, f.string()});
    }
    return ds;
}

/// Stacks samples[indices] into an (N, 1, 32, 32) batch.
inline Tensor make_batch(const std::vector<Sample>& samples, std::span<const std::size_t> indices)
{
    const std::size_t per = kImageSize * kImageSize;
    std::vector<double> data;
    data.reserve(indices.size() * per);
    for (std::size_t i : indices) {
        auto v = samples.at(i).pixels.values();
        data.insert(data.end(), v.begin(), v.end());
    }
    return Tensor({indices.size(), 1, kImageSize, kImageSize}, std::move(data));
}

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentConfig {
    double hflip_prob = 0.5;
    double max_rotation_deg = 15.0;
    int max_shift_px = 2;
    std::uint64_t seed = 0;
    /// Value for pixels rotated or shifted in from outside the frame.
    double fill = 0.0;

    static AugmentConfig identity() { return {0.0, 0.0, 0, 0, 0.0}; }

    void validate() const
    {
        if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0))
            throw Error(ErrorKind::InvalidConfig, "hflip_prob must lie in [0,1]");
        if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0))
            throw Error(ErrorKind::InvalidConfig, "max_rotation_deg must lie in [0,180]");
        if (max_shift_px < 0) throw Error(ErrorKind::InvalidConfig, "max_shift_px must be >= 0");
        if (!(fill >= 0.0 && fill <= 1.0)) throw Error(ErrorKind::InvalidConfig, "fill must lie in [0,1]");
    }
};

/// Independent generator per (seed, epoch, sample index), so a sample's
/// augmentation does not depend on where shuffling put it.
inline std::mt19937_64 augment_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample_index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32),
                      static_cast<std::uint32_t>(sample_index), static_cast<std::uint32_t>(sample_index >> 32)};
    return std::mt19937_64(seq);
}

inline Tensor hflip(const Tensor& img)
{
    Tensor out = zeros_like(img);
    const std::size_t H = img.dim(1), W = img.dim(2);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) out[y * W + x] = img[y * W + (W - 1 - x)];
    return out;
}

/// Rotation by `degrees` about the image center with bilinear sampling.
inline Tensor rotate(const Tensor& img, double degrees, double fill)
{
    const std::size_t H = img.dim(1), W = img.dim(2);
    const double theta = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cy = (static_cast<double>(H) - 1.0) / 2.0, cx = (static_cast<double>(W) - 1.0) / 2.0;
    const double ymax = static_cast<double>(H - 1), xmax = static_cast<double>(W - 1);
    Tensor out = zeros_like(img);
    for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
            // Inverse map: output pixel -> source coordinate.
            const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
            const double sy = c * dy - s * dx + cy;
            const double sx = s * dy + c * dx + cx;
            if (sy < 0.0 || sy > ymax || sx < 0.0 || sx > xmax) {
                out[y * W + x] = fill;
                continue;
            }
            const auto y0 = static_cast<std::size_t>(std::floor(sy)), x0 = static_cast<std::size_t>(std::floor(sx));
            const std::size_t y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
            const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
            const double top = img[y0 * W + x0] * (1.0 - fx) + img[y0 * W + x1] * fx;
            const double bottom = img[y1 * W + x0] * (1.0 - fx) + img[y1 * W + x1] * fx;
            out[y * W + x] = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

/// out(y, x) = in(y - dy, x - dx); vacated pixels take `fill`.
inline Tensor shift(const Tensor& img, int dy, int dx, double fill)
{
    const auto H = static_cast<long>(img.dim(1)), W = static_cast<long>(img.dim(2));
    Tensor out = Tensor::filled(img.shape(), fill);
    for (long y = 0; y < H; ++y) {
        const long sy = y - dy;
        if (sy < 0 || sy >= H) continue;
        for (long x = 0; x < W; ++x) {
            const long sx = x - dx;
            if (sx < 0 || sx >= W) continue;
            out[static_cast<std::size_t>(y * W + x)] = img[static_cast<std::size_t>(sy * W + sx)];
        }
    }
    return out;
}

/**
 * Flip (probability hflip_prob), then rotate by U(-max, +max) degrees, then
 * shift by U{-max_shift..max_shift} per axis, then clamp to [0, 1]. The four
 * random draws happen in that order on every call regardless of config, so a
 * stream stays aligned across configurations. Label and path are unchanged.
 */
inline Sample augment(const Sample& s, const AugmentConfig& cfg, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double flip_draw = unit(rng);
    const double angle = (2.0 * unit(rng) - 1.0) * cfg.max_rotation_deg;
    std::uniform_int_distribution<int> shift_dist(-cfg.max_shift_px, cfg.max_shift_px);
    const int dy = shift_dist(rng);
    const int dx = shift_dist(rng);

    Sample out = s;
    if (flip_draw < cfg.hflip_prob) out.pixels = hflip(out.pixels);
    if (cfg.max_rotation_deg > 0.0 && angle != 0.0) out.pixels = rotate(out.pixels, angle, cfg.fill);
    if (dy != 0 || dx != 0) out.pixels = shift(out.pixels, dy, dx, cfg.fill);
    for (auto& v : out.pixels.values()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

} // namespace lenet

#endif
