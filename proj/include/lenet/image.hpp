#ifndef LENET_IMAGE_HPP
#define LENET_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "lenet/pgm.hpp"
#include "lenet/tensor.hpp"

namespace lenet {

/// v / 255 per pixel, as an (H, W) tensor.
inline Tensor normalize(const GrayImage& img)
{
    Tensor t = Tensor::zeros({img.height, img.width});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) t[i] = static_cast<double>(img.pixels[i]) / 255.0;
    return t;
}

/**
 * Bilinear resampling of an (H, W) image to (out_h, out_w) with the
 * half-pixel-center convention:
 *   src_y = (i + 0.5) * H / out_h - 0.5, clamped to [0, H - 1]
 * and likewise for columns. Equal sizes give the identity.
 */
inline Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w)
{
    require_rank(img, 2, "resize_bilinear");
    const std::size_t H = img.dim(0), W = img.dim(1);
    if (H < 2 || W < 2) throw Error(ErrorKind::InvalidShape, "resize_bilinear needs H, W >= 2, got " + shape_str(img.shape()));
    if (out_h == 0 || out_w == 0) throw Error(ErrorKind::InvalidShape, "resize_bilinear: zero output size");

    auto source = [](std::size_t i, std::size_t in, std::size_t out, std::size_t& lo, std::size_t& hi, double& frac) {
        double s = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(in - 1));
        lo = static_cast<std::size_t>(std::floor(s));
        hi = std::min(lo + 1, in - 1);
        frac = s - static_cast<double>(lo);
    };

    Tensor out = Tensor::zeros({out_h, out_w});
    for (std::size_t i = 0; i < out_h; ++i) {
        std::size_t y0, y1;
        double fy;
        source(i, H, out_h, y0, y1, fy);
        for (std::size_t j = 0; j < out_w; ++j) {
            std::size_t x0, x1;
            double fx;
            source(j, W, out_w, x0, x1, fx);
            const double top = img.at(y0, x0) * (1.0 - fx) + img.at(y0, x1) * fx;
            const double bottom = img.at(y1, x0) * (1.0 - fx) + img.at(y1, x1) * fx;
            out.at(i, j) = top * (1.0 - fy) + bottom * fy;
        }
    }
    return out;
}

/// Decoded 8-bit image -> (1, 32, 32) tensor in [0, 1].
inline Tensor preprocess(const GrayImage& img, std::size_t size = 32)
{
    Tensor t = resize_bilinear(normalize(img), size, size);
    for (auto& v : t.values()) v = std::clamp(v, 0.0, 1.0);
    return std::move(t).reshaped({1, size, size});
}

} // namespace lenet

#endif
