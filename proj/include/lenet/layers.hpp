#ifndef LENET_LAYERS_HPP
#define LENET_LAYERS_HPP

/**
 * @file layers.hpp
 * @brief Forward and backward passes of the classic LeNet building blocks.
 *
 * Every layer is a pair of free functions. The forward function returns its
 * output together with a cache holding exactly what the backward function
 * needs; backward functions return gradients and never touch the cache.
 *
 * Shape conventions (NCHW, row-major):
 *   conv input  (N, Cin, H, W), kernel (Cout, Cin, kh, kw), bias (Cout)
 *   conv output (N, Cout, H - kh + 1, W - kw + 1)
 *   pool output (N, C, H / 2, W / 2)
 *   dense input (N, In), weight (In, Out), bias (Out)
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "lenet/tensor.hpp"

namespace lenet::layers {

// ---------------------------------------------------------------------------
// Convolution (valid cross-correlation, stride 1)

struct ConvCache {
    Tensor input;
    Tensor kernel;
};

struct ConvGrads {
    Tensor dx;
    Tensor dkernel;
    Tensor dbias;
};

inline void check_conv_args(const Tensor& x, const Tensor& k, const Tensor& b)
{
    require_rank(x, 4, "conv2d input");
    require_rank(k, 4, "conv2d kernel");
    require_rank(b, 1, "conv2d bias");
    if (k.dim(1) != x.dim(1))
        throw Error(ErrorKind::InvalidShape,
                    "conv2d channel mismatch: input " + shape_str(x.shape()) + ", kernel " + shape_str(k.shape()));
    if (b.dim(0) != k.dim(0))
        throw Error(ErrorKind::InvalidShape, "conv2d bias " + shape_str(b.shape()) + " vs kernel " + shape_str(k.shape()));
    if (k.dim(2) > x.dim(2) || k.dim(3) > x.dim(3))
        throw Error(ErrorKind::InvalidShape,
                    "conv2d kernel " + shape_str(k.shape()) + " larger than input " + shape_str(x.shape()));
}

/// out[n,o,i,j] = b[o] + sum_{c,u,v} x[n,c,i+u,j+v] * k[o,c,u,v]
inline Tensor conv2d_forward(const Tensor& x, const Tensor& k, const Tensor& b)
{
    check_conv_args(x, k, b);
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
    const std::size_t OH = H - KH + 1, OW = W - KW + 1;

    Tensor out = Tensor::zeros({N, O, OH, OW});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t o = 0; o < O; ++o) {
            double* plane = &out.at(n, o, 0, 0);
            std::fill(plane, plane + OH * OW, b[o]);
            for (std::size_t c = 0; c < C; ++c) {
                const double* src = &x.at(n, c, 0, 0);
                for (std::size_t u = 0; u < KH; ++u) {
                    for (std::size_t v = 0; v < KW; ++v) {
                        const double kv = k.at(o, c, u, v);
                        for (std::size_t i = 0; i < OH; ++i) {
                            const double* row = src + (i + u) * W + v;
                            double* dst = plane + i * OW;
                            for (std::size_t j = 0; j < OW; ++j) dst[j] += kv * row[j];
                        }
                    }
                }
            }
        }
    }
    return out;
}

inline std::pair<Tensor, ConvCache> conv2d_forward_cached(const Tensor& x, const Tensor& k, const Tensor& b)
{
    Tensor out = conv2d_forward(x, k, b);
    return {std::move(out), ConvCache{x, k}};
}

inline ConvGrads conv2d_backward(const ConvCache& cache, const Tensor& dout)
{
    const Tensor& x = cache.input;
    const Tensor& k = cache.kernel;
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
    const std::size_t OH = H - KH + 1, OW = W - KW + 1;
    if (dout.shape() != Shape{N, O, OH, OW})
        throw Error(ErrorKind::InvalidShape,
                    "conv2d_backward: upstream " + shape_str(dout.shape()) + " vs output " + shape_str({N, O, OH, OW}));

    ConvGrads g{Tensor::zeros(x.shape()), Tensor::zeros(k.shape()), Tensor::zeros({O})};
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t o = 0; o < O; ++o) {
            const double* up = &dout.at(n, o, 0, 0);
            double bsum = 0.0;
            for (std::size_t p = 0; p < OH * OW; ++p) bsum += up[p];
            g.dbias[o] += bsum;
            for (std::size_t c = 0; c < C; ++c) {
                const double* src = &x.at(n, c, 0, 0);
                double* dsrc = &g.dx.at(n, c, 0, 0);
                for (std::size_t u = 0; u < KH; ++u) {
                    for (std::size_t v = 0; v < KW; ++v) {
                        const double kv = k.at(o, c, u, v);
                        double acc = 0.0;
                        for (std::size_t i = 0; i < OH; ++i) {
                            const double* row = src + (i + u) * W + v;
                            double* drow = dsrc + (i + u) * W + v;
                            const double* urow = up + i * OW;
                            for (std::size_t j = 0; j < OW; ++j) {
                                acc += urow[j] * row[j];
                                drow[j] += urow[j] * kv;
                            }
                        }
                        g.dkernel.at(o, c, u, v) += acc;
                    }
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Average pooling, 2x2 window, stride 2

struct PoolCache {
    Shape input_shape;
};

inline Tensor avgpool2d_forward(const Tensor& x)
{
    require_rank(x, 4, "avgpool2d input");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 != 0 || W % 2 != 0)
        throw Error(ErrorKind::InvalidShape, "avgpool2d needs even spatial dims, got " + shape_str(x.shape()));
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor out = Tensor::zeros({N, C, OH, OW});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < OH; ++i)
                for (std::size_t j = 0; j < OW; ++j)
                    out.at(n, c, i, j) = 0.25 * (x.at(n, c, 2 * i, 2 * j) + x.at(n, c, 2 * i, 2 * j + 1) +
                                                 x.at(n, c, 2 * i + 1, 2 * j) + x.at(n, c, 2 * i + 1, 2 * j + 1));
    return out;
}

inline std::pair<Tensor, PoolCache> avgpool2d_forward_cached(const Tensor& x)
{
    Tensor out = avgpool2d_forward(x);
    return {std::move(out), PoolCache{x.shape()}};
}

inline Tensor avgpool2d_backward(const PoolCache& cache, const Tensor& dout)
{
    const Shape& in = cache.input_shape;
    const Shape expected{in[0], in[1], in[2] / 2, in[3] / 2};
    if (dout.shape() != expected)
        throw Error(ErrorKind::InvalidShape,
                    "avgpool2d_backward: upstream " + shape_str(dout.shape()) + " vs output " + shape_str(expected));
    Tensor dx = Tensor::zeros(in);
    for (std::size_t n = 0; n < expected[0]; ++n)
        for (std::size_t c = 0; c < expected[1]; ++c)
            for (std::size_t i = 0; i < expected[2]; ++i)
                for (std::size_t j = 0; j < expected[3]; ++j) {
                    const double g = 0.25 * dout.at(n, c, i, j);
                    dx.at(n, c, 2 * i, 2 * j) = g;
                    dx.at(n, c, 2 * i, 2 * j + 1) = g;
                    dx.at(n, c, 2 * i + 1, 2 * j) = g;
                    dx.at(n, c, 2 * i + 1, 2 * j + 1) = g;
                }
    return dx;
}

// ---------------------------------------------------------------------------
// Sigmoid

struct SigmoidCache {
    Tensor output;
};

inline double sigmoid(double x) noexcept
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Tensor sigmoid_forward(const Tensor& x)
{
    return ew_map([](double v) { return sigmoid(v); }, x);
}

inline std::pair<Tensor, SigmoidCache> sigmoid_forward_cached(const Tensor& x)
{
    Tensor y = sigmoid_forward(x);
    SigmoidCache cache{y};
    return {std::move(y), std::move(cache)};
}

/// dx = dy * y * (1 - y)
inline Tensor sigmoid_backward(const SigmoidCache& cache, const Tensor& dy)
{
    require_same_shape(cache.output, dy, "sigmoid_backward");
    Tensor dx = zeros_like(dy);
    for (std::size_t i = 0; i < dx.size(); ++i) {
        const double y = cache.output[i];
        dx[i] = dy[i] * y * (1.0 - y);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Fully connected

struct DenseCache {
    Tensor input;
    Tensor weight;
};

struct DenseGrads {
    Tensor dx;
    Tensor dweight;
    Tensor dbias;
};

/// out = x . w + b, bias added to every row
inline Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b)
{
    require_rank(x, 2, "dense input");
    require_rank(w, 2, "dense weight");
    require_rank(b, 1, "dense bias");
    if (x.dim(1) != w.dim(0) || b.dim(0) != w.dim(1))
        throw Error(ErrorKind::InvalidShape, "dense: input " + shape_str(x.shape()) + ", weight " +
                                                 shape_str(w.shape()) + ", bias " + shape_str(b.shape()));
    Tensor out = matmul(x, w);
    const std::size_t rows = out.dim(0), cols = out.dim(1);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += b[j];
    return out;
}

inline std::pair<Tensor, DenseCache> dense_forward_cached(const Tensor& x, const Tensor& w, const Tensor& b)
{
    Tensor out = dense_forward(x, w, b);
    return {std::move(out), DenseCache{x, w}};
}

/// dw = x^T . dout, dx = dout . w^T, db = column sums of dout
inline DenseGrads dense_backward(const DenseCache& cache, const Tensor& dout)
{
    const Shape expected{cache.input.dim(0), cache.weight.dim(1)};
    if (dout.shape() != expected)
        throw Error(ErrorKind::InvalidShape,
                    "dense_backward: upstream " + shape_str(dout.shape()) + " vs output " + shape_str(expected));
    DenseGrads g{matmul(dout, transpose(cache.weight)), matmul(transpose(cache.input), dout),
                 Tensor::zeros({expected[1]})};
    for (std::size_t i = 0; i < expected[0]; ++i)
        for (std::size_t j = 0; j < expected[1]; ++j) g.dbias[j] += dout.at(i, j);
    return g;
}

// ---------------------------------------------------------------------------
// Softmax over the last axis of an (N, K) tensor, max-shifted

inline Tensor softmax(const Tensor& z)
{
    require_rank(z, 2, "softmax");
    const std::size_t N = z.dim(0), K = z.dim(1);
    Tensor p = zeros_like(z);
    for (std::size_t i = 0; i < N; ++i) {
        double m = z.at(i, 0);
        for (std::size_t k = 1; k < K; ++k) m = std::max(m, z.at(i, k));
        double sum = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double e = std::exp(z.at(i, k) - m);
            p.at(i, k) = e;
            sum += e;
        }
        for (std::size_t k = 0; k < K; ++k) p.at(i, k) /= sum;
    }
    return p;
}

/// Pulls a gradient w.r.t. softmax probabilities back to the logits:
/// dz[i,k] = p[i,k] * (dp[i,k] - sum_j dp[i,j] p[i,j])
inline Tensor softmax_backward(const Tensor& probs, const Tensor& dprobs)
{
    require_same_shape(probs, dprobs, "softmax_backward");
    const std::size_t N = probs.dim(0), K = probs.dim(1);
    Tensor dz = zeros_like(probs);
    for (std::size_t i = 0; i < N; ++i) {
        double dot = 0.0;
        for (std::size_t k = 0; k < K; ++k) dot += dprobs.at(i, k) * probs.at(i, k);
        for (std::size_t k = 0; k < K; ++k) dz.at(i, k) = probs.at(i, k) * (dprobs.at(i, k) - dot);
    }
    return dz;
}

} // namespace lenet::layers

#endif
