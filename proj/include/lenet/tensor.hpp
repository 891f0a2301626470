#ifndef LENET_TENSOR_HPP
#define LENET_TENSOR_HPP

/**
 * @file tensor.hpp
 * @brief Dense row-major N-dimensional array of doubles.
 *
 * The only numeric container in the engine. Operations never broadcast:
 * mismatched shapes raise ErrorKind::InvalidShape. Tensors are plain values;
 * every operation returns a fresh tensor.
 */

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lenet/error.hpp"

namespace lenet {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

inline std::size_t element_count(const Shape& shape)
{
    if (shape.empty()) throw Error(ErrorKind::InvalidShape, "empty shape");
    std::size_t n = 1;
    for (auto d : shape) {
        if (d == 0) throw Error(ErrorKind::InvalidShape, "zero dimension in " + shape_str(shape));
        n *= d;
    }
    return n;
}

class Tensor {
public:
    Tensor() = default;

    /// Takes ownership of `data`; its length must equal the product of `shape`.
    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
    {
        if (element_count(shape_) != data_.size())
            throw Error(ErrorKind::InvalidShape,
                        "shape " + shape_str(shape_) + " does not hold " + std::to_string(data_.size()) + " values");
    }

    static Tensor zeros(const Shape& shape) { return filled(shape, 0.0); }

    static Tensor filled(const Shape& shape, double value)
    {
        return Tensor(shape, std::vector<double>(element_count(shape), value));
    }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& vec() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    // Row-major index helpers for the ranks the layers use.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const double& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
    {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    const double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const
    {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    [[nodiscard]] Tensor reshaped(const Shape& new_shape) const&
    {
        return Tensor(check_reshape(new_shape), data_);
    }
    [[nodiscard]] Tensor reshaped(const Shape& new_shape) &&
    {
        Shape checked = check_reshape(new_shape);
        return Tensor(std::move(checked), std::move(data_));
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape check_reshape(const Shape& new_shape) const
    {
        if (element_count(new_shape) != data_.size())
            throw Error(ErrorKind::InvalidShape, "cannot reshape " + shape_str(shape_) + " to " + shape_str(new_shape));
        return new_shape;
    }

    Shape shape_;
    std::vector<double> data_;
};

inline Tensor zeros(const Shape& shape) { return Tensor::zeros(shape); }
inline Tensor zeros_like(const Tensor& t) { return Tensor::zeros(t.shape()); }
inline Tensor reshape(const Tensor& t, const Shape& new_shape) { return t.reshaped(new_shape); }

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what)
{
    if (a.shape() != b.shape())
        throw Error(ErrorKind::InvalidShape,
                    std::string(what) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* what)
{
    if (t.rank() != rank)
        throw Error(ErrorKind::InvalidShape,
                    std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
}

enum class BinaryOp { Add, Sub, Mul };

inline Tensor ew_binary(BinaryOp op, const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "elementwise op");
    std::vector<double> out(a.size());
    auto x = a.values();
    auto y = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        switch (op) {
        case BinaryOp::Add: out[i] = x[i] + y[i]; break;
        case BinaryOp::Sub: out[i] = x[i] - y[i]; break;
        case BinaryOp::Mul: out[i] = x[i] * y[i]; break;
        }
    }
    return Tensor(a.shape(), std::move(out));
}

inline Tensor add(const Tensor& a, const Tensor& b) { return ew_binary(BinaryOp::Add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return ew_binary(BinaryOp::Sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return ew_binary(BinaryOp::Mul, a, b); }

template <typename F>
    requires std::is_invocable_r_v<double, F, double>
Tensor ew_map(F&& f, const Tensor& a)
{
    std::vector<double> out(a.size());
    auto x = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::invoke(f, x[i]);
    return Tensor(a.shape(), std::move(out));
}

/// Scalar-vs-tensor product; the explicit stand-in for broadcasting.
inline Tensor scale(const Tensor& a, double s)
{
    return ew_map([s](double v) { return v * s; }, a);
}

/// c[i,j] = sum_k a[i,k] * b[k,j]
inline Tensor matmul(const Tensor& a, const Tensor& b)
{
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k)
        throw Error(ErrorKind::InvalidShape, "matmul inner dims: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    std::vector<double> out(m * n, 0.0);
    auto x = a.values();
    auto y = b.values();
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = x[i * k + p];
            const double* brow = y.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
        }
    }
    return Tensor({m, n}, std::move(out));
}

inline Tensor transpose(const Tensor& a)
{
    require_rank(a, 2, "transpose");
    const std::size_t m = a.dim(0), n = a.dim(1);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i, j);
    return Tensor({n, m}, std::move(out));
}

} // namespace lenet

#endif
