#ifndef LENET_MODEL_HPP
#define LENET_MODEL_HPP

/**
 * @file model.hpp
 * @brief The LeNet-5 layer stack with sigmoid activations and average pooling.
 *
 *   input  (N, 1, 32, 32)
 *   conv1  5x5, 6 maps   -> (N, 6, 28, 28) -> sigmoid -> avgpool -> (N, 6, 14, 14)
 *   conv2  5x5, 16 maps  -> (N, 16, 10, 10) -> sigmoid -> avgpool -> (N, 16, 5, 5)
 *   flatten              -> (N, 400)
 *   fc1                  -> (N, 120) -> sigmoid
 *   fc2                  -> (N, 84)  -> sigmoid
 *   fc_out               -> (N, num_classes) -> softmax
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lenet/layers.hpp"
#include "lenet/tensor.hpp"

namespace lenet {

inline constexpr std::size_t kImageSize = 32;

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(zeros_like(value)) {}
};

/// Index of each parameter inside LeNetModel::params(); also the on-disk order.
enum ParamIndex : std::size_t {
    kConv1Weight,
    kConv1Bias,
    kConv2Weight,
    kConv2Bias,
    kFc1Weight,
    kFc1Bias,
    kFc2Weight,
    kFc2Bias,
    kFcOutWeight,
    kFcOutBias,
    kParamCount
};

inline constexpr std::array<std::string_view, kParamCount> kParamNames{
    "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "fc1.weight",
    "fc1.bias",     "fc2.weight", "fc2.bias",     "fc_out.weight", "fc_out.bias"};

inline std::array<Shape, kParamCount> param_shapes(std::size_t num_classes)
{
    return {Shape{6, 1, 5, 5}, Shape{6},    Shape{16, 6, 5, 5}, Shape{16},          Shape{400, 120},
            Shape{120},        Shape{120, 84}, Shape{84},       Shape{84, num_classes}, Shape{num_classes}};
}

class LeNetModel {
public:
    /// All parameters zero. Use init_params for a trainable model.
    explicit LeNetModel(std::size_t num_classes) : num_classes_(num_classes)
    {
        if (num_classes < 2)
            throw Error(ErrorKind::InvalidConfig, "num_classes must be >= 2, got " + std::to_string(num_classes));
        const auto shapes = param_shapes(num_classes);
        for (std::size_t i = 0; i < kParamCount; ++i)
            params_[i] = Param(std::string(kParamNames[i]), Tensor::zeros(shapes[i]));
    }

    [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }

    [[nodiscard]] std::span<Param, kParamCount> params() noexcept { return params_; }
    [[nodiscard]] std::span<const Param, kParamCount> params() const noexcept { return params_; }

    Param& param(ParamIndex i) noexcept { return params_[i]; }
    const Param& param(ParamIndex i) const noexcept { return params_[i]; }

    /// Bumped on every parameter update; traces recorded before an update are stale.
    [[nodiscard]] std::uint64_t generation() const noexcept { return generation_; }
    void mark_updated() noexcept { ++generation_; }

    friend bool operator==(const LeNetModel& a, const LeNetModel& b)
    {
        if (a.num_classes_ != b.num_classes_) return false;
        for (std::size_t i = 0; i < kParamCount; ++i)
            if (a.params_[i].name != b.params_[i].name || a.params_[i].value != b.params_[i].value) return false;
        return true;
    }

private:
    std::size_t num_classes_;
    std::array<Param, kParamCount> params_;
    std::uint64_t generation_ = 0;
};

/// Everything model_backward needs from one forward pass. Single use.
struct ForwardTrace {
    layers::ConvCache conv1;
    layers::SigmoidCache act1;
    layers::PoolCache pool1;
    layers::ConvCache conv2;
    layers::SigmoidCache act2;
    layers::PoolCache pool2;
    Shape pre_flatten;
    layers::DenseCache fc1;
    layers::SigmoidCache act3;
    layers::DenseCache fc2;
    layers::SigmoidCache act4;
    layers::DenseCache fc_out;
    Tensor logits;
    /// Output shape of each stage, in order: conv1, pool1, conv2, pool2, flatten, fc1, fc2, fc_out.
    std::vector<Shape> stage_shapes;

    const LeNetModel* model = nullptr;
    std::uint64_t generation = 0;
    bool consumed = true;

    [[nodiscard]] bool valid() const noexcept { return model != nullptr && !consumed; }
};

struct ForwardResult {
    Tensor probs;
    ForwardTrace trace;
};

inline void check_model_input(const Tensor& x)
{
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != kImageSize || x.dim(3) != kImageSize)
        throw Error(ErrorKind::InvalidShape, "model input must be [N,1,32,32], got " + shape_str(x.shape()));
}

inline ForwardResult model_forward(const LeNetModel& m, const Tensor& x)
{
    using namespace layers;
    check_model_input(x);
    ForwardTrace t;
    const auto& p = m.params();

    auto [c1, c1_cache] = conv2d_forward_cached(x, p[kConv1Weight].value, p[kConv1Bias].value);
    t.conv1 = std::move(c1_cache);
    t.stage_shapes.push_back(c1.shape());
    auto [a1, a1_cache] = sigmoid_forward_cached(c1);
    t.act1 = std::move(a1_cache);
    auto [p1, p1_cache] = avgpool2d_forward_cached(a1);
    t.pool1 = std::move(p1_cache);
    t.stage_shapes.push_back(p1.shape());

    auto [c2, c2_cache] = conv2d_forward_cached(p1, p[kConv2Weight].value, p[kConv2Bias].value);
    t.conv2 = std::move(c2_cache);
    t.stage_shapes.push_back(c2.shape());
    auto [a2, a2_cache] = sigmoid_forward_cached(c2);
    t.act2 = std::move(a2_cache);
    auto [p2, p2_cache] = avgpool2d_forward_cached(a2);
    t.pool2 = std::move(p2_cache);
    t.stage_shapes.push_back(p2.shape());

    t.pre_flatten = p2.shape();
    const std::size_t batch = x.dim(0);
    Tensor flat = std::move(p2).reshaped({batch, t.pre_flatten[1] * t.pre_flatten[2] * t.pre_flatten[3]});
    t.stage_shapes.push_back(flat.shape());

    auto [f1, f1_cache] = dense_forward_cached(flat, p[kFc1Weight].value, p[kFc1Bias].value);
    t.fc1 = std::move(f1_cache);
    t.stage_shapes.push_back(f1.shape());
    auto [a3, a3_cache] = sigmoid_forward_cached(f1);
    t.act3 = std::move(a3_cache);

    auto [f2, f2_cache] = dense_forward_cached(a3, p[kFc2Weight].value, p[kFc2Bias].value);
    t.fc2 = std::move(f2_cache);
    t.stage_shapes.push_back(f2.shape());
    auto [a4, a4_cache] = sigmoid_forward_cached(f2);
    t.act4 = std::move(a4_cache);

    auto [logits, fo_cache] = dense_forward_cached(a4, p[kFcOutWeight].value, p[kFcOutBias].value);
    t.fc_out = std::move(fo_cache);
    t.stage_shapes.push_back(logits.shape());

    Tensor probs = softmax(logits);
    t.logits = std::move(logits);
    t.model = &m;
    t.generation = m.generation();
    t.consumed = false;
    return {std::move(probs), std::move(t)};
}

/// Back-propagates a gradient w.r.t. the pre-softmax logits through the whole
/// stack. Every Param.grad is overwritten, not accumulated. Consumes the trace.
inline void model_backward(LeNetModel& m, ForwardTrace& trace, const Tensor& dlogits)
{
    using namespace layers;
    if (!trace.valid()) throw Error(ErrorKind::InvalidState, "model_backward: absent or already consumed trace");
    if (trace.model != &m || trace.generation != m.generation())
        throw Error(ErrorKind::InvalidState, "model_backward: trace is stale for this model");
    require_same_shape(trace.logits, dlogits, "model_backward upstream gradient");

    auto p = m.params();
    auto out = dense_backward(trace.fc_out, dlogits);
    p[kFcOutWeight].grad = std::move(out.dweight);
    p[kFcOutBias].grad = std::move(out.dbias);

    auto g2 = dense_backward(trace.fc2, sigmoid_backward(trace.act4, out.dx));
    p[kFc2Weight].grad = std::move(g2.dweight);
    p[kFc2Bias].grad = std::move(g2.dbias);

    auto g1 = dense_backward(trace.fc1, sigmoid_backward(trace.act3, g2.dx));
    p[kFc1Weight].grad = std::move(g1.dweight);
    p[kFc1Bias].grad = std::move(g1.dbias);

    Tensor dpool2 = std::move(g1.dx).reshaped(trace.pre_flatten);
    auto gc2 = conv2d_backward(trace.conv2, sigmoid_backward(trace.act2, avgpool2d_backward(trace.pool2, dpool2)));
    p[kConv2Weight].grad = std::move(gc2.dkernel);
    p[kConv2Bias].grad = std::move(gc2.dbias);

    auto gc1 = conv2d_backward(trace.conv1, sigmoid_backward(trace.act1, avgpool2d_backward(trace.pool1, gc2.dx)));
    p[kConv1Weight].grad = std::move(gc1.dkernel);
    p[kConv1Bias].grad = std::move(gc1.dbias);

    trace.consumed = true;
}

/// Glorot-uniform weights, zero biases. Deterministic per seed.
inline LeNetModel init_params(std::size_t num_classes, std::uint64_t seed)
{
    LeNetModel m(num_classes);
    std::mt19937_64 rng(seed);
    for (auto& param : m.params()) {
        const Shape& s = param.value.shape();
        if (s.size() == 1) continue;
        std::size_t fan_in = 0, fan_out = 0;
        if (s.size() == 4) {
            const std::size_t receptive = s[2] * s[3];
            fan_in = s[1] * receptive;
            fan_out = s[0] * receptive;
        } else {
            fan_in = s[0];
            fan_out = s[1];
        }
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-a, a);
        for (auto& v : param.value.values()) v = dist(rng);
    }
    return m;
}

} // namespace lenet

#endif
