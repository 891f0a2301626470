#include <gtest/gtest.h>

#include "lenet/loss.hpp"
#include "lenet/model.hpp"
#include "oracles.hpp"

using namespace lenet;

TEST(Model, ShapeChain)
{
    const LeNetModel m = init_params(3, 1);
    std::mt19937_64 rng(1);
    const auto r = model_forward(m, oracle::random_tensor({5, 1, 32, 32}, rng, 0, 1));
    const std::vector<Shape> want{{5, 6, 28, 28}, {5, 6, 14, 14}, {5, 16, 10, 10}, {5, 16, 5, 5},
                                  {5, 400},       {5, 120},       {5, 84},         {5, 3}};
    EXPECT_EQ(r.trace.stage_shapes, want);
    EXPECT_EQ(r.probs.shape(), (Shape{5, 3}));
}

TEST(Model, WrongInputShapesRaise)
{
    const LeNetModel m = init_params(3, 1);
    for (const Shape& s : {Shape{1, 1, 28, 28}, Shape{1, 3, 32, 32}, Shape{1, 32, 32}, Shape{1, 1, 32, 33},
                           Shape{1, 1, 64, 64}}) {
        try {
            (void)model_forward(m, Tensor::zeros(s));
            ADD_FAILURE() << "accepted " << shape_str(s);
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::InvalidShape);
        }
    }
}

TEST(Model, ParamShapesAndNames)
{
    const LeNetModel m(4);
    const auto p = m.params();
    EXPECT_EQ(p[kConv1Weight].value.shape(), (Shape{6, 1, 5, 5}));
    EXPECT_EQ(p[kConv2Weight].value.shape(), (Shape{16, 6, 5, 5}));
    EXPECT_EQ(p[kFc1Weight].value.shape(), (Shape{400, 120}));
    EXPECT_EQ(p[kFc2Weight].value.shape(), (Shape{120, 84}));
    EXPECT_EQ(p[kFcOutWeight].value.shape(), (Shape{84, 4}));
    EXPECT_EQ(p[kFcOutBias].value.shape(), (Shape{4}));
    EXPECT_EQ(p[kFc1Bias].name, "fc1.bias");
    EXPECT_THROW(LeNetModel(1), Error);
}

TEST(Model, GlorotInitIsSeededAndBounded)
{
    const LeNetModel a = init_params(3, 9), b = init_params(3, 9), c = init_params(3, 10);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == c);
    const auto p = a.params();
    const double bound_fc1 = std::sqrt(6.0 / (400 + 120));
    const double bound_conv2 = std::sqrt(6.0 / (6 * 25 + 16 * 25));
    for (double v : p[kFc1Weight].value.values()) EXPECT_LE(std::abs(v), bound_fc1);
    for (double v : p[kConv2Weight].value.values()) EXPECT_LE(std::abs(v), bound_conv2);
    for (double v : p[kFc2Bias].value.values()) EXPECT_EQ(v, 0.0);
}

TEST(Model, BackwardNeedsFreshTrace)
{
    LeNetModel m = init_params(3, 2);
    ForwardTrace empty;
    EXPECT_THROW(model_backward(m, empty, Tensor::zeros({1, 3})), Error);

    auto r = model_forward(m, Tensor::filled({1, 1, 32, 32}, 0.5));
    model_backward(m, r.trace, Tensor::filled({1, 3}, 0.1));
    try {
        model_backward(m, r.trace, Tensor::filled({1, 3}, 0.1));
        ADD_FAILURE() << "trace reused";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidState);
    }

    auto stale = model_forward(m, Tensor::filled({1, 1, 32, 32}, 0.5));
    m.mark_updated();
    EXPECT_THROW(model_backward(m, stale.trace, Tensor::filled({1, 3}, 0.1)), Error);

    LeNetModel other = init_params(3, 2);
    auto foreign = model_forward(m, Tensor::filled({1, 1, 32, 32}, 0.5));
    EXPECT_THROW(model_backward(other, foreign.trace, Tensor::filled({1, 3}, 0.1)), Error);
}

TEST(Model, GradientsAreOverwrittenNotAccumulated)
{
    LeNetModel m = init_params(3, 4);
    std::mt19937_64 rng(4);
    const Tensor x = oracle::random_tensor({2, 1, 32, 32}, rng, 0, 1);
    const Tensor d = oracle::random_tensor({2, 3}, rng);
    auto r1 = model_forward(m, x);
    model_backward(m, r1.trace, d);
    const Tensor first = m.params()[kConv1Weight].grad;
    auto r2 = model_forward(m, x);
    model_backward(m, r2.trace, d);
    EXPECT_EQ(m.params()[kConv1Weight].grad, first);
}

// Whole network through the loss, sampling entries of every parameter.
TEST(Model, EndToEndGradientMatchesFiniteDifferences)
{
    for (LossKind kind : {LossKind::CrossEntropy, LossKind::Focal}) {
        LeNetModel m = init_params(3, 5);
        std::mt19937_64 rng(5);
        const Tensor x = oracle::random_tensor({2, 1, 32, 32}, rng, 0, 1);
        const std::vector<std::size_t> t{0, 2};
        const FocalConfig fc{2.0, {0.5, 1.0, 1.5}};
        auto loss = [&] { return compute_loss(kind, model_forward(m, x).trace.logits, t, fc).mean_loss; };
        auto r = model_forward(m, x);
        model_backward(m, r.trace, compute_loss(kind, r.trace.logits, t, fc).dlogits);
        for (std::size_t pi = 0; pi < kParamCount; ++pi) {
            Param& p = m.params()[pi];
            std::uniform_int_distribution<std::size_t> pick(0, p.value.size() - 1);
            for (int s = 0; s < 6; ++s) {
                const std::size_t i = pick(rng);
                const double orig = p.value[i];
                p.value[i] = orig + 1e-5;
                const double up = loss();
                p.value[i] = orig - 1e-5;
                const double down = loss();
                p.value[i] = orig;
                EXPECT_LE(oracle::rel_err(p.grad[i], (up - down) / 2e-5), 1e-4) << p.name << "[" << i << "]";
            }
        }
    }
}
