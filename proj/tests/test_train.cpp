#include <gtest/gtest.h>

#include "lenet/synthetic.hpp"
#include "lenet/train.hpp"
#include "oracles.hpp"

using namespace lenet;

namespace {

struct SyntheticData {
    oracle::TempDir dir{"train"};
    Dataset train_set, val_set;
    explicit SyntheticData(std::size_t n, std::uint64_t seed = 42)
    {
        synthetic::gen_synthetic(dir.path(), n, seed, "train");
        synthetic::gen_synthetic(dir.path(), (n + 4) / 5, seed, "validation");
        train_set = load_dataset(dir.path(), "train");
        val_set = load_dataset(dir.path(), "validation", train_set.class_names);
    }
};

TrainConfig small_config()
{
    TrainConfig c;
    c.epochs = 3;
    c.batch_size = 4;
    c.learning_rate = 0.1;
    c.seed = 3;
    return c;
}

} // namespace

TEST(Sgd, SingleWeightDefinition)
{
    LeNetModel m(2);
    for (auto& p : m.params()) p.grad = zeros_like(p.value);
    m.param(kFcOutWeight).value[0] = 1.0;
    m.param(kFcOutWeight).grad[0] = 0.5;
    sgd_step(m, 0.1);
    EXPECT_EQ(m.param(kFcOutWeight).value[0], 0.95);
}

TEST(Sgd, ZeroRateIsIdentityAndTwoStepsEqualDoubleRate)
{
    LeNetModel a = init_params(3, 1);
    std::mt19937_64 rng(1);
    auto r = model_forward(a, oracle::random_tensor({2, 1, 32, 32}, rng, 0, 1));
    model_backward(a, r.trace, oracle::random_tensor({2, 3}, rng));
    LeNetModel b = a, c = a;
    sgd_step(c, 0.0);
    EXPECT_TRUE(c == a);
    sgd_step(a, 0.01);
    sgd_step(a, 0.01);
    sgd_step(b, 0.02);
    for (std::size_t i = 0; i < kParamCount; ++i)
        EXPECT_LE(oracle::max_abs_diff(oracle::flat(a.params()[i].value), oracle::flat(b.params()[i].value)), 1e-15);
}

TEST(Sgd, SmallStepDecreasesSingleSampleLoss)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        LeNetModel m = init_params(3, 10 + trial);
        const Tensor x = oracle::random_tensor({1, 1, 32, 32}, rng, 0, 1);
        const std::vector<std::size_t> t{static_cast<std::size_t>(trial % 3)};
        auto r = model_forward(m, x);
        const auto before = cross_entropy(r.trace.logits, t);
        model_backward(m, r.trace, before.dlogits);
        sgd_step(m, 1e-4);
        EXPECT_LT(cross_entropy(model_forward(m, x).trace.logits, t).mean_loss, before.mean_loss);
    }
}

TEST(Evaluate, PureAndConsistentWithMetrics)
{
    SyntheticData d(5);
    const LeNetModel m = init_params(3, 4);
    const LeNetModel copy = m;
    const EvalResult a = evaluate(m, d.train_set, LossKind::CrossEntropy);
    const EvalResult b = evaluate(m, d.train_set, LossKind::CrossEntropy);
    EXPECT_TRUE(m == copy);
    EXPECT_EQ(a.mean_loss, b.mean_loss);
    EXPECT_EQ(a.predictions, b.predictions);
    EXPECT_EQ(a.accuracy, *metrics::accuracy(a.confusion));
    EXPECT_EQ(a.confusion.total(), 15u);
}

TEST(Evaluate, ThreadCountDoesNotChangeResults)
{
    SyntheticData d(24);
    const LeNetModel m = init_params(3, 5);
    const EvalResult one = evaluate(m, d.train_set, LossKind::Focal, {}, 1);
    const EvalResult four = evaluate(m, d.train_set, LossKind::Focal, {}, 4);
    EXPECT_EQ(one.mean_loss, four.mean_loss);
    EXPECT_EQ(one.predictions, four.predictions);
}

TEST(Evaluate, EmptySplitRaises)
{
    Dataset empty;
    try {
        (void)evaluate(init_params(3, 1), empty, LossKind::CrossEntropy);
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyDataset);
    }
}

TEST(Evaluate, SingleCorrectSampleGivesAccuracyOne)
{
    SyntheticData d(1);
    const LeNetModel m = init_params(3, 6);
    Dataset one = d.train_set;
    const auto preds = evaluate(m, d.train_set, LossKind::CrossEntropy).predictions;
    one.samples = {d.train_set.samples[0]};
    one.samples[0].label = preds[0];
    EXPECT_EQ(evaluate(m, one, LossKind::CrossEntropy).accuracy, 1.0);
}

TEST(Train, RecordsOnePerEpochAndIsDeterministic)
{
    SyntheticData d(6);
    TrainConfig cfg = small_config();
    cfg.augment = AugmentConfig{};
    cfg.augment->seed = 9;
    LeNetModel a = init_params(3, 7), b = init_params(3, 7);
    const auto ra = train(a, d.train_set, d.val_set, cfg);
    const auto rb = train(b, d.train_set, d.val_set, cfg);
    ASSERT_EQ(ra.size(), 3u);
    EXPECT_EQ(ra, rb);
    EXPECT_TRUE(a == b);
    for (const auto& r : ra) {
        EXPECT_GE(r.train_loss, 0.0);
        EXPECT_TRUE(r.train_acc >= 0.0 && r.train_acc <= 1.0);
        EXPECT_TRUE(r.val_acc >= 0.0 && r.val_acc <= 1.0);
    }
    EXPECT_EQ(ra[0].epoch, 1u);
}

TEST(Train, ZeroRateLeavesModelUnchanged)
{
    SyntheticData d(3);
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    LeNetModel m = init_params(3, 8);
    const LeNetModel before = m;
    const auto rec = train(m, d.train_set, d.val_set, cfg);
    EXPECT_TRUE(m == before);
    EXPECT_EQ(rec[0].val_acc, evaluate(before, d.val_set, LossKind::CrossEntropy).accuracy);
}

TEST(Train, ZeroEpochsReturnsNothing)
{
    SyntheticData d(3);
    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    LeNetModel m = init_params(3, 8);
    const LeNetModel before = m;
    EXPECT_TRUE(train(m, d.train_set, d.val_set, cfg).empty());
    EXPECT_TRUE(m == before);
}

TEST(Train, PartialLastBatchIsUsed)
{
    // 9 samples at batch 4: the last batch has one sample. With shuffle off the
    // result must differ from dropping it, i.e. from training on the first 8.
    SyntheticData d(3);
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    cfg.shuffle = false;
    LeNetModel full = init_params(3, 11), trimmed = init_params(3, 11);
    (void)train(full, d.train_set, d.val_set, cfg);
    Dataset eight = d.train_set;
    eight.samples.resize(8);
    (void)train(trimmed, eight, d.val_set, cfg);
    EXPECT_FALSE(full == trimmed);
}

TEST(Train, RejectsBadInput)
{
    SyntheticData d(2);
    TrainConfig cfg = small_config();
    LeNetModel m = init_params(3, 1);
    Dataset empty = d.train_set;
    empty.samples.clear();
    auto kind = [&](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;
    };
    EXPECT_EQ(kind([&] { (void)train(m, empty, d.val_set, cfg); }), ErrorKind::EmptyDataset);
    EXPECT_EQ(kind([&] { (void)train(m, d.train_set, empty, cfg); }), ErrorKind::EmptyDataset);
    cfg.batch_size = 7;
    EXPECT_EQ(kind([&] { (void)train(m, d.train_set, d.val_set, cfg); }), ErrorKind::InvalidConfig);
    cfg.batch_size = 0;
    EXPECT_EQ(kind([&] { (void)train(m, d.train_set, d.val_set, cfg); }), ErrorKind::InvalidConfig);
    cfg.batch_size = 2;
    Dataset bad = d.train_set;
    bad.samples[0].label = 5;
    EXPECT_EQ(kind([&] { (void)train(m, bad, d.val_set, cfg); }), ErrorKind::InvalidLabel);
}

TEST(Train, DivergenceRestoresLastGoodModel)
{
    SyntheticData d(3);
    TrainConfig cfg = small_config();
    cfg.epochs = 5;
    cfg.learning_rate = 1e308; // weights overflow, so the logits stop being finite
    LeNetModel m = init_params(3, 12);
    const LeNetModel before = m;
    try {
        (void)train(m, d.train_set, d.val_set, cfg);
        ADD_FAILURE() << "no divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DivergenceDetected);
        for (const auto& p : m.params())
            for (double v : p.value.values()) ASSERT_TRUE(std::isfinite(v));
        if (e.records.empty()) {
            EXPECT_TRUE(m == before);
        }
    }
}
