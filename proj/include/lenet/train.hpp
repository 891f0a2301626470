#ifndef LENET_TRAIN_HPP
#define LENET_TRAIN_HPP

/**
 * @file train.hpp
 * @brief Plain SGD, full-pass evaluation and the epoch/batch training loop.
 *
 * Determinism contract: for a fixed TrainConfig, AugmentConfig and dataset,
 * train() produces bit-identical parameters and EpochRecords. Evaluation may
 * fan out over threads; per-sample results do not depend on batch
 * composition and are reduced in sample-index order, so the thread count
 * never changes the numbers.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "lenet/dataset.hpp"
#include "lenet/loss.hpp"
#include "lenet/metrics.hpp"
#include "lenet/model.hpp"

namespace lenet {

/// value <- value - learning_rate * grad for every parameter. Grads are left as is.
inline void sgd_step(LeNetModel& model, double learning_rate)
{
    for (auto& p : model.params()) {
        auto v = p.value.values();
        auto g = p.grad.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= learning_rate * g[i];
    }
    model.mark_updated();
}

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    LossKind loss_kind = LossKind::CrossEntropy;
    FocalConfig focal;
    std::uint64_t seed = 0;
    bool shuffle = true;
    /// Training-time augmentation; never applied to evaluation.
    std::optional<AugmentConfig> augment;
    /// Worker threads for evaluation passes.
    std::size_t threads = 1;

    void validate(std::size_t num_classes) const
    {
        if (batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
        // lr = 0 is accepted: it turns training into a pure evaluation run.
        if (!std::isfinite(learning_rate) || learning_rate < 0.0)
            throw Error(ErrorKind::InvalidConfig, "learning_rate must be finite and >= 0");
        if (threads == 0) throw Error(ErrorKind::InvalidConfig, "threads must be >= 1");
        if (loss_kind == LossKind::Focal) focal.validate(num_classes);
        if (augment) augment->validate();
    }
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct EvalResult {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    metrics::ConfusionMatrix confusion{1};
    std::vector<std::size_t> predictions;
};

inline std::size_t argmax_row(const Tensor& probs, std::size_t row)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.dim(1); ++k)
        if (probs.at(row, k) > probs.at(row, best)) best = k;
    return best;
}

inline void check_labels(const Dataset& ds, std::size_t num_classes)
{
    for (const auto& s : ds.samples)
        if (s.label >= num_classes)
            throw Error(ErrorKind::InvalidLabel, "label " + std::to_string(s.label) + " of " + s.source_path +
                                                     " >= num_classes " + std::to_string(num_classes));
}

/// Forward pass over the whole dataset. Never mutates the model.
inline EvalResult evaluate(const LeNetModel& model, const Dataset& ds, LossKind loss_kind, const FocalConfig& focal = {},
                           std::size_t threads = 1)
{
    if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "cannot evaluate on empty split '" + ds.split + "'");
    check_labels(ds, model.num_classes());
    if (loss_kind == LossKind::Focal) focal.validate(model.num_classes());

    constexpr std::size_t kChunk = 32;
    const std::size_t n = ds.size();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<double> losses(n);
    std::vector<std::size_t> preds(n);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * kChunk, end = std::min(n, begin + kChunk);
        std::vector<std::size_t> idx(end - begin);
        std::iota(idx.begin(), idx.end(), begin);
        std::vector<std::size_t> targets;
        for (std::size_t i : idx) targets.push_back(ds.samples[i].label);
        const auto result = model_forward(model, make_batch(ds.samples, idx));
        const auto loss = compute_loss(loss_kind, result.trace.logits, targets, focal);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            losses[begin + r] = loss.per_sample[r];
            preds[begin + r] = argmax_row(result.probs, r);
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
            });
    }

    EvalResult r;
    double sum = 0.0;
    for (double l : losses) sum += l;
    r.mean_loss = sum / static_cast<double>(n);
    std::vector<std::size_t> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = ds.samples[i].label;
    r.confusion = metrics::confusion(truth, preds, model.num_classes());
    r.accuracy = *metrics::accuracy(r.confusion);
    r.predictions = std::move(preds);
    return r;
}

/// Raised when a batch loss becomes NaN or infinite. The model passed to
/// train() has been restored to the end of the last completed epoch.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& message, std::vector<EpochRecord> completed)
        : Error(ErrorKind::DivergenceDetected, message), records(std::move(completed))
    {
    }
    std::vector<EpochRecord> records;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/**
 * Trains `model` in place. Per epoch: (seeded) shuffle, mini-batches with the
 * last partial batch kept, forward, loss, backward, SGD step; then one
 * evaluation pass over each split yields the epoch's record.
 */
inline std::vector<EpochRecord> train(LeNetModel& model, const Dataset& train_set, const Dataset& val_set,
                                      const TrainConfig& cfg, const EpochCallback& on_epoch = {})
{
    if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training split is empty");
    if (val_set.empty()) throw Error(ErrorKind::EmptyDataset, "validation split is empty");
    cfg.validate(model.num_classes());
    if (cfg.batch_size > train_set.size())
        throw Error(ErrorKind::InvalidConfig, "batch_size " + std::to_string(cfg.batch_size) +
                                                  " exceeds training set size " + std::to_string(train_set.size()));
    check_labels(train_set, model.num_classes());
    check_labels(val_set, model.num_classes());

    std::vector<EpochRecord> records;
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const LeNetModel last_good = model;
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<std::size_t> targets;
            std::vector<double> data;
            data.reserve((end - begin) * kImageSize * kImageSize);
            for (std::size_t i = begin; i < end; ++i) {
                const Sample& s = train_set.samples[order[i]];
                targets.push_back(s.label);
                if (cfg.augment) {
                    auto rng = augment_stream(cfg.augment->seed, epoch, order[i]);
                    const Sample a = augment(s, *cfg.augment, rng);
                    data.insert(data.end(), a.pixels.values().begin(), a.pixels.values().end());
                } else {
                    data.insert(data.end(), s.pixels.values().begin(), s.pixels.values().end());
                }
            }
            Tensor batch({end - begin, 1, kImageSize, kImageSize}, std::move(data));
            auto fwd = model_forward(model, batch);
            const auto loss = compute_loss(cfg.loss_kind, fwd.trace.logits, targets, cfg.focal);
            if (!std::isfinite(loss.mean_loss)) {
                model = last_good;
                throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch), std::move(records));
            }
            model_backward(model, fwd.trace, loss.dlogits);
            sgd_step(model, cfg.learning_rate);
        }

        const auto tr = evaluate(model, train_set, cfg.loss_kind, cfg.focal, cfg.threads);
        const auto va = evaluate(model, val_set, cfg.loss_kind, cfg.focal, cfg.threads);
        if (!std::isfinite(tr.mean_loss) || !std::isfinite(va.mean_loss)) {
            model = last_good;
            throw DivergenceError("non-finite evaluation loss after epoch " + std::to_string(epoch), std::move(records));
        }
        records.push_back({epoch, tr.mean_loss, tr.accuracy, va.mean_loss, va.accuracy});
        if (on_epoch) on_epoch(records.back());
    }
    return records;
}

} // namespace lenet

#endif
