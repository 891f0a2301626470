#ifndef LENET_METRICS_HPP
#define LENET_METRICS_HPP

/**
 * @file metrics.hpp
 * @brief Confusion matrices and accuracy / sensitivity / specificity.
 *
 *   accuracy    = (TP + TN) / (TP + FP + TN + FN)
 *   sensitivity = TP / (TP + FN)
 *   specificity = TN / (TN + FP)
 *
 * A zero denominator yields std::nullopt ("undefined"), never 0 or 1.
 * Counting is exact integer arithmetic up to the final division.
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lenet/error.hpp"

namespace lenet::metrics {

using Count = std::uint64_t;

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0)
    {
        if (k == 0) throw Error(ErrorKind::InvalidConfig, "confusion matrix needs at least one class");
    }

    [[nodiscard]] std::size_t k() const noexcept { return k_; }

    /// counts[truth][predicted]
    [[nodiscard]] Count at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
    Count& at(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }

    void add(std::size_t truth, std::size_t pred)
    {
        if (truth >= k_ || pred >= k_)
            throw Error(ErrorKind::InvalidLabel, "label pair (" + std::to_string(truth) + "," + std::to_string(pred) +
                                                     ") out of range for k=" + std::to_string(k_));
        ++counts_[truth * k_ + pred];
    }

    [[nodiscard]] Count total() const noexcept
    {
        Count s = 0;
        for (Count c : counts_) s += c;
        return s;
    }

    [[nodiscard]] Count trace() const noexcept
    {
        Count s = 0;
        for (std::size_t i = 0; i < k_; ++i) s += counts_[i * k_ + i];
        return s;
    }

    [[nodiscard]] std::span<const Count> row_major() const noexcept { return counts_; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t k_;
    std::vector<Count> counts_;
};

inline ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> pred, std::size_t k)
{
    if (truth.size() != pred.size())
        throw Error(ErrorKind::InvalidShape, "confusion: " + std::to_string(truth.size()) + " labels vs " +
                                                 std::to_string(pred.size()) + " predictions");
    ConfusionMatrix cm(k);
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
    return cm;
}

struct BinaryCounts {
    Count tp = 0;
    Count fp = 0;
    Count tn = 0;
    Count fn = 0;

    [[nodiscard]] Count total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const BinaryCounts&, const BinaryCounts&) = default;
};

/// Collapses a k-class matrix to positive-vs-negative. `positive_classes` must
/// be a non-empty proper subset of [0, k).
inline BinaryCounts binarize(const ConfusionMatrix& cm, std::span<const std::size_t> positive_classes)
{
    const std::size_t k = cm.k();
    std::vector<bool> positive(k, false);
    for (std::size_t c : positive_classes) {
        if (c >= k)
            throw Error(ErrorKind::InvalidPartition,
                        "positive class " + std::to_string(c) + " out of range for k=" + std::to_string(k));
        positive[c] = true;
    }
    const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
    if (n_pos == 0 || n_pos == k)
        throw Error(ErrorKind::InvalidPartition, "positive classes must be a non-empty proper subset");

    BinaryCounts bc;
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t p = 0; p < k; ++p) {
            const Count c = cm.at(t, p);
            if (positive[t]) (positive[p] ? bc.tp : bc.fn) += c;
            else (positive[p] ? bc.fp : bc.tn) += c;
        }
    }
    return bc;
}

/// One-vs-rest counts for class `cls`.
inline BinaryCounts one_vs_rest(const ConfusionMatrix& cm, std::size_t cls)
{
    const std::size_t pos[] = {cls};
    return binarize(cm, pos);
}

namespace detail {
inline std::optional<double> ratio(Count num, Count den)
{
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}
} // namespace detail

inline std::optional<double> accuracy(const BinaryCounts& bc) { return detail::ratio(bc.tp + bc.tn, bc.total()); }
inline std::optional<double> sensitivity(const BinaryCounts& bc) { return detail::ratio(bc.tp, bc.tp + bc.fn); }
inline std::optional<double> specificity(const BinaryCounts& bc) { return detail::ratio(bc.tn, bc.tn + bc.fp); }

/// Multiclass accuracy: trace / total.
inline std::optional<double> accuracy(const ConfusionMatrix& cm) { return detail::ratio(cm.trace(), cm.total()); }

enum class ReportMode { BinarizedNodule, MacroOvr, PerClass };

inline std::string_view to_string(ReportMode m) noexcept
{
    switch (m) {
    case ReportMode::BinarizedNodule: return "binarized_nodule";
    case ReportMode::MacroOvr: return "macro_ovr";
    case ReportMode::PerClass: return "per_class";
    }
    return "unknown";
}

struct ClassMetrics {
    std::size_t index = 0;
    BinaryCounts counts;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

struct MetricReport {
    ReportMode mode = ReportMode::MacroOvr;
    std::optional<double> accuracy;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    ConfusionMatrix confusion{1};
    std::vector<ClassMetrics> per_class;
    /// Only meaningful for BinarizedNodule.
    std::vector<std::size_t> positive_classes;
    BinaryCounts binary;
};

inline std::vector<ClassMetrics> per_class_metrics(const ConfusionMatrix& cm)
{
    std::vector<ClassMetrics> out;
    if (cm.k() < 2) return out;
    for (std::size_t c = 0; c < cm.k(); ++c) {
        const BinaryCounts bc = one_vs_rest(cm, c);
        out.push_back({c, bc, sensitivity(bc), specificity(bc)});
    }
    return out;
}

inline std::optional<double> mean_defined(const std::vector<std::optional<double>>& xs)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& x : xs)
        if (x) {
            sum += *x;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

/// Per-class one-vs-rest sensitivity/specificity, macro-averaged over the
/// classes where each is defined. Accuracy is trace / total.
inline MetricReport macro_report(const ConfusionMatrix& cm)
{
    if (cm.k() < 2) throw Error(ErrorKind::InvalidConfig, "macro_report needs k >= 2");
    MetricReport r;
    r.mode = ReportMode::MacroOvr;
    r.confusion = cm;
    r.accuracy = accuracy(cm);
    r.per_class = per_class_metrics(cm);
    std::vector<std::optional<double>> sens, spec;
    for (const auto& pc : r.per_class) {
        sens.push_back(pc.sensitivity);
        spec.push_back(pc.specificity);
    }
    r.sensitivity = mean_defined(sens);
    r.specificity = mean_defined(spec);
    return r;
}

/// Same per-class table as macro_report with no aggregate sensitivity/specificity.
inline MetricReport per_class_report(const ConfusionMatrix& cm)
{
    MetricReport r = macro_report(cm);
    r.mode = ReportMode::PerClass;
    r.sensitivity.reset();
    r.specificity.reset();
    return r;
}

inline MetricReport binarized_report(const ConfusionMatrix& cm, std::span<const std::size_t> positive_classes)
{
    MetricReport r;
    r.mode = ReportMode::BinarizedNodule;
    r.confusion = cm;
    r.binary = binarize(cm, positive_classes);
    r.positive_classes.assign(positive_classes.begin(), positive_classes.end());
    std::sort(r.positive_classes.begin(), r.positive_classes.end());
    r.accuracy = accuracy(r.binary);
    r.sensitivity = sensitivity(r.binary);
    r.specificity = specificity(r.binary);
    r.per_class = per_class_metrics(cm);
    return r;
}

/// Positive ("nodule") classes: every class not named "normal". Without a
/// "normal" class, every class except the last.
inline std::vector<std::size_t> default_positive_classes(std::span<const std::string> class_names)
{
    std::vector<std::size_t> pos;
    const bool has_normal = std::find(class_names.begin(), class_names.end(), "normal") != class_names.end();
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        if (has_normal ? class_names[c] != "normal" : c + 1 < class_names.size()) pos.push_back(c);
    }
    return pos;
}

} // namespace lenet::metrics

#endif
