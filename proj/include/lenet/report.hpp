#ifndef LENET_REPORT_HPP
#define LENET_REPORT_HPP

// JSON rendering of metric reports (metrics.json) and predictions.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lenet/metrics.hpp"
#include "lenet/train.hpp"

namespace lenet {

inline nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json confusion_json(const metrics::ConfusionMatrix& cm)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < cm.k(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t p = 0; p < cm.k(); ++p) row.push_back(cm.at(t, p));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json counts_json(const metrics::BinaryCounts& bc)
{
    return {{"tp", bc.tp}, {"fp", bc.fp}, {"tn", bc.tn}, {"fn", bc.fn}};
}

/// One report object: mode, accuracy, sensitivity, specificity, confusion,
/// per_class. Undefined metrics are null.
inline nlohmann::json report_json(const metrics::MetricReport& r, std::span<const std::string> class_names)
{
    nlohmann::json j;
    j["mode"] = std::string(metrics::to_string(r.mode));
    j["accuracy"] = optional_json(r.accuracy);
    j["sensitivity"] = optional_json(r.sensitivity);
    j["specificity"] = optional_json(r.specificity);
    j["confusion"] = confusion_json(r.confusion);
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& pc : r.per_class) {
        per_class.push_back({{"class_index", pc.index},
                             {"class_name", pc.index < class_names.size() ? class_names[pc.index] : std::string()},
                             {"sensitivity", optional_json(pc.sensitivity)},
                             {"specificity", optional_json(pc.specificity)},
                             {"support", pc.counts.tp + pc.counts.fn},
                             {"counts", counts_json(pc.counts)}});
    }
    j["per_class"] = std::move(per_class);
    if (r.mode == metrics::ReportMode::BinarizedNodule) {
        nlohmann::json pos = nlohmann::json::array();
        for (auto c : r.positive_classes) pos.push_back(c < class_names.size() ? class_names[c] : std::to_string(c));
        j["positive_classes"] = std::move(pos);
        j["counts"] = counts_json(r.binary);
    }
    return j;
}

/// Full evaluation document: the binarized report (default) plus the
/// macro one-vs-rest and per-class reports.
inline nlohmann::json metrics_document(const EvalResult& eval, std::span<const std::string> class_names,
                                       std::span<const std::size_t> positive_classes, const std::string& split,
                                       LossKind loss_kind)
{
    nlohmann::json doc;
    doc["split"] = split;
    doc["num_samples"] = eval.confusion.total();
    doc["loss_kind"] = std::string(to_string(loss_kind));
    doc["mean_loss"] = eval.mean_loss;
    doc["class_names"] = std::vector<std::string>(class_names.begin(), class_names.end());
    nlohmann::json reports = nlohmann::json::array();
    reports.push_back(report_json(metrics::binarized_report(eval.confusion, positive_classes), class_names));
    reports.push_back(report_json(metrics::macro_report(eval.confusion), class_names));
    reports.push_back(report_json(metrics::per_class_report(eval.confusion), class_names));
    doc["reports"] = std::move(reports);
    return doc;
}

} // namespace lenet

#endif
