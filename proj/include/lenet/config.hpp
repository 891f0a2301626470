#ifndef LENET_CONFIG_HPP
#define LENET_CONFIG_HPP

// Flat snake_case run configuration shared by the CLI commands.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lenet/dataset.hpp"
#include "lenet/loss.hpp"
#include "lenet/metrics.hpp"
#include "lenet/train.hpp"

namespace lenet {

struct RunConfig {
    std::string data;
    std::string out;
    std::string train_split = "train";
    std::string val_split = "validation";

    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    LossKind loss = LossKind::CrossEntropy;
    double gamma = 2.0;
    /// "uniform", "inverse_frequency" or "custom" (then `alpha` holds the weights).
    std::string alpha_preset = "uniform";
    std::vector<double> alpha;
    std::uint64_t seed = 42;
    bool shuffle = true;

    bool augment = true;
    double hflip_prob = 0.5;
    double max_rotation_deg = 15.0;
    int max_shift_px = 2;
    std::optional<std::uint64_t> augment_seed; // defaults to `seed`
    double fill = 0.0;

    std::string metrics_mode = "binarized_nodule";
    /// Class names counted as positive for the binarized report; empty = default rule.
    std::vector<std::string> positive_classes;
    std::size_t threads = 1;

    [[nodiscard]] AugmentConfig augment_config() const
    {
        return {hflip_prob, max_rotation_deg, max_shift_px, augment_seed.value_or(seed), fill};
    }

    /// Checks every field against its owner's invariants; throws InvalidConfig.
    void validate() const
    {
        if (epochs > 1'000'000) throw Error(ErrorKind::InvalidConfig, "epochs out of range");
        if (batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw Error(ErrorKind::InvalidConfig, "learning_rate must be > 0");
        if (!std::isfinite(gamma) || gamma < 0.0) throw Error(ErrorKind::InvalidConfig, "gamma must be >= 0");
        if (alpha_preset != "uniform" && alpha_preset != "inverse_frequency" && alpha_preset != "custom")
            throw Error(ErrorKind::InvalidConfig, "alpha_preset must be uniform|inverse_frequency|custom");
        if (alpha_preset == "custom" && alpha.empty())
            throw Error(ErrorKind::InvalidConfig, "alpha_preset 'custom' needs an 'alpha' array");
        if (alpha_preset != "custom" && !alpha.empty())
            throw Error(ErrorKind::InvalidConfig, "'alpha' given but alpha_preset is not 'custom'");
        for (double a : alpha)
            if (!(a > 0.0)) throw Error(ErrorKind::InvalidConfig, "alpha entries must be > 0");
        augment_config().validate();
        if (metrics_mode != "binarized_nodule" && metrics_mode != "macro_ovr" && metrics_mode != "per_class")
            throw Error(ErrorKind::InvalidConfig, "metrics_mode must be binarized_nodule|macro_ovr|per_class");
        if (threads == 0 || threads > 256) throw Error(ErrorKind::InvalidConfig, "threads must be in 1..256");
        if (train_split.empty() || val_split.empty()) throw Error(ErrorKind::InvalidConfig, "split names must be non-empty");
    }
};

inline nlohmann::json to_json(const RunConfig& c)
{
    nlohmann::json j;
    j["data"] = c.data;
    j["out"] = c.out;
    j["train_split"] = c.train_split;
    j["val_split"] = c.val_split;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["learning_rate"] = c.learning_rate;
    j["loss"] = std::string(to_string(c.loss));
    j["gamma"] = c.gamma;
    j["alpha_preset"] = c.alpha_preset;
    j["alpha"] = c.alpha;
    j["seed"] = c.seed;
    j["shuffle"] = c.shuffle;
    j["augment"] = c.augment;
    j["hflip_prob"] = c.hflip_prob;
    j["max_rotation_deg"] = c.max_rotation_deg;
    j["max_shift_px"] = c.max_shift_px;
    j["augment_seed"] = c.augment_seed.value_or(c.seed);
    j["fill"] = c.fill;
    j["metrics_mode"] = c.metrics_mode;
    j["positive_classes"] = c.positive_classes;
    j["threads"] = c.threads;
    return j;
}

/// Applies the keys of `j` onto `c`. Unknown keys and wrong types are errors.
inline void apply_json(RunConfig& c, const nlohmann::json& j)
{
    if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "config must be a JSON object");
    static const std::set<std::string> known{
        "data",         "out",       "train_split",      "val_split",    "epochs",       "batch_size",
        "learning_rate", "loss",     "gamma",            "alpha_preset", "alpha",        "seed",
        "shuffle",      "augment",   "hflip_prob",       "max_rotation_deg", "max_shift_px", "augment_seed",
        "fill",         "metrics_mode", "positive_classes", "threads"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) j.at(key).get_to(field);
        };
        get("data", c.data);
        get("out", c.out);
        get("train_split", c.train_split);
        get("val_split", c.val_split);
        if (j.contains("epochs") && j.at("epochs").is_number_integer() && j.at("epochs").get<long long>() < 0)
            throw Error(ErrorKind::InvalidConfig, "epochs must be >= 0");
        get("epochs", c.epochs);
        if (j.contains("batch_size") && j.at("batch_size").is_number_integer() && j.at("batch_size").get<long long>() < 1)
            throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
        get("batch_size", c.batch_size);
        get("learning_rate", c.learning_rate);
        if (j.contains("loss")) c.loss = parse_loss_kind(j.at("loss").get<std::string>());
        get("gamma", c.gamma);
        get("alpha_preset", c.alpha_preset);
        get("alpha", c.alpha);
        get("seed", c.seed);
        get("shuffle", c.shuffle);
        get("augment", c.augment);
        get("hflip_prob", c.hflip_prob);
        get("max_rotation_deg", c.max_rotation_deg);
        get("max_shift_px", c.max_shift_px);
        if (j.contains("augment_seed")) c.augment_seed = j.at("augment_seed").get<std::uint64_t>();
        get("fill", c.fill);
        get("metrics_mode", c.metrics_mode);
        get("positive_classes", c.positive_classes);
        get("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
    }
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    apply_json(c, j);
    return c;
}

/// Resolves the focal-loss weights against the training split.
inline FocalConfig focal_config(const RunConfig& c, const Dataset& train_set)
{
    FocalConfig f;
    f.gamma = c.gamma;
    if (c.alpha_preset == "inverse_frequency") {
        f.alpha = inverse_frequency_alpha(train_set.class_counts());
    } else if (c.alpha_preset == "custom") {
        f.alpha = c.alpha;
    }
    f.validate(train_set.class_names.size());
    return f;
}

inline TrainConfig train_config(const RunConfig& c, const Dataset& train_set)
{
    TrainConfig t;
    t.epochs = c.epochs;
    t.batch_size = c.batch_size;
    t.learning_rate = c.learning_rate;
    t.loss_kind = c.loss;
    t.focal = focal_config(c, train_set);
    t.seed = c.seed;
    t.shuffle = c.shuffle;
    if (c.augment) t.augment = c.augment_config();
    t.threads = c.threads;
    return t;
}

inline std::vector<std::size_t> resolve_positive_classes(const RunConfig& c, const std::vector<std::string>& class_names)
{
    if (c.positive_classes.empty()) return metrics::default_positive_classes(class_names);
    std::vector<std::size_t> out;
    for (const auto& name : c.positive_classes) {
        auto it = std::find(class_names.begin(), class_names.end(), name);
        if (it == class_names.end()) throw Error(ErrorKind::InvalidConfig, "positive class '" + name + "' is not a class");
        out.push_back(static_cast<std::size_t>(it - class_names.begin()));
    }
    return out;
}

} // namespace lenet

#endif
