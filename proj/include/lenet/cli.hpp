#ifndef LENET_CLI_HPP
#define LENET_CLI_HPP

/**
 * @file cli.hpp
 * @brief The `lenet` command line: train, evaluate, predict, gen-synthetic,
 * export-curves.
 *
 * Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
 * divergence. Diagnostics go to the error stream only; every command
 * validates its inputs before it writes anything.
 */

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lenet/checkpoint.hpp"
#include "lenet/config.hpp"
#include "lenet/curves.hpp"
#include "lenet/dataset.hpp"
#include "lenet/report.hpp"
#include "lenet/synthetic.hpp"
#include "lenet/train.hpp"

namespace lenet::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDivergence = 3 };

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidPartition: return kUsage;
    case ErrorKind::DivergenceDetected: return kDivergence;
    default: return kDataError;
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Values given on the command line; each one overrides the config file.
struct TrainFlags {
    std::string config;
    std::optional<std::string> data, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> loss;
    std::optional<double> gamma, lr;
    std::optional<std::size_t> epochs, batch_size, threads;
    bool no_augment = false;
};

inline RunConfig resolve_run_config(const TrainFlags& f)
{
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (f.data) c.data = *f.data;
    if (f.out) c.out = *f.out;
    if (f.seed) c.seed = *f.seed;
    if (f.loss) c.loss = parse_loss_kind(*f.loss);
    if (f.gamma) c.gamma = *f.gamma;
    if (f.lr) c.learning_rate = *f.lr;
    if (f.epochs) c.epochs = *f.epochs;
    if (f.batch_size) c.batch_size = *f.batch_size;
    if (f.threads) c.threads = *f.threads;
    if (f.no_augment) c.augment = false;
    if (c.data.empty()) throw Error(ErrorKind::InvalidConfig, "no dataset root (--data or \"data\")");
    if (c.out.empty()) throw Error(ErrorKind::InvalidConfig, "no output directory (--out or \"out\")");
    c.validate();
    return c;
}

inline int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    // Everything that can be checked is checked before the output directory is touched.
    const Dataset train_set = load_dataset(cfg.data, cfg.train_split);
    const Dataset val_set = load_dataset(cfg.data, cfg.val_split, train_set.class_names);
    for (const auto* ds : {&train_set, &val_set})
        for (const auto& w : ds->warnings) err << "warning: " << w << '\n';
    if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training split has no images");
    if (val_set.empty()) throw Error(ErrorKind::EmptyDataset, "validation split has no images");
    if (train_set.class_names.size() < 2) throw Error(ErrorKind::InvalidConfig, "need at least two classes");
    const TrainConfig tcfg = train_config(cfg, train_set);
    tcfg.validate(train_set.class_names.size());
    if (tcfg.batch_size > train_set.size())
        throw Error(ErrorKind::InvalidConfig, "batch_size " + std::to_string(tcfg.batch_size) +
                                                  " exceeds training set size " + std::to_string(train_set.size()));
    const auto positives = resolve_positive_classes(cfg, train_set.class_names);
    // Rejects an invalid partition now rather than after training.
    (void)metrics::binarize(metrics::ConfusionMatrix(train_set.class_names.size()), positives);

    const std::filesystem::path out_dir = cfg.out;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

    const nlohmann::json echo = to_json(cfg);
    Checkpoint ckpt;
    ckpt.class_names = train_set.class_names;
    ckpt.train_config = echo;
    // Keeps checkpoints from identical runs byte-identical wherever they are written.
    ckpt.train_config.erase("out");
    ckpt.train_config["resolved_alpha"] = tcfg.focal.alpha;

    LeNetModel model = init_params(train_set.class_names.size(), cfg.seed);
    std::vector<EpochRecord> records;
    try {
        records = train(model, train_set, val_set, tcfg);
    } catch (const DivergenceError& e) {
        ckpt.model = model;
        if (!e.records.empty()) ckpt.final_record = e.records.back();
        save_checkpoint(out_dir / "checkpoint.lnck", ckpt);
        write_text(out_dir / "curves.csv", curves_csv(e.records));
        throw;
    }

    const EvalResult final_eval = evaluate(model, val_set, tcfg.loss_kind, tcfg.focal, tcfg.threads);
    nlohmann::json doc = metrics_document(final_eval, train_set.class_names, positives, cfg.val_split, tcfg.loss_kind);
    doc["default_mode"] = cfg.metrics_mode;

    ckpt.model = model;
    if (!records.empty()) ckpt.final_record = records.back();

    write_text(out_dir / "config.echo.json", echo.dump(2) + "\n");
    save_checkpoint(out_dir / "checkpoint.lnck", ckpt);
    write_text(out_dir / "curves.csv", curves_csv(records));
    write_text(out_dir / "metrics.json", doc.dump(2) + "\n");
    write_text(out_dir / "curves.svg", render_curves_svg(records));

    if (!records.empty()) {
        const auto& r = records.back();
        out << "epoch " << r.epoch << ": train_loss " << format_g6(r.train_loss) << " train_acc "
            << format_g6(r.train_acc) << " val_loss " << format_g6(r.val_loss) << " val_acc " << format_g6(r.val_acc)
            << '\n';
    }
    out << "wrote " << out_dir.string() << '\n';
    return kOk;
}

inline FocalConfig focal_from_checkpoint(const Checkpoint& ckpt)
{
    FocalConfig f;
    const auto& tc = ckpt.train_config;
    if (tc.contains("gamma")) f.gamma = tc.at("gamma").get<double>();
    if (tc.contains("resolved_alpha")) f.alpha = tc.at("resolved_alpha").get<std::vector<double>>();
    return f;
}

inline LossKind loss_from_checkpoint(const Checkpoint& ckpt)
{
    const auto& tc = ckpt.train_config;
    return tc.contains("loss") ? parse_loss_kind(tc.at("loss").get<std::string>()) : LossKind::CrossEntropy;
}

inline int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_root, const std::string& split,
                        std::size_t threads, std::ostream& out, std::ostream& err)
{
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Dataset ds = load_dataset(data_root, split, ckpt.class_names);
    for (const auto& w : ds.warnings) err << "warning: " << w << '\n';
    RunConfig rc;
    if (ckpt.train_config.contains("positive_classes"))
        rc.positive_classes = ckpt.train_config.at("positive_classes").get<std::vector<std::string>>();
    const auto positives = resolve_positive_classes(rc, ckpt.class_names);
    const LossKind kind = loss_from_checkpoint(ckpt);
    const EvalResult eval = evaluate(ckpt.model, ds, kind, focal_from_checkpoint(ckpt), threads);
    nlohmann::json doc = metrics_document(eval, ckpt.class_names, positives, split, kind);
    if (ckpt.train_config.contains("metrics_mode")) doc["default_mode"] = ckpt.train_config.at("metrics_mode");
    out << doc.dump(2) << '\n';
    return kOk;
}

inline int cmd_predict(const std::string& checkpoint_path, const std::string& image_path, std::ostream& out)
{
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Tensor pixels = preprocess(read_pgm(image_path), kImageSize);
    const auto result = model_forward(ckpt.model, std::move(pixels).reshaped({1, 1, kImageSize, kImageSize}));
    const std::size_t best = argmax_row(result.probs, 0);
    nlohmann::json j;
    j["class_index"] = best;
    j["class_name"] = ckpt.class_names.at(best);
    j["probs"] = std::vector<double>(result.probs.values().begin(), result.probs.values().end());
    out << j.dump(2) << '\n';
    return kOk;
}

inline int cmd_gen_synthetic(const std::string& out_dir, std::size_t n_per_class, std::uint64_t seed, std::ostream& out)
{
    if (n_per_class == 0) throw Error(ErrorKind::InvalidConfig, "--n must be >= 1");
    const std::size_t n_val = (n_per_class + 4) / 5;
    synthetic::gen_synthetic(out_dir, n_per_class, seed, "train");
    synthetic::gen_synthetic(out_dir, n_val, seed, "validation");
    out << "wrote " << n_per_class * synthetic::kClassNames.size() << " train and "
        << n_val * synthetic::kClassNames.size() << " validation images to " << out_dir << '\n';
    return kOk;
}

inline int cmd_export_curves(const std::string& csv_path, const std::string& svg_path, std::ostream& out)
{
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(csv_path);
    } catch (const Error& e) {
        throw Error(ErrorKind::MalformedInput, std::string("cannot read curves: ") + e.what());
    }
    const auto records = parse_curves_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    write_text(svg_path, render_curves_svg(records));
    out << "wrote " << svg_path << " (" << records.size() << " epochs)\n";
    return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"LeNet CT-slice classifier: training, evaluation and prediction", "lenet"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    TrainFlags tf;
    auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, curves and metrics");
    train_cmd->add_option("--config", tf.config, "JSON run configuration")->check(CLI::ExistingFile);
    train_cmd->add_option("--data", tf.data, "Dataset root holding <split>/<class>/*.pgm");
    train_cmd->add_option("--out", tf.out, "Output directory");
    train_cmd->add_option("--seed", tf.seed, "Seed for initialization, shuffling and augmentation");
    train_cmd->add_option("--loss", tf.loss, "cross_entropy | focal")->check(CLI::IsMember({"cross_entropy", "focal"}));
    train_cmd->add_option("--gamma", tf.gamma, "Focal-loss focusing exponent");
    train_cmd->add_option("--epochs", tf.epochs, "Training epochs");
    train_cmd->add_option("--lr", tf.lr, "SGD learning rate");
    train_cmd->add_option("--batch-size", tf.batch_size, "Mini-batch size");
    train_cmd->add_option("--threads", tf.threads, "Evaluation threads (1 = fully deterministic)");
    train_cmd->add_flag("--no-augment", tf.no_augment, "Disable training-time augmentation");

    std::string ckpt_path, data_root, split = "validation", image_path;
    std::size_t eval_threads = 1;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset split; prints metrics JSON");
    eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    eval_cmd->add_option("--data", data_root, "Dataset root")->required();
    eval_cmd->add_option("--split", split, "Split directory name");
    eval_cmd->add_option("--threads", eval_threads, "Evaluation threads");

    auto* predict_cmd = app.add_subcommand("predict", "Classify one PGM image; prints JSON");
    predict_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
    predict_cmd->add_option("--image", image_path, "PGM image")->required();

    std::string gen_out;
    std::size_t gen_n = 20;
    std::uint64_t gen_seed = 42;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic three-class dataset");
    gen_cmd->add_option("--out", gen_out, "Output dataset root")->required();
    gen_cmd->add_option("--n", gen_n, "Training images per class");
    gen_cmd->add_option("--seed", gen_seed, "Generator seed");

    std::string curves_path, svg_path;
    auto* export_cmd = app.add_subcommand("export-curves", "Render curves.csv as a two-panel SVG");
    export_cmd->add_option("--curves", curves_path, "curves.csv from a training run")->required();
    export_cmd->add_option("--out", svg_path, "SVG output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) return cmd_train(resolve_run_config(tf), out, err);
        if (*eval_cmd) return cmd_evaluate(ckpt_path, data_root, split, eval_threads, out, err);
        if (*predict_cmd) return cmd_predict(ckpt_path, image_path, out);
        if (*gen_cmd) return cmd_gen_synthetic(gen_out, gen_n, gen_seed, out);
        if (*export_cmd) return cmd_export_curves(curves_path, svg_path, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsage;
}

} // namespace lenet::cli

#endif
