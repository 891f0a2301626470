#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cstdlib>

#include "cli_helpers.hpp"
#include "oracles.hpp"

using namespace lenet;
namespace fs = std::filesystem;
using clitest::run;
using clitest::slurp;

namespace {

std::size_t count_files(const fs::path& dir)
{
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file();
    return n;
}

std::vector<std::string> train_args(const fs::path& data, const fs::path& out, std::vector<std::string> extra = {})
{
    std::vector<std::string> a{"train",   "--data", data.string(), "--out",       out.string(),
                               "--epochs", "2",     "--batch-size", "3",          "--seed", "5"};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
}

class CliFixture : public ::testing::Test {
protected:
    void SetUp() override { ASSERT_EQ(run({"gen-synthetic", "--out", data().string(), "--n", "3", "--seed", "1"}).code, 0); }
    fs::path data() const { return tmp_.path() / "data"; }
    fs::path out(const std::string& name = "run") const { return tmp_.path() / name; }
    oracle::TempDir tmp_{"cli"};
};

} // namespace

TEST(CliGenSynthetic, CountsAndDeterminism)
{
    oracle::TempDir a("gen_a"), b("gen_b");
    ASSERT_EQ(run({"gen-synthetic", "--out", a.path().string(), "--n", "20", "--seed", "42"}).code, 0);
    ASSERT_EQ(run({"gen-synthetic", "--out", b.path().string(), "--n", "20", "--seed", "42"}).code, 0);
    EXPECT_EQ(count_files(a.path() / "train"), 60u);
    EXPECT_EQ(count_files(a.path() / "validation"), 12u);
    for (const auto& e : fs::recursive_directory_iterator(a.path()))
        if (e.is_regular_file()) {
            EXPECT_EQ(slurp(e.path()), slurp(b.path() / fs::relative(e.path(), a.path())));
        }
    const Dataset tr = load_dataset(a.path(), "train");
    const Dataset va = load_dataset(a.path(), "validation", tr.class_names);
    EXPECT_EQ(tr.size(), 60u);
    EXPECT_EQ(va.size(), 12u);
    EXPECT_EQ(run({"gen-synthetic", "--out", a.path().string(), "--n", "0"}).code, 1);
}

TEST_F(CliFixture, TrainWritesAllArtifacts)
{
    const auto r = run(train_args(data(), out()));
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"checkpoint.lnck", "curves.csv", "metrics.json", "curves.svg", "config.echo.json"})
        EXPECT_TRUE(fs::exists(out() / f)) << f;
    EXPECT_EQ(parse_curves_csv(slurp(out() / "curves.csv")).size(), 2u);

    const auto metrics = nlohmann::json::parse(slurp(out() / "metrics.json"));
    ASSERT_EQ(metrics.at("reports").size(), 3u);
    EXPECT_EQ(metrics["reports"][0]["mode"], "binarized_nodule");
    EXPECT_EQ(metrics["reports"][1]["mode"], "macro_ovr");
    EXPECT_EQ(metrics["reports"][2]["mode"], "per_class");
    EXPECT_EQ(metrics["reports"][0]["positive_classes"], (nlohmann::json{"benign", "malignant"}));
    EXPECT_EQ(metrics["reports"][1]["confusion"].size(), 3u);

    const auto echo = nlohmann::json::parse(slurp(out() / "config.echo.json"));
    EXPECT_EQ(echo["epochs"], 2);
    EXPECT_EQ(echo["batch_size"], 3);
    EXPECT_EQ(echo["seed"], 5);
    // The echo is itself a valid config file.
    EXPECT_NO_THROW((void)load_run_config(out() / "config.echo.json"));
}

TEST_F(CliFixture, LossFlagOnlyChangesLossFieldsOfEcho)
{
    ASSERT_EQ(run(train_args(data(), out(), {"--loss", "cross_entropy"})).code, 0);
    const auto ce = nlohmann::json::parse(slurp(out() / "config.echo.json"));
    ASSERT_EQ(run(train_args(data(), out(), {"--loss", "focal"})).code, 0);
    const auto fl = nlohmann::json::parse(slurp(out() / "config.echo.json"));
    const auto diff = nlohmann::json::diff(ce, fl);
    ASSERT_EQ(diff.size(), 1u) << diff.dump();
    EXPECT_EQ(diff[0]["path"], "/loss");
}

TEST_F(CliFixture, ConfigFileWithFlagOverrides)
{
    const auto cfg = tmp_.path() / "cfg.json";
    std::ofstream(cfg) << R"({"data": ")" << data().string() << R"(", "out": ")" << out().string()
                       << R"(", "epochs": 4, "batch_size": 3, "learning_rate": 0.05, "augment": false})";
    ASSERT_EQ(run({"train", "--config", cfg.string(), "--epochs", "1"}).code, 0);
    const auto echo = nlohmann::json::parse(slurp(out() / "config.echo.json"));
    EXPECT_EQ(echo["epochs"], 1);
    EXPECT_EQ(echo["learning_rate"], 0.05);
    EXPECT_EQ(echo["augment"], false);

    std::ofstream(cfg) << R"({"data": "x", "epochz": 3})";
    const auto bad = run({"train", "--config", cfg.string(), "--out", out("bad").string()});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("epochz"), std::string::npos);
    EXPECT_FALSE(fs::exists(out("bad")));
}

TEST_F(CliFixture, EvaluateReproducesFinalValidationRecord)
{
    ASSERT_EQ(run(train_args(data(), out(), {"--loss", "focal", "--gamma", "1.5"})).code, 0);
    const auto last = parse_curves_csv(slurp(out() / "curves.csv")).back();
    const Checkpoint ckpt = load_checkpoint(out() / "checkpoint.lnck");
    ASSERT_TRUE(ckpt.final_record.has_value());

    const auto r = run({"evaluate", "--checkpoint", (out() / "checkpoint.lnck").string(), "--data", data().string(),
                        "--split", "validation"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.err.empty());
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["mean_loss"].get<double>(), ckpt.final_record->val_loss);
    EXPECT_EQ(doc["reports"][1]["accuracy"].get<double>(), ckpt.final_record->val_acc);
    EXPECT_EQ(format_g6(doc["mean_loss"].get<double>()), format_g6(last.val_loss));
    EXPECT_EQ(doc["loss_kind"], "focal");
    // metrics.json written by train is the same evaluation.
    EXPECT_EQ(nlohmann::json::parse(slurp(out() / "metrics.json")), doc);
}

TEST_F(CliFixture, PredictPrintsDistribution)
{
    ASSERT_EQ(run(train_args(data(), out())).code, 0);
    const auto r = run({"predict", "--checkpoint", (out() / "checkpoint.lnck").string(), "--image",
                        (data() / "validation" / "normal" / "0000.pgm").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["probs"].size(), 3u);
    double sum = 0.0;
    for (double p : j["probs"]) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-9);
    const auto idx = j["class_index"].get<std::size_t>();
    EXPECT_EQ(j["class_name"], std::vector<std::string>({"benign", "malignant", "normal"})[idx]);

    const auto not_image = tmp_.path() / "notes.txt";
    std::ofstream(not_image) << "hello";
    EXPECT_EQ(run({"predict", "--checkpoint", (out() / "checkpoint.lnck").string(), "--image", not_image.string()}).code,
              2);
}

TEST_F(CliFixture, CorruptCheckpointIsADataError)
{
    const auto bad = tmp_.path() / "bad.lnck";
    std::ofstream(bad) << "LNCK garbage";
    const auto r = run({"evaluate", "--checkpoint", bad.string(), "--data", data().string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("checkpoint"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
    const auto missing = run({"evaluate", "--checkpoint", (tmp_.path() / "none.lnck").string(), "--data", data().string()});
    EXPECT_EQ(missing.code, 2);
    EXPECT_NE(missing.err.find("checkpoint"), std::string::npos);
}

TEST_F(CliFixture, InvalidInputsWriteNothing)
{
    EXPECT_EQ(run(train_args(data(), out("a"), {"--batch-size", "100"})).code, 1);
    EXPECT_EQ(run(train_args(data(), out("b"), {"--lr", "0"})).code, 1);
    EXPECT_EQ(run(train_args(data(), out("c"), {"--loss", "hinge"})).code, 1);
    EXPECT_EQ(run(train_args(data(), out("d"), {"--gamma", "-1"})).code, 1);
    EXPECT_EQ(run(train_args(tmp_.path() / "absent", out("e"))).code, 2);
    for (const char* d : {"a", "b", "c", "d", "e"}) EXPECT_FALSE(fs::exists(out(d))) << d;
    EXPECT_EQ(run({"train", "--out", out("f").string()}).code, 1);
    EXPECT_EQ(run({"bogus"}).code, 1);
    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliFixture, DivergenceExitsThreeWithLastGoodArtifacts)
{
    const auto r = run(train_args(data(), out(), {"--lr", "1e308", "--epochs", "3"}));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("DivergenceDetected"), std::string::npos);
    EXPECT_TRUE(fs::exists(out() / "checkpoint.lnck"));
    EXPECT_TRUE(fs::exists(out() / "curves.csv"));
    const Checkpoint ckpt = load_checkpoint(out() / "checkpoint.lnck");
    for (const auto& p : ckpt.model.params())
        for (double v : p.value.values()) ASSERT_TRUE(std::isfinite(v));
}

TEST_F(CliFixture, ExportCurves)
{
    const auto csv = tmp_.path() / "one.csv";
    std::ofstream(csv) << "epoch,train_loss,train_acc,val_loss,val_acc\n1,0.9,0.4,1.0,0.3\n";
    const auto svg = tmp_.path() / "one.svg";
    ASSERT_EQ(run({"export-curves", "--curves", csv.string(), "--out", svg.string()}).code, 0);
    boost::property_tree::ptree tree;
    ASSERT_NO_THROW(boost::property_tree::read_xml(svg.string(), tree));

    ASSERT_EQ(run(train_args(data(), out(), {"--epochs", "4"})).code, 0);
    const auto svg4 = tmp_.path() / "four.svg";
    ASSERT_EQ(run({"export-curves", "--curves", (out() / "curves.csv").string(), "--out", svg4.string()}).code, 0);
    boost::property_tree::ptree t4;
    boost::property_tree::read_xml(svg4.string(), t4);
    std::size_t polylines = 0;
    for (const auto& g : t4.get_child("svg")) {
        if (g.first != "g") continue;
        for (const auto& el : g.second) {
            if (el.first != "polyline") continue;
            ++polylines;
            std::istringstream pts(el.second.get<std::string>("<xmlattr>.points"));
            std::size_t n = 0;
            for (std::string p; pts >> p;) ++n;
            EXPECT_EQ(n, 4u);
        }
    }
    EXPECT_EQ(polylines, 4u);

    const auto bad = tmp_.path() / "bad.csv";
    std::ofstream(bad) << "nope\n";
    const auto bad_svg = tmp_.path() / "bad.svg";
    EXPECT_EQ(run({"export-curves", "--curves", bad.string(), "--out", bad_svg.string()}).code, 2);
    EXPECT_FALSE(fs::exists(bad_svg));
}

TEST_F(CliFixture, SameSeedGivesIdenticalArtifacts)
{
    ASSERT_EQ(run(train_args(data(), out("x"), {"--threads", "1"})).code, 0);
    ASSERT_EQ(run(train_args(data(), out("y"), {"--threads", "1"})).code, 0);
    EXPECT_EQ(slurp(out("x") / "curves.csv"), slurp(out("y") / "curves.csv"));
    EXPECT_EQ(slurp(out("x") / "checkpoint.lnck"), slurp(out("y") / "checkpoint.lnck"));
    ASSERT_EQ(run(train_args(data(), out("z"), {"--threads", "1", "--seed", "6"})).code, 0);
    EXPECT_NE(slurp(out("x") / "checkpoint.lnck"), slurp(out("z") / "checkpoint.lnck"));
}

// The installed binary maps exit codes the same way as the in-process entry point.
TEST(CliBinary, ExitCodes)
{
    oracle::TempDir dir("bin");
    const std::string exe = LENET_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(status(exe + " --help"), 0);
    EXPECT_EQ(status(exe + " frobnicate"), 1);
    EXPECT_EQ(status(exe + " train --data " + (dir.path() / "none").string() + " --out " + (dir.path() / "o").string()), 2);
    EXPECT_EQ(status(exe + " gen-synthetic --out " + dir.path().string() + " --n 1"), 0);
}
