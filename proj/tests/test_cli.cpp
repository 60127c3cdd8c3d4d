#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "frechetnet/training.hpp"

namespace fs = std::filesystem;
using namespace frechetnet;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("frechetnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    Outcome run(const std::string& args, const std::string& env = "") const {
        const auto out = path("stdout.txt"), err = path("stderr.txt");
        const std::string cmd = env + " " FRECHETNET_CLI_PATH " " + args + " >" + out + " 2>" + err;
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, csv::read_file(out), csv::read_file(err)};
    }

    fs::path dir_;
};

const char* kTiny = "--depth 2 --width 8 --last-width 3 --max-epochs 15 --burn-in 3 --patience 5";

}  // namespace

TEST_F(Cli, HelpListsEveryCommandAndFlag) {
    const auto r = run("--help");
    EXPECT_EQ(r.code, 0);
    for (const char* s : {"simulate", "train", "predict", "evaluate", "grid-search", "reproduce", "--experiment",
                          "--seed", "--lr", "--dropout", "--max-epochs", "--patience", "--jobs", "--scale"}) {
        EXPECT_NE(r.out.find(s), std::string::npos) << s;
    }
}

TEST_F(Cli, SimulateIsSeededAndReportsDigest) {
    auto a = run("simulate --experiment 1 --n 5 --seed 7 --out " + path("a.csv"));
    auto b = run("simulate --experiment 1 --n 5 --seed 7 --out " + path("b.csv"));
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(csv::read_file(path("a.csv")), csv::read_file(path("b.csv")));
    EXPECT_NE(a.out.find("digest " + content_digest(csv::read_file(path("a.csv")))), std::string::npos);
    const auto d = load_dataset(path("a.csv"));
    EXPECT_EQ(d.size(), 5);
    auto c = run("simulate --experiment 1 --n 5 --out " + path("c.csv"), "FRECHETNET_SEED=7");
    ASSERT_EQ(c.code, 0);
    EXPECT_EQ(csv::read_file(path("c.csv")), csv::read_file(path("a.csv")));
}

TEST_F(Cli, SimulateMatchesDocumentedExample) {
    auto r = run("simulate --experiment 2 --n 2 --nodes 3 --seed 1 --out " + path("doc.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("digest 0b9b6764c888a298"), std::string::npos);
    const auto text = csv::read_file(path("doc.csv"));
    EXPECT_EQ(text.substr(0, text.find('\n')), "# frechetnet dataset v1 space=laplacian dim=3 predictors=10");
}

TEST_F(Cli, SimulateExperiment2) {
    auto r = run("simulate --experiment 2 --n 6 --nodes 4 --noise 0.1 --seed 1 --out " + path("d.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_dataset(path("d.csv")).space, MetricSpace::laplacian(4));
    EXPECT_EQ(run("simulate --experiment 2 --n 6 --nodes 12 --out " + path("e.csv")).code, 2);
}

TEST_F(Cli, TrainPredictEvaluate) {
    ASSERT_EQ(run("simulate --experiment 2 --n 40 --nodes 4 --seed 2 --out " + path("data.csv")).code, 0);
    auto t = run("train --data " + path("data.csv") + " " + kTiny + " --seed 3 --out " + path("model"));
    ASSERT_EQ(t.code, 0) << t.err;
    for (const char* f : {"checkpoint.frnet", "history.csv", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "model" / f)) << f;
    }
    const auto hist = csv::read_file(path("model/history.csv"));
    EXPECT_EQ(hist.substr(0, hist.find('\n')), "epoch,train_risk,val_mspe");
    EXPECT_NE(hist.find("\n1,"), std::string::npos);
    EXPECT_NE(hist.find(",\n"), std::string::npos);  // burn-in rows carry no validation value

    const auto data = load_dataset(path("data.csv"));
    std::string inputs;
    for (Eigen::Index i = 0; i < 3; ++i) inputs += csv::join(data.x.row(i).transpose()) + "\n";
    csv::write_file(path("in.csv"), inputs);
    auto p = run("predict --checkpoint " + path("model/checkpoint.frnet") + " --inputs " + path("in.csv"));
    ASSERT_EQ(p.code, 0) << p.err;
    const auto ckpt = load_checkpoint(path("model/checkpoint.frnet"));
    std::string expected;
    for (const auto& y : ckpt.predict(data.x.topRows(3))) expected += csv::join(ckpt.space().values(y)) + "\n";
    EXPECT_EQ(p.out, expected);

    auto e = run("evaluate --checkpoint " + path("model/checkpoint.frnet") + " --data " + path("data.csv"));
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(e.out, "mspe " + csv::format_double(mspe(ckpt.predict(data.x), data.responses, data.space)) + "\n");

    csv::write_file(path("bad.csv"), "1,2,3\n");
    auto bad = run("predict --checkpoint " + path("model/checkpoint.frnet") + " --inputs " + path("bad.csv"));
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("expected p = 10"), std::string::npos);
    csv::write_file(path("empty.csv"), "");
    auto empty = run("predict --checkpoint " + path("model/checkpoint.frnet") + " --inputs " + path("empty.csv"));
    EXPECT_EQ(empty.code, 0);
    EXPECT_EQ(empty.out, "");
}

TEST_F(Cli, TrainIsReproducible) {
    const std::string args = std::string("train --experiment 1 --n 30 --seed 4 ") + kTiny + " --out ";
    ASSERT_EQ(run(args + path("a")).code, 0);
    ASSERT_EQ(run(args + path("b")).code, 0);
    EXPECT_EQ(csv::read_file(path("a/checkpoint.frnet")), csv::read_file(path("b/checkpoint.frnet")));
    EXPECT_EQ(csv::read_file(path("a/history.csv")), csv::read_file(path("b/history.csv")));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    csv::write_file(path("cfg.json"), R"({"lr": 0.05, "max_epochs": 9, "burn_in": 2, "width": 8, "last_width": 3})");
    auto r = run("train --experiment 1 --n 30 --seed 1 --config " + path("cfg.json") + " --max-epochs 7 --out " +
                 path("m"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ckpt = load_checkpoint(path("m/checkpoint.frnet"));
    EXPECT_EQ(ckpt.config.learning_rate, 0.05);
    EXPECT_EQ(ckpt.config.max_epochs, 7);
    EXPECT_EQ(ckpt.config.arch.hidden_widths.back(), 3);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("train --out " + path("x")).code, 2);
    EXPECT_EQ(run("train --experiment 1 --lr 0 --out " + path("x")).code, 2);
    EXPECT_EQ(run("train --experiment 1 --n 20 --data foo.csv --out " + path("x")).code, 2);
    EXPECT_EQ(run("simulate --experiment 1 --n 5 --seed notanumber --out " + path("x.csv")).code, 2);
    EXPECT_EQ(run("predict --checkpoint " + path("missing.frnet") + " --inputs " + path("missing.csv")).code, 1);
    auto r = run("reproduce --experiment 3 --out " + path("r"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Compositions CSV"), std::string::npos);
}

TEST_F(Cli, ReproduceWritesTables) {
    auto r = run(std::string("reproduce --experiment 2 --n 25 --nodes 4 --replicates 2 --methods DFNN,GFR,MEAN "
                             "--seed 5 ") +
                 kTiny + " --out " + path("rep"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = csv::read_file(path("rep/summary.csv"));
    EXPECT_EQ(summary.substr(0, summary.find('\n')),
              "setting,DFNN_mean,DFNN_sd,DFNN_failed,GFR_mean,GFR_sd,GFR_failed,MEAN_mean,MEAN_sd,MEAN_failed");
    EXPECT_EQ(r.out, summary);
    const auto results = csv::read_file(path("rep/results.csv"));
    EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 7);
    EXPECT_TRUE(fs::exists(dir_ / "rep" / "manifest.json"));
}

TEST_F(Cli, GridSearch) {
    ASSERT_EQ(run("simulate --experiment 1 --n 30 --seed 2 --out " + path("d.csv")).code, 0);
    auto r = run("grid-search --data " + path("d.csv") +
                 " --depth 2 --width 8 --last-width 3 --lr 0.001,0.01 --dropout 0 --max-epochs 10 --burn-in 2 "
                 "--out " +
                 path("g"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = csv::read_file(path("g/grid.csv"));
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
    EXPECT_EQ(r.out.rfind("best depth 2 width 8 last_width 3", 0), 0u);
}
