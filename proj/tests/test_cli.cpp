#include "cli.hpp"

#include "trtm/evaluation.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <cstdlib>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace trtm;

namespace {

const fs::path kFixtures = TRTM_FIXTURE_DIR;

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "trtm");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        static std::atomic<int> counter{0};
        dir_ = fs::temp_directory_path() /
               ("trtm_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
    const std::string micro_ = (kFixtures / "micro/manifest.json").string();
    const std::string shop_ = (kFixtures / "shop/manifest.json").string();
};

} // namespace

TEST_F(CliTest, NoArgumentsIsUsageError) {
    EXPECT_EQ(run_cli({}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
}

TEST_F(CliTest, ScoreStaticFrequencyCountsEvents) {
    const auto r = run_cli({"score", "--manifest", micro_, "--metric", "frequency", "--horizon", "static",
                            "--as-of", "1700000000"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "class_id,risk\norg.demo.Alpha,4\norg.demo.Beta,2\norg.demo.Gamma,1\n");
}

TEST_F(CliTest, ScoreHalfLifeMatchesLibrary) {
    const auto r = run_cli({"score", "--manifest", micro_, "--metric", "extent", "--horizon", "32",
                            "--as-of", "1700000000"});
    ASSERT_EQ(r.code, 0) << r.err;
    // Alpha: ages 1..4 days, Beta: 2 and 5, Gamma: 3; each event weighs ln(6).
    const double w = std::log(6.0);
    auto decayed = [&](std::initializer_list<double> ages) {
        double s = 0;
        for (double a : ages)
            s += w * std::exp(-std::log(2.0) / 32 * a);
        return s;
    };
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    const std::vector<double> want{decayed({4, 3, 2, 1}), decayed({5, 2}), decayed({3})};
    for (double expected : want) {
        ASSERT_TRUE(std::getline(in, line));
        const double got = std::stod(line.substr(line.find(',') + 1));
        EXPECT_NEAR(got, expected, 1e-12 * expected) << line;
    }
}

TEST_F(CliTest, ScoreTakesAsOfFromSingleLabel) {
    const fs::path m = dir_ / "manifest.json";
    put(dir_ / "labels.json", R"({"version_id":"x","as_of":1700000000,"fault_revealing_tests":["a#b"]})");
    auto doc = nlohmann::json::parse(slurp(micro_));
    doc["change_log"] = (kFixtures / "micro/events.jsonl").string();
    doc["callgraph"] = (kFixtures / "micro/callgraph.txt").string();
    doc["labels"] = "labels.json";
    put(m, doc.dump());
    const auto r = run_cli({"score", "--manifest", m.string(), "--metric", "frequency", "--horizon", "static"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("org.demo.Alpha,4"), std::string::npos);

    // Two labels: the reference time is ambiguous.
    EXPECT_EQ(run_cli({"score", "--manifest", micro_}).code, cli::kUsage);
}

TEST_F(CliTest, MissingInputExit2) {
    const auto r = run_cli({"score", "--manifest", (dir_ / "nope.json").string(), "--as-of", "5"});
    EXPECT_EQ(r.code, cli::kMissingInput);
    EXPECT_NE(r.err.find("nope.json"), std::string::npos);

    put(dir_ / "m.json", R"({"change_log":"missing.jsonl","callgraph":"cg.txt","entry_selector":{"explicit":[]}})");
    const auto r2 = run_cli({"deps", "--manifest", (dir_ / "m.json").string()});
    EXPECT_EQ(r2.code, cli::kMissingInput);
    EXPECT_NE(r2.err.find("missing.jsonl"), std::string::npos);

    EXPECT_EQ(run_cli({"ingest", "--numstat", (dir_ / "none.txt").string()}).code, cli::kMissingInput);
}

TEST_F(CliTest, ParseErrorExit3WithLine) {
    put(dir_ / "events.jsonl", "{\"path\":\"A.java\",\"ts\":5,\"add\":1,\"del\":0,\"commit\":\"c\"}\n{broken\n");
    put(dir_ / "cg.txt", "");
    put(dir_ / "m.json", R"({"change_log":"events.jsonl","callgraph":"cg.txt","entry_selector":{"explicit":[]}})");
    const auto r = run_cli({"score", "--manifest", (dir_ / "m.json").string(), "--as-of", "10"});
    EXPECT_EQ(r.code, cli::kParseError);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;

    put(dir_ / "bad.json", "{not json");
    EXPECT_EQ(run_cli({"deps", "--manifest", (dir_ / "bad.json").string()}).code, cli::kParseError);
}

TEST_F(CliTest, MinimizeWritesTwoLines) {
    const auto out = dir_ / "min";
    const auto r = run_cli({"minimize", "--manifest", micro_, "--budget", "0.5", "--as-of", "1700000000",
                            "--output", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(out / "selected.txt"), "org.demo.AlphaTest#testOne\norg.demo.AlphaTest#testTwo\n");
    const auto doc = nlohmann::json::parse(slurp(out / "result.json"));
    EXPECT_EQ(doc["excluded"].size(), 2u);
    EXPECT_EQ(doc["config"], "metric=extent;horizon=32;aggregate=gmean;budget=0.5;as_of=1700000000");
}

TEST_F(CliTest, MinimizeIsByteIdentical) {
    const auto a = dir_ / "a", b = dir_ / "b";
    for (const auto& d : {a, b})
        ASSERT_EQ(run_cli({"minimize", "--manifest", shop_, "--as-of", "1620900000", "--aggregate", "hmean",
                           "--output", d.string()})
                      .code,
                  0);
    EXPECT_EQ(slurp(a / "selected.txt"), slurp(b / "selected.txt"));
    EXPECT_EQ(slurp(a / "result.json"), slurp(b / "result.json"));
}

TEST_F(CliTest, BadFlagValuesAreUsageErrors) {
    const std::string out = (dir_ / "x").string();
    EXPECT_EQ(run_cli({"minimize", "--manifest", micro_, "--budget", "0.0", "--as-of", "5", "--output", out}).code,
              cli::kUsage);
    EXPECT_EQ(run_cli({"minimize", "--manifest", micro_, "--budget", "1.5", "--as-of", "5", "--output", out}).code,
              cli::kUsage);
    EXPECT_EQ(run_cli({"score", "--manifest", micro_, "--horizon", "-1", "--as-of", "5"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"score", "--manifest", micro_, "--metric", "lines", "--as-of", "5"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"minimize", "--manifest", micro_, "--aggregate", "max", "--as-of", "5", "--output", out}).code,
              cli::kUsage);
    EXPECT_EQ(run_cli({"minimize", "--manifest", micro_, "--as-of", "5"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"deps", "--manifest", micro_, "--format", "dot"}).code, cli::kUsage);
}

TEST_F(CliTest, IngestConvertsNumstat) {
    const auto r = run_cli({"ingest", "--numstat", (kFixtures / "numstat_renames.txt").string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
    std::istringstream in(r.out);
    const auto events = parse_change_log(in);
    EXPECT_EQ(events.size(), 6u);
    EXPECT_EQ(events.back().renamed_from, "src/new/a/B.java");
}

TEST_F(CliTest, DepsJson) {
    const auto r = run_cli({"deps", "--manifest", shop_});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.size(), 10u);
    EXPECT_TRUE(doc["shop.LegacyTest#testRemoved"].empty());
    const auto cancel = doc["shop.OrderTest#testCancel"].get<std::vector<std::string>>();
    EXPECT_EQ(std::count(cancel.begin(), cancel.end(), "shop.TestSupport"), 0);
    EXPECT_EQ(std::count(cancel.begin(), cancel.end(), "shop.Shipping"), 1);
}

TEST_F(CliTest, EvaluateMatchesRunVersion) {
    const auto out = dir_ / "eval";
    const auto r = run_cli({"evaluate", "--manifest", micro_, "--metric", "frequency", "--horizon", "static",
                            "--budget", "0.5", "--output", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(slurp(out / "outcomes.csv"));
    const auto rows = parse_outcomes_csv(csv);
    ASSERT_EQ(rows.size(), 2u);
    // demo-1 keeps its fault test (ranked second of four); demo-2's tests rank third and fourth.
    EXPECT_EQ(rows[0].version_id, "demo-1");
    EXPECT_EQ(rows[0].accuracy, 1.0);
    EXPECT_TRUE(rows[0].detected);
    EXPECT_EQ(rows[1].accuracy, 0.0);
    EXPECT_FALSE(rows[1].detected);
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(summary["fdr"], 0.5);
    EXPECT_EQ(summary["versions"], 2);
    EXPECT_EQ(summary["accuracy"]["max"], 1.0);
}

TEST_F(CliTest, EvaluateAllDetected) {
    const auto out = dir_ / "eval";
    ASSERT_EQ(run_cli({"evaluate", "--manifest", micro_, "--budget", "1", "--output", out.string()}).code, 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(out / "summary.json"))["fdr"], 1.0);
}

TEST_F(CliTest, LabelErrorsExit4) {
    auto doc = nlohmann::json::parse(slurp(micro_));
    doc["change_log"] = (kFixtures / "micro/events.jsonl").string();
    doc["callgraph"] = (kFixtures / "micro/callgraph.txt").string();
    doc["labels"] = "absent.json";
    put(dir_ / "m.json", doc.dump());
    const std::string out = (dir_ / "o").string();
    EXPECT_EQ(run_cli({"evaluate", "--manifest", (dir_ / "m.json").string(), "--output", out}).code, cli::kLabelError);

    doc.erase("labels");
    put(dir_ / "m.json", doc.dump());
    EXPECT_EQ(run_cli({"evaluate", "--manifest", (dir_ / "m.json").string(), "--output", out}).code, cli::kLabelError);

    put(dir_ / "empty.json", R"({"version_id":"v","as_of":5,"fault_revealing_tests":[]})");
    doc["labels"] = "empty.json";
    put(dir_ / "m.json", doc.dump());
    EXPECT_EQ(run_cli({"evaluate", "--manifest", (dir_ / "m.json").string(), "--output", out}).code, cli::kLabelError);
}

TEST_F(CliTest, SweepGridAndCardinality) {
    const auto out = dir_ / "sweep";
    const auto r = run_cli({"sweep", "--manifest", micro_, "--manifest", shop_, "--jobs", "2", "--output",
                            out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(out / "sweep.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(in, line))
        ++rows;
    EXPECT_EQ(rows, 240);

    const auto out2 = dir_ / "one";
    ASSERT_EQ(run_cli({"sweep", "--manifest", micro_, "--metric", "frequency", "--horizon", "static",
                       "--aggregate", "gmean", "--budget", "0.5", "--output", out2.string()})
                  .code,
              0);
    std::istringstream one(slurp(out2 / "sweep.csv"));
    std::getline(one, line);
    std::getline(one, line);
    EXPECT_TRUE(line.starts_with("frequency,static,gmean,0.5,0.5,0.5,0,0,0.5,1,1,")) << line;
    EXPECT_FALSE(std::getline(one, line));

    EXPECT_EQ(run_cli({"sweep", "--manifest", micro_, "--budget", "0.5,2", "--output", out2.string()}).code,
              cli::kUsage);
}

TEST_F(CliTest, CompareIdenticalAndMisaligned) {
    put(dir_ / "a.csv", "version_id,accuracy,detected,wall_time_s\nv1,1,1,0.1\nv2,0,0,0.2\nv3,0.5,1,0.1\n");
    put(dir_ / "b.csv", "version_id,accuracy,detected,wall_time_s\nv1,1,1,0.3\nv9,0,0,0.2\nv3,0.5,1,0.1\n");
    const auto same = run_cli({"compare", (dir_ / "a.csv").string(), (dir_ / "a.csv").string(), "--bonferroni-m", "2"});
    ASSERT_EQ(same.code, 0) << same.err;
    const auto doc = nlohmann::json::parse(same.out);
    EXPECT_EQ(doc["wilcoxon_accuracy"]["status"], "degenerate sample");
    EXPECT_EQ(doc["cliffs_delta_accuracy"], 0.0);
    EXPECT_EQ(doc["fisher_detection"]["p_two_sided"], 1.0);

    const auto bad = run_cli({"compare", (dir_ / "a.csv").string(), (dir_ / "b.csv").string()});
    EXPECT_EQ(bad.code, cli::kAlignmentError);
    EXPECT_NE(bad.err.find("v2"), std::string::npos);
    EXPECT_NE(bad.err.find("v9"), std::string::npos);

    EXPECT_EQ(run_cli({"compare", (dir_ / "a.csv").string(), (dir_ / "zz.csv").string()}).code, cli::kMissingInput);
    put(dir_ / "c.csv", "nonsense\n");
    EXPECT_EQ(run_cli({"compare", (dir_ / "a.csv").string(), (dir_ / "c.csv").string()}).code, cli::kParseError);
}

TEST_F(CliTest, CompareKnownValues) {
    std::string a = "version_id,accuracy,detected,wall_time_s\n", b = a;
    const std::vector<double> diffs{0.15, -0.05, 0.2, 0.3, -0.1, 0.4, 0.25, 0.07, -0.22};
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        a += "v" + std::to_string(i) + "," + std::to_string(0.5 + diffs[i]) + "," + (i != 1 ? "1" : "0") + ",0\n";
        b += "v" + std::to_string(i) + ",0.5," + (i < 3 ? "1" : "0") + ",0\n";
    }
    put(dir_ / "a.csv", a);
    put(dir_ / "b.csv", b);
    const auto r = run_cli({"compare", (dir_ / "a.csv").string(), (dir_ / "b.csv").string(), "--bonferroni-m", "4",
                            "--output", (dir_ / "cmp").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = nlohmann::json::parse(slurp(dir_ / "cmp/comparison.json"));
    EXPECT_EQ(doc["wilcoxon_accuracy"]["method"], "exact");
    EXPECT_NEAR(doc["wilcoxon_accuracy"]["p_two_sided"].get<double>(), 0.1640625, 1e-12);
    EXPECT_NEAR(doc["wilcoxon_accuracy"]["p_adjusted"].get<double>(), 0.65625, 1e-12);
    EXPECT_EQ(doc["fisher_detection"]["table"], nlohmann::json::parse("[[8,1],[3,6]]"));
    EXPECT_NEAR(doc["fisher_detection"]["odds_ratio"].get<double>(), 16.0, 1e-12);
}

TEST_F(CliTest, SeedCheckModeStillSucceeds) {
    ::setenv("TRTM_SEED_CHECK", "1", 1);
    const auto r = run_cli({"minimize", "--manifest", shop_, "--as-of", "1618000000", "--output",
                            (dir_ / "m").string()});
    const auto e = run_cli({"evaluate", "--manifest", shop_, "--output", (dir_ / "e").string()});
    ::unsetenv("TRTM_SEED_CHECK");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(e.code, 0) << e.err;
}
