#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "test_util.hpp"

using namespace svddsel;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "svddsel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto r = run({"generate", "--scenario", "paper-4.2", "--seed", "42", "--out-dir", data.path().string(),
                        "--val-normals", "200", "--val-anomalies", "200"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  std::string at(const std::string& name) const { return (dir / name).string(); }
  std::string in_data(const std::string& name) const { return (data / name).string(); }

  testutil::TempDir data, dir;
};

}  // namespace

TEST_F(CliTest, GenerateMixtureScenario) {
  const auto train = load_csv(in_data("train.csv"));
  EXPECT_EQ(train.data.size(), 100);
  EXPECT_EQ(train.data.dim(), 5);
  const auto val = load_csv(in_data("validation.csv"), std::string("label"));
  EXPECT_EQ(val.normals(), 200u);
  EXPECT_EQ(val.anomalies(), 200u);
  for (Eigen::Index i = 0; i < val.data.size(); ++i) {
    if (val.labels[static_cast<std::size_t>(i)] == -1) {
      EXPECT_TRUE(BoundingBox::cube(5, -5.0, 5.0).contains(val.data.row(i)));
    }
  }
  EXPECT_EQ(load_csv(in_data("anomalies.csv")).data.size(), 100);
  const auto echo = nlohmann::json::parse(testutil::read_text(data / "generate.json"));
  EXPECT_EQ(echo["seed"], 42);
  EXPECT_EQ(echo["normals"], 100);
}

TEST_F(CliTest, SweepIsDeterministicAndEchoesConfig) {
  const auto sweep = [&](const std::string& out, const std::string& jobs) {
    return run({"sweep", "--train", in_data("train.csv"), "--risk", "smote", "--nu", "0.1", "--seed", "7", "--grid",
                "0.5:50:6", "--mc-count", "2000", "--out", out, "--jobs", jobs});
  };
  ASSERT_EQ(sweep(at("a.csv"), "1").code, 0);
  ASSERT_EQ(sweep(at("b.csv"), "4").code, 0);
  EXPECT_EQ(testutil::read_text(dir / "a.csv"), testutil::read_text(dir / "b.csv"));
  const auto curve = load_curve_csv(at("a.csv"));
  EXPECT_EQ(curve.size(), 6u);
  EXPECT_EQ(curve.kind, RiskKind::kSmote);
  const auto echo = nlohmann::json::parse(testutil::read_text(dir / "a.csv.json"));
  EXPECT_EQ(echo["seed"], 7);
  EXPECT_EQ(echo["svdd"]["nu"], 0.1);
  EXPECT_EQ(echo["grid"]["mode"], "explicit");
  EXPECT_EQ(echo["mc_count"], 2000);
  EXPECT_EQ(echo["smote_k"], 5);
}

TEST_F(CliTest, AutoGridIsRecorded) {
  ASSERT_EQ(run({"sweep", "--train", in_data("train.csv"), "--risk", "kernel", "--out", at("k.csv"), "--validation",
                 in_data("validation.csv")})
                .code,
            0);
  const auto echo = nlohmann::json::parse(testutil::read_text(dir / "k.csv.json"));
  EXPECT_EQ(echo["grid"]["mode"], "auto");
  EXPECT_EQ(echo["grid"]["steps"], 50);
  EXPECT_DOUBLE_EQ(echo["grid"]["min"].get<double>(), 1e-2 * echo["grid"]["median_sq_distance"].get<double>());
  EXPECT_EQ(load_curve_csv(at("k.csv.validation.csv")).kind_name(), "validation");
}

TEST_F(CliTest, SelectOnConstantCurvePicksLargestGamma) {
  testutil::write_text(dir / "flat.csv", "gamma,value,kind,nu\n0.1,1,empirical,0.1\n1,1,empirical,0.1\n10,1,empirical,0.1\n");
  const auto r = run({"select", "--curve", at("flat.csv"), "--rule", "plateau-max"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["gamma"], 10.0);
  EXPECT_EQ(j["plateau_start"], 0);
  EXPECT_EQ(j["plateau_end"], 2);
  EXPECT_EQ(j["rule"], "plateau-max");
}

TEST_F(CliTest, SelectDefaultsToArgminForSv) {
  testutil::write_text(dir / "sv.csv", "gamma,value,kind,nu\n0.1,0.5,sv,0.1\n1,0,sv,0.1\n10,0,sv,0.1\n");
  const auto j = nlohmann::json::parse(run({"select", "--curve", at("sv.csv")}).out);
  EXPECT_EQ(j["rule"], "argmin");
  EXPECT_EQ(j["gamma"], 1.0);
}

TEST_F(CliTest, FitWritesLoadableModel) {
  ASSERT_EQ(run({"fit", "--train", in_data("train.csv"), "--gamma", "5", "--nu", "0.1", "--out", at("m.json")}).code, 0);
  const auto j = nlohmann::json::parse(testutil::read_text(dir / "m.json"));
  const auto model = model_from_json(j);
  EXPECT_EQ(model.gamma().value(), 5.0);
  EXPECT_NEAR(model.alphas().sum(), 1.0, 1e-9);
  EXPECT_LE(j["stats"]["outlier_fraction"].get<double>(), 0.11);
  EXPECT_EQ(j["config"]["seed"], 0);
  ASSERT_EQ(run({"fit", "--train", in_data("train.csv"), "--gamma", "5", "--nu", "0.1", "--out", at("m2.json")}).code, 0);
  EXPECT_EQ(testutil::read_text(dir / "m.json"), testutil::read_text(dir / "m2.json"));
}

TEST_F(CliTest, Errors) {
  EXPECT_NE(run({}).code, 0);
  EXPECT_NE(run({"frobnicate"}).code, 0);
  EXPECT_NE(run({"fit", "--train", in_data("train.csv"), "--gamma", "1", "--out", at("x.json"), "--bogus"}).code, 0);
  EXPECT_NE(run({"fit", "--train", in_data("train.csv"), "--gamma", "-1", "--out", at("x.json")}).code, 0);
  EXPECT_NE(run({"fit", "--train", at("missing.csv"), "--gamma", "1", "--out", at("x.json")}).code, 0);

  const auto small = run({"fit", "--train", in_data("train.csv"), "--gamma", "1", "--nu", "0.001", "--out", at("x.json")});
  EXPECT_EQ(small.code, 3);
  EXPECT_NE(small.err.find("nu * l"), std::string::npos);

  testutil::write_text(dir / "bad.csv", "f1,f2\n1,x\n");
  const auto bad = run({"fit", "--train", at("bad.csv"), "--gamma", "1", "--out", at("x.json")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("row 1"), std::string::npos);

  EXPECT_EQ(run({"sweep", "--train", in_data("train.csv"), "--grid", "1:0.5:3", "--out", at("g.csv")}).code, 3);
  EXPECT_NE(run({"sweep", "--train", in_data("train.csv"), "--risk", "nope", "--out", at("g.csv")}).code, 0);
  EXPECT_EQ(run({"benchmark", "--out", at("r.json")}).code, 3);
}

TEST_F(CliTest, BenchmarkOnCorpusIsDeterministic) {
  const auto bench = [&](const std::string& name, const std::string& jobs) {
    return run({"benchmark", "--input", std::string(SVDDSEL_CORPUS_DIR) + "/iris.csv", "--fractions", "0.1",
                "--risks", "kernel,sv", "--grid-steps", "6", "--mc-count", "1000", "--seed", "5", "--out",
                at(name + ".json"), "--curves-out", at(name + ".csv"), "--jobs", jobs});
  };
  ASSERT_EQ(bench("a", "1").code, 0);
  ASSERT_EQ(bench("b", "4").code, 0);
  EXPECT_EQ(testutil::read_text(dir / "a.json"), testutil::read_text(dir / "b.json"));
  EXPECT_EQ(testutil::read_text(dir / "a.csv"), testutil::read_text(dir / "b.csv"));
  const auto j = nlohmann::json::parse(testutil::read_text(dir / "a.json"));
  EXPECT_EQ(j["config"]["task_count"], 3);
  EXPECT_EQ(j["records"].size(), 6u);
  EXPECT_EQ(testutil::read_text(dir / "a.csv").rfind("method,beta,p\n", 0), 0u);
}
