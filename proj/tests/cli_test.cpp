#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "strnn_cli.hpp"

namespace fs = std::filesystem;
using namespace strnn;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "strnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("strnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("STRNN_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string at(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"bogus"}).code, 2);
  EXPECT_EQ(run_cli({"factor", "--method", "greedy"}).code, 2);  // no adjacency
}

TEST_F(CliTest, FactorWritesMasksProductAndReport) {
  write_matrix(generate({PrevK{2}, 0}, 6), at("a.txt"));
  const auto r = run_cli({"factor", "-a", at("a.txt"), "-w", "10,10", "-o", at("f")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = read_json_file(at("f/report.json"));
  EXPECT_TRUE(rep.at("sparsity_ok").get<bool>());
  EXPECT_EQ(rep.at("method"), "greedy");
  EXPECT_EQ(rep.at("widths").get<std::vector<std::size_t>>(), (std::vector<std::size_t>{10, 10}));
  EXPECT_TRUE(rep.contains("wall_time_ms"));
  EXPECT_EQ(rep.at("version"), kToolVersion);
  for (int l = 1; l <= 3; ++l) EXPECT_TRUE(fs::exists(at("f/mask_" + std::to_string(l) + ".txt")));
  const IntMatrix product = parse_matrix(slurp(at("f/product.txt")));
  EXPECT_TRUE(check_sparsity_equal(product, read_matrix(at("a.txt"))));
}

TEST_F(CliTest, ExactOverBudgetExitsTwo) {
  Rng rng(1);
  write_matrix(gen_random_sparse(30, 0.5, rng), at("a.txt"));
  const auto r = run_cli({"factor", "-a", at("a.txt"), "-w", "40", "-m", "exact"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("BudgetExceeded"), std::string::npos) << r.err;
}

TEST_F(CliTest, FactorCompareGivesTriples) {
  const auto r = run_cli({"factor", "--compare", "--dim", "5", "--width", "6", "--thresholds", "0.3,0.7",
                          "--instances", "3", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rep = Json::parse(r.out);
  ASSERT_EQ(rep.at("rows").size(), 6u);
  for (const auto& row : rep.at("rows")) {
    ASSERT_TRUE(row.at("exact").is_number());
    EXPECT_GE(row.at("exact").get<double>() + 1e-9, row.at("greedy").get<double>());
    EXPECT_GE(row.at("exact").get<double>() + 1e-9, row.at("zuko").get<double>());
  }
}

TEST_F(CliTest, DatagenIsDeterministicAndRejectsBadSpecs) {
  put(at("spec.json"), R"({"family":"gaussian_sem","d":8,"n":300,"seed":5,
                           "adjacency":{"scheme":"prev_k","k":2}})");
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("a")}).code, 0);
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("b")}).code, 0);
  EXPECT_EQ(slurp(at("a/data.txt")), slurp(at("b/data.txt")));
  EXPECT_EQ(slurp(at("a/sidecar.json")), slurp(at("b/sidecar.json")));
  const Json side = read_json_file(at("a/sidecar.json"));
  EXPECT_EQ(side.at("seed"), 5);
  EXPECT_TRUE(side.contains("coefficients"));
  EXPECT_TRUE(side.contains("split"));
  const Dataset ds = load_dataset(at("a/data.txt"), at("a/sidecar.json"));
  EXPECT_EQ(ds.size(), 300u);
  EXPECT_NO_THROW(ds.validate());

  put(at("bad_ratio.json"), R"({"family":"linear_sem","d":4,"n":50,"ratios":[0.5,0.3,0.3]})");
  EXPECT_EQ(run_cli({"datagen", "-c", at("bad_ratio.json"), "-o", at("c")}).code, 2);
  put(at("bad_key.json"), R"({"family":"linear_sem","d":4,"n":50,"colour":1})");
  const auto r = run_cli({"datagen", "-c", at("bad_key.json"), "-o", at("c")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST_F(CliTest, SeedFallsBackToEnvironment) {
  put(at("spec.json"), R"({"family":"linear_sem","d":4,"n":40})");
  setenv("STRNN_SEED", "17", 1);
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("a")}).code, 0);
  unsetenv("STRNN_SEED");
  EXPECT_EQ(read_json_file(at("a/sidecar.json")).at("seed"), 17);
}

TEST_F(CliTest, TrainStrnnIsDeterministicAndVerifies) {
  put(at("spec.json"), R"({"family":"binary_sem","d":8,"n":400,"seed":2,
                           "adjacency":{"scheme":"random_sparse","threshold":0.6,"seed":1}})");
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("data")}).code, 0);
  put(at("train.json"), R"({"model":"strnn","sidecar":"data/sidecar.json","hidden":[20,20],
                            "max_epochs":5,"batch_size":50,"seed":9,"learning_rate":0.01})");
  const auto r1 = run_cli({"train", "-c", at("train.json"), "-o", at("r1")});
  ASSERT_EQ(r1.code, 0) << r1.err;
  ASSERT_EQ(run_cli({"train", "-c", at("train.json"), "-o", at("r2")}).code, 0);
  EXPECT_EQ(slurp(at("r1/checkpoint.json")), slurp(at("r2/checkpoint.json")));
  EXPECT_EQ(slurp(at("r1/history.csv")), slurp(at("r2/history.csv")));
  const Json s = read_json_file(at("r1/summary.json"));
  EXPECT_TRUE(std::isfinite(s.at("test_nll").get<double>()));
  EXPECT_GT(s.at("test_nll_stderr").get<double>(), 0.0);
  EXPECT_EQ(s.at("config").at("seed"), 9);

  const auto v = run_cli({"verify", at("r1/checkpoint.json")});
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_TRUE(Json::parse(v.out).at("violations").empty());
}

TEST_F(CliTest, VerifyFlagsCorruptedWeights) {
  put(at("spec.json"), R"({"family":"binary_sem","d":6,"n":100,"seed":2,
                           "adjacency":{"scheme":"prev_k","k":1}})");
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("data")}).code, 0);
  put(at("train.json"), R"({"model":"strnn","sidecar":"data/sidecar.json","hidden":[12],"max_epochs":1})");
  ASSERT_EQ(run_cli({"train", "-c", at("train.json"), "-o", at("r")}).code, 0);
  Json ck = read_json_file(at("r/checkpoint.json"));
  for (auto& w : ck.at("weights")) {
    for (auto& x : w) x = 0.5;
  }
  write_json_file(at("bad.json"), ck);
  const auto v = run_cli({"verify", at("bad.json")});
  EXPECT_EQ(v.code, 1);
  const Json rep = Json::parse(v.out);
  ASSERT_FALSE(rep.at("violations").empty());
  for (const auto& e : rep.at("violations")) {
    EXPECT_GT(e.at("magnitude").get<double>(), 0.0);
    EXPECT_FALSE(read_matrix(at("data/adjacency.txt"))(e.at("output").get<std::size_t>(), e.at("input").get<std::size_t>()));
  }
}

TEST_F(CliTest, MadeAuditedAgainstItsOwnProduct) {
  put(at("spec.json"), R"({"family":"gaussian_sem","d":6,"n":200,"seed":2,
                           "adjacency":{"scheme":"every_other"}})");
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("data")}).code, 0);
  put(at("train.json"), R"({"model":"made","sidecar":"data/sidecar.json","hidden":[16],"max_epochs":2})");
  ASSERT_EQ(run_cli({"train", "-c", at("train.json"), "-o", at("r")}).code, 0);
  const auto v = run_cli({"verify", at("r/checkpoint.json")});
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_EQ(Json::parse(v.out).at("reference"), "mask product");
}

TEST_F(CliTest, CausalEvalOnExactFlow) {
  put(at("spec.json"), R"({"family":"linear_sem","d":5,"n":100,"seed":8,"cutoff":1.5})");
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("data")}).code, 0);
  const LinearSEM sem{matrix_from_json(read_json_file(at("data/sidecar.json")).at("coefficients").at("weights"))};
  save_flow(at("exact.json"), linear_sem_flow(sem.weights, 2));
  const auto r = run_cli({"causal-eval", "-f", at("exact.json"), "-s", at("data/sidecar.json"),
                          "--seed", "1", "--samples", "200", "--n-obs", "100", "-o", at("m.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json m = read_json_file(at("m.json"));
  EXPECT_LT(m.at("total_cmse").get<double>(), 1e-12);
  EXPECT_LT(m.at("total_imse").get<double>(), 0.5);
  EXPECT_EQ(m.at("imse_queries").size(), 5u * 8u);
  EXPECT_EQ(m.at("settings").at("seed"), 1);

  EXPECT_EQ(run_cli({"causal-eval", "-f", at("exact.json"), "-s", at("missing.json")}).code, 2);
  save_flow(at("wrong_dim.json"), linear_sem_flow(Matrix::Zero(3, 3), 1));
  EXPECT_EQ(run_cli({"causal-eval", "-f", at("wrong_dim.json"), "-s", at("data/sidecar.json")}).code, 2);
}

TEST_F(CliTest, TrainFlowRejectsBinaryDataAndUnknownKeys) {
  put(at("spec.json"), R"({"family":"binary_sem","d":4,"n":60,"adjacency":{"scheme":"prev_k","k":1}})");
  ASSERT_EQ(run_cli({"datagen", "-c", at("spec.json"), "-o", at("data")}).code, 0);
  put(at("flow.json"), R"({"model":"flow","sidecar":"data/sidecar.json","hidden":[8]})");
  EXPECT_EQ(run_cli({"train", "-c", at("flow.json"), "-o", at("r")}).code, 2);
  put(at("typo.json"), R"({"model":"strnn","sidecar":"data/sidecar.json","hiden":[8]})");
  EXPECT_EQ(run_cli({"train", "-c", at("typo.json"), "-o", at("r")}).code, 2);
}
