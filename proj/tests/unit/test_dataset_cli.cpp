#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "fpca/cli.hpp"
#include "fpca/dataset.hpp"
#include "fpca/errors.hpp"
#include "fpca/simulation.hpp"

namespace fpca {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() /
                       ("fpca_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::create_directories(dir);
  return dir;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "fpca");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(ParseCsv, GroupsSubjectsInOrder) {
  const SparseDataset d = parse_csv("subject_id,t,y\nb,0.1,1\na,0.2,2\nb,0.3,3\na,0.4,4\nb,0.5,5\na,0.6,6\n");
  ASSERT_EQ(d.num_subjects(), 2u);
  EXPECT_EQ(d.subjects[0].id, "b");
  EXPECT_EQ(d.subjects[0].size(), 3u);
  EXPECT_EQ(d.subjects[1].size(), 3u);
  EXPECT_EQ(d.subjects[1].values, (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(d.time_min, 0.0);
  EXPECT_EQ(d.time_max, 1.0);
  EXPECT_EQ(d.subjects[0].times[0], 0.1);
}

TEST(ParseCsv, RescalesOriginalTimes) {
  const SparseDataset d = parse_csv("subject_id,t,y\n1,10,0\n1,30,1\n2,20,2\n");
  EXPECT_EQ(d.time_min, 10.0);
  EXPECT_EQ(d.time_max, 30.0);
  EXPECT_EQ(d.subjects[0].times, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(d.subjects[1].times[0], 0.5);
  EXPECT_EQ(d.to_original(0.5), 20.0);
}

TEST(ParseCsv, Errors) {
  EXPECT_THROW(parse_csv(""), EmptyError);
  EXPECT_THROW(parse_csv("subject_id,t,y\n"), EmptyError);
  EXPECT_THROW(parse_csv("id,t,y\n1,0,0\n"), ParseError);
  try {
    parse_csv("subject_id,t,y\n1,0.1,2\n1,0.2,nan\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  try {
    parse_csv("subject_id,t,y\n1,0.1,2\n\n1,abc,2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  EXPECT_THROW(parse_csv("subject_id,t,y\n1,0.1\n"), ParseError);
  EXPECT_THROW(parse_csv("subject_id,t,y\n1,inf,2\n"), ParseError);
}

TEST(Csv, RoundTrip) {
  const fs::path dir = temp_dir();
  const auto [data, truth] = generate(make_truth(Setting::kEasy), 20, 3);
  SparseDataset scaled = data;
  scaled.time_min = 2.0;
  scaled.time_max = 7.5;
  for (const SparseDataset& d : {data, scaled}) {
    save_csv(d, (dir / "d.csv").string());
    const SparseDataset back = load_csv((dir / "d.csv").string());
    ASSERT_EQ(back.num_subjects(), d.num_subjects());
    for (std::size_t i = 0; i < d.num_subjects(); ++i) {
      EXPECT_EQ(back.subjects[i].id, d.subjects[i].id);
      for (std::size_t j = 0; j < d.subjects[i].size(); ++j) {
        EXPECT_NEAR(back.to_original(back.subjects[i].times[j]),
                    d.to_original(d.subjects[i].times[j]), 1e-12);
        EXPECT_EQ(back.subjects[i].values[j], d.subjects[i].values[j]);
      }
    }
  }
  EXPECT_THROW(load_csv((dir / "missing.csv").string()), DataError);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"fit", "--bogus"}), kExitUsage);
  EXPECT_EQ(cli({}), kExitUsage);
  EXPECT_EQ(cli({"simulate", "--setting", "nope", "--out", "-"}), kExitUsage);
  std::string out;
  EXPECT_EQ(cli({"--help"}, &out), kExitOk);
  EXPECT_NE(out.find("simulate"), std::string::npos);
}

TEST(Cli, DataErrors) {
  const fs::path dir = temp_dir();
  std::ofstream(dir / "bad.csv") << "subject_id,t,y\n1,0.1,x\n";
  EXPECT_EQ(cli({"fit", "--data", (dir / "bad.csv").string(), "--M", "5", "--r", "2"}), kExitData);
  EXPECT_EQ(cli({"fit", "--data", (dir / "none.csv").string(), "--M", "5", "--r", "2"}), kExitData);
}

TEST(Cli, SimulateFitSelect) {
  const fs::path dir = temp_dir();
  const std::string csv = (dir / "easy.csv").string();
  ASSERT_EQ(cli({"simulate", "--setting", "easy", "--n", "200", "--seed", "5", "--out", csv,
                 "--truth-out", (dir / "truth.json").string()}),
            kExitOk);
  const auto truth = nlohmann::json::parse(slurp(dir / "truth.json"));
  EXPECT_EQ(truth["schema"], "fpca.truth/1");

  const std::string fit_out = (dir / "fit.json").string();
  ASSERT_EQ(cli({"fit", "--data", csv, "--M", "5", "--r", "3", "--out", fit_out}), kExitOk);
  const auto fit = nlohmann::json::parse(slurp(fit_out));
  EXPECT_EQ(fit["schema"], "fpca.fit/1");
  EXPECT_EQ(fit["converged"], true);
  EXPECT_EQ(fit["eigenfunctions"]["t"].size(), 201u);
  EXPECT_EQ(fit["eigenfunctions"]["values"].size(), 3u);
  EXPECT_FALSE(fit["approx_cv"].is_null());

  // Byte-identical output across runs and thread counts.
  const std::string fit_again = (dir / "fit2.json").string();
  ::setenv("FPCA_THREADS", "3", 1);
  ASSERT_EQ(cli({"fit", "--data", csv, "--M", "5", "--r", "3", "--out", fit_again}), kExitOk);
  ::unsetenv("FPCA_THREADS");
  EXPECT_EQ(slurp(fit_out), slurp(fit_again));

  // Lossless numerics.
  const double nll = fit["neg_loglik"].get<double>();
  std::ostringstream repr;
  repr.precision(17);
  repr << nll;
  EXPECT_EQ(std::stod(repr.str()), nll);

  const std::string sel_out = (dir / "sel.json").string();
  ASSERT_EQ(cli({"select", "--data", csv, "--M-grid", "4,5", "--r-grid", "2,3", "--fev-kappa",
                 "0.9", "--out", sel_out}),
            kExitOk);
  const auto sel = nlohmann::json::parse(slurp(sel_out));
  EXPECT_EQ(sel["schema"], "fpca.select/1");
  EXPECT_EQ(sel["grid"].size(), 4u);
  EXPECT_EQ(sel["fev_pruned_r"].size(), 1u);
}

TEST(Cli, SelectWithNoUsableCellExitsThree) {
  const fs::path dir = temp_dir();
  const std::string csv = (dir / "tiny.csv").string();
  ASSERT_EQ(cli({"simulate", "--setting", "easy", "--n", "3", "--seed", "1", "--out", csv}), kExitOk);
  std::string err;
  EXPECT_EQ(cli({"select", "--data", csv, "--M-grid", "4,5", "--r-grid", "3"}, nullptr, &err),
            kExitNoConvergence);
  EXPECT_FALSE(err.empty());
}

TEST(Cli, BenchIsReproducible) {
  const fs::path dir = temp_dir();
  const std::string a = (dir / "a.json").string();
  const std::string b = (dir / "b.json").string();
  const std::vector<std::string> base{"bench", "--setting", "easy", "--n", "60", "--replicates", "2",
                                      "--M-grid", "5", "--r-grid", "2", "--seed", "9", "--out"};
  auto args_a = base;
  args_a.push_back(a);
  auto args_b = base;
  args_b.push_back(b);
  ASSERT_EQ(cli(args_a), kExitOk);
  ::setenv("FPCA_THREADS", "1", 1);
  ASSERT_EQ(cli(args_b), kExitOk);
  ::unsetenv("FPCA_THREADS");
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(nlohmann::json::parse(slurp(a))["schema"], "fpca.bench/1");
}

}  // namespace
}  // namespace fpca
