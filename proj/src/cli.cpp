#include "fpca/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fpca/errors.hpp"
#include "fpca/model_selection.hpp"
#include "fpca/pipeline.hpp"
#include "fpca/report.hpp"
#include "fpca/simulation.hpp"

namespace fpca {

namespace {

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidOptionError("cannot write '" + path + "'");
  f << text;
  if (!f) throw InvalidOptionError("write failed for '" + path + "'");
}

struct SimulateArgs {
  std::string setting;
  int n = 200;
  double sigma2 = 1.0 / 16.0;
  std::string noise = "gaussian";
  std::uint64_t seed = 1;
  std::string out;
  std::string truth_out;
};

struct FitArgs {
  std::string data;
  int m = 5;
  int r = 3;
  double tol = 1e-4;
  int max_iter = 100;
  std::string out;
  int grid_size = 201;
  std::optional<double> mean_bandwidth;
};

struct SelectArgs {
  std::string data;
  std::vector<int> m_grid;
  std::vector<int> r_grid;
  std::vector<double> kappas{0.95, 0.99};
  double tol = 1e-4;
  int max_iter = 100;
  std::string out;
  std::optional<double> mean_bandwidth;
};

struct BenchArgs {
  std::string setting;
  int n = 200;
  int replicates = 20;
  std::vector<int> m_grid;
  std::vector<int> r_grid;
  std::uint64_t seed = 1;
  double sigma2 = 1.0 / 16.0;
  std::string noise = "gaussian";
  double tol = 1e-4;
  int max_iter = 100;
  std::string out;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const TruthSpec spec = make_truth(parse_setting(a.setting), a.sigma2, parse_noise(a.noise));
  const auto [data, truth] = generate(spec, a.n, a.seed);
  write_text(a.out, format_csv(data), out);
  if (!a.truth_out.empty()) write_text(a.truth_out, dump(truth_json(truth)), out);
  return kExitOk;
}

int do_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const SparseDataset data = load_csv(a.data);
  const PreparedData prep = prepare(data, a.mean_bandwidth);
  FitOptions fo;
  fo.tol = a.tol;
  fo.max_iter = a.max_iter;
  const CellFit cell = fit_cell(prep.centered, a.m, a.r, fo);
  std::optional<CvBreakdown> cv;
  std::string note;
  if (cell.report.converged) {
    try {
      cv = approx_cv(cell.report, cell.caches);
    } catch (const Error& e) {
      note = e.what();
    }
  } else {
    note = "fit did not converge";
  }
  write_text(a.out, dump(fit_json(cell.report, cell.basis, data, prep.mean, cv, note, a.grid_size)),
             out);
  if (!cell.report.converged) {
    err << "fit did not converge: " << cell.report.failure_reason << "\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

int do_select(const SelectArgs& a, std::ostream& out) {
  const SparseDataset data = load_csv(a.data);
  const PreparedData prep = prepare(data, a.mean_bandwidth);
  SelectionOptions so;
  so.fit.tol = a.tol;
  so.fit.max_iter = a.max_iter;
  so.fev_kappas = a.kappas;
  const SelectionResult result = select_model(prep.centered, a.m_grid, a.r_grid, so);
  write_text(a.out, dump(selection_json(result, data, prep.mean)), out);
  return kExitOk;
}

int do_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  const TruthSpec spec = make_truth(parse_setting(a.setting), a.sigma2, parse_noise(a.noise));
  BenchmarkOptions bo;
  bo.fit.tol = a.tol;
  bo.fit.max_iter = a.max_iter;
  const auto start = std::chrono::steady_clock::now();
  const MetricReport rep = run_benchmark(spec, a.n, a.replicates, a.m_grid, a.r_grid, a.seed, bo);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  write_text(a.out, dump(benchmark_json(rep, spec)), out);
  err << "bench: " << rep.converged << "/" << rep.replicates << " converged in "
      << elapsed.count() << " s\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse functional principal components by restricted maximum likelihood"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "generate a sparse sample from a simulation design");
  s->add_option("--setting", sim.setting, "easy|practical|challenging|hybrid")->required();
  s->add_option("--n", sim.n, "number of subjects")->check(CLI::PositiveNumber);
  s->add_option("--sigma2", sim.sigma2, "noise variance")->check(CLI::NonNegativeNumber);
  s->add_option("--noise", sim.noise, "gaussian|t4|exp");
  s->add_option("--seed", sim.seed);
  s->add_option("--out", sim.out, "CSV output (default stdout)");
  s->add_option("--truth-out", sim.truth_out, "JSON file for the ground truth");

  FitArgs fit_a;
  auto* f = app.add_subcommand("fit", "fit one (M, r) model");
  f->add_option("--data", fit_a.data, "CSV with header subject_id,t,y")->required();
  f->add_option("--M", fit_a.m, "number of basis functions")->required();
  f->add_option("--r", fit_a.r, "number of components")->required();
  f->add_option("--tol", fit_a.tol);
  f->add_option("--max-iter", fit_a.max_iter);
  f->add_option("--out", fit_a.out, "JSON output (default stdout)");
  f->add_option("--grid-size", fit_a.grid_size, "eigenfunction export points")
      ->check(CLI::Range(2, 100000));
  f->add_option("--mean-bandwidth", fit_a.mean_bandwidth);

  SelectArgs sel;
  auto* c = app.add_subcommand("select", "choose (M, r) by approximate cross-validation");
  c->add_option("--data", sel.data)->required();
  c->add_option("--M-grid", sel.m_grid)->required()->delimiter(',');
  c->add_option("--r-grid", sel.r_grid)->required()->delimiter(',');
  c->add_option("--fev-kappa", sel.kappas)->delimiter(',');
  c->add_option("--tol", sel.tol);
  c->add_option("--max-iter", sel.max_iter);
  c->add_option("--out", sel.out);
  c->add_option("--mean-bandwidth", sel.mean_bandwidth);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "seeded multi-replicate benchmark");
  b->add_option("--setting", bench.setting)->required();
  b->add_option("--n", bench.n)->check(CLI::PositiveNumber);
  b->add_option("--replicates", bench.replicates)->check(CLI::PositiveNumber);
  b->add_option("--M-grid", bench.m_grid)->required()->delimiter(',');
  b->add_option("--r-grid", bench.r_grid)->required()->delimiter(',');
  b->add_option("--seed", bench.seed);
  b->add_option("--sigma2", bench.sigma2)->check(CLI::NonNegativeNumber);
  b->add_option("--noise", bench.noise);
  b->add_option("--tol", bench.tol);
  b->add_option("--max-iter", bench.max_iter);
  b->add_option("--out", bench.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*s) return do_simulate(sim, out);
    if (*f) return do_fit(fit_a, out, err);
    if (*c) return do_select(sel, out);
    if (*b) return do_bench(bench, out, err);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NoModelError& e) {
    err << "no model: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fpca
