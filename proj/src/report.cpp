#include "fpca/report.hpp"

#include <cmath>

#include "fpca/pipeline.hpp"

namespace fpca {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json trace_json(const std::vector<IterationRecord>& trace) {
  Json out = Json::array();
  for (const auto& t : trace) {
    out.push_back({{"iteration", t.iteration},
                   {"objective", number(t.objective)},
                   {"grad_supnorm", number(t.grad_supnorm)},
                   {"alpha_tz", t.alpha_tz},
                   {"alpha_b", t.alpha_b},
                   {"levenberg_shift", t.levenberg_shift},
                   {"newton_direction", t.newton_direction}});
  }
  return out;
}

Json mean_json(const MeanEstimate& mean, const SparseDataset& data) {
  Json t = Json::array();
  for (Index a = 0; a < mean.grid().size(); ++a) t.push_back(data.to_original(mean.grid()(a)));
  return {{"bandwidth", mean.bandwidth()}, {"t", to_json(mean.grid())}, {"t_original", t},
          {"values", to_json(mean.grid_values())}};
}

Json eigenfunction_json(const BasisSystem& basis, const ModelParams& params,
                        const SparseDataset& data, int grid_size) {
  const VectorXd grid = VectorXd::LinSpaced(grid_size, 0.0, 1.0);
  const MatrixXd values = eigenfunction_values(basis, params, grid);
  Json t = Json::array();
  for (Index a = 0; a < grid.size(); ++a) t.push_back(data.to_original(grid(a)));
  Json comps = Json::array();
  for (Index k = 0; k < values.cols(); ++k) comps.push_back(to_json(VectorXd(values.col(k))));
  return {{"t", to_json(grid)}, {"t_original", t}, {"values", comps}};
}

Json fit_core(const FitReport& fit) {
  return {{"converged", fit.converged},
          {"iterations", fit.iterations},
          {"final_grad_supnorm", number(fit.final_grad_supnorm)},
          {"neg_loglik", number(fit.neg_loglik)},
          {"failure_reason", fit.failure_reason},
          {"warnings", fit.warnings},
          {"eigenvalues", to_json(fit.params.eigenvalues())},
          {"noise_variance", fit.params.noise_variance()},
          {"coefficients", to_json(fit.params.coef.values())},
          {"trace", trace_json(fit.trace)}};
}

}  // namespace

Json to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(number(v(k)));
  return out;
}

Json to_json(const MatrixXd& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(VectorXd(m.row(i).transpose())));
  return out;
}

Json to_json(const CvBreakdown& cv) {
  return {{"in_sample", cv.in_sample},
          {"first_order_tz", cv.first_order_tz},
          {"first_order_b", cv.first_order_b},
          {"second_order_tz", cv.second_order_tz},
          {"second_order_b", cv.second_order_b},
          {"total", cv.total}};
}

Json fit_json(const FitReport& fit, const BasisSystem& basis, const SparseDataset& data,
              const MeanEstimate& mean, const std::optional<CvBreakdown>& cv,
              const std::string& cv_note, int grid_size) {
  Json doc = {{"schema", kFitSchema},
              {"M", basis.size()},
              {"r", fit.params.rank()},
              {"n", data.num_subjects()},
              {"time_rescale", {{"min", data.time_min}, {"max", data.time_max}}}};
  doc.update(fit_core(fit));
  doc["approx_cv"] = cv ? to_json(*cv) : Json(nullptr);
  if (!cv_note.empty()) doc["approx_cv_note"] = cv_note;
  doc["mean"] = mean_json(mean, data);
  doc["eigenfunctions"] = eigenfunction_json(basis, fit.params, data, grid_size);
  return doc;
}

Json selection_json(const SelectionResult& result, const SparseDataset& data,
                    const MeanEstimate& mean, int grid_size) {
  Json cells = Json::array();
  for (const auto& c : result.grid) {
    Json cell = {{"M", c.num_basis}, {"r", c.rank}, {"usable", c.ok()}};
    if (c.fit) {
      cell["converged"] = c.fit->converged;
      cell["iterations"] = c.fit->iterations;
      cell["neg_loglik"] = number(c.fit->neg_loglik);
      cell["eigenvalues"] = to_json(c.fit->params.eigenvalues());
      cell["noise_variance"] = c.fit->params.noise_variance();
    }
    cell["approx_cv"] = c.cv ? to_json(*c.cv) : Json(nullptr);
    cell["failure"] = c.failure;
    cells.push_back(cell);
  }
  const CellResult& best = result.best();
  Json fev = Json::array();
  for (const auto& [kappa, r] : result.fev_pruned_r) fev.push_back({{"kappa", kappa}, {"r", r}});
  const BasisSystem basis(best.num_basis);
  Json chosen = {{"M", best.num_basis}, {"r", best.rank}};
  chosen.update(fit_core(*best.fit));
  chosen["approx_cv"] = to_json(*best.cv);
  chosen["eigenfunctions"] = eigenfunction_json(basis, best.fit->params, data, grid_size);
  return {{"schema", kSelectSchema},
          {"n", data.num_subjects()},
          {"time_rescale", {{"min", data.time_min}, {"max", data.time_max}}},
          {"grid", cells},
          {"chosen", chosen},
          {"fev_pruned_r", fev},
          {"mean", mean_json(mean, data)}};
}

Json benchmark_json(const MetricReport& report, const TruthSpec& spec) {
  Json counts = Json::array();
  for (const auto& [key, count] : report.selection_counts)
    counts.push_back({{"M", key.first}, {"r", key.second}, {"count", count}});
  Json records = Json::array();
  for (const auto& rec : report.records) {
    Json cells = Json::array();
    for (const auto& c : rec.cells) {
      cells.push_back({{"M", c.num_basis},
                       {"r", c.rank},
                       {"usable", c.converged},
                       {"cv_total", c.cv_total ? Json(*c.cv_total) : Json(nullptr)},
                       {"eigenvalues", c.fitted ? to_json(c.eigenvalues) : Json(nullptr)},
                       {"noise_variance", c.fitted ? Json(c.noise_variance) : Json(nullptr)},
                       {"failure", c.failure}});
    }
    records.push_back({{"replicate", rec.replicate},
                       {"seed", rec.seed},
                       {"converged", rec.converged},
                       {"M", rec.num_basis},
                       {"r", rec.rank},
                       {"iterations", rec.iterations},
                       {"neg_loglik", number(rec.neg_loglik)},
                       {"eigenvalues", to_json(rec.eigenvalues)},
                       {"noise_variance", number(rec.noise_variance)},
                       {"mise", to_json(rec.mise)},
                       {"orthonormality_error", number(rec.orthonormality_error)},
                       {"failure", rec.failure},
                       {"cells", cells}});
  }
  return {{"schema", kBenchSchema},
          {"setting", report.setting},
          {"noise", to_string(spec.noise)},
          {"sigma2", spec.noise_variance},
          {"n", report.n},
          {"replicates", report.replicates},
          {"seed", report.seed},
          {"M_grid", report.m_grid},
          {"r_grid", report.r_grid},
          {"converged", report.converged},
          {"mise_mean", to_json(report.mise_mean)},
          {"mise_sd", to_json(report.mise_sd)},
          {"eigenvalue_nmse", to_json(report.eigenvalue_nmse)},
          {"noise_nmse", number(report.noise_nmse)},
          {"selection_counts", counts},
          {"records", records}};
}

Json truth_json(const GroundTruth& truth) {
  const TruthSpec& s = truth.spec;
  Json doc = {{"schema", kTruthSchema},
              {"setting", to_string(s.setting)},
              {"noise", to_string(s.noise)},
              {"sigma2", s.noise_variance},
              {"seed", truth.seed},
              {"eigenvalues", to_json(s.eigenvalues)},
              {"basis_size", s.basis_size}};
  doc["coefficients"] = s.basis_size > 0 ? to_json(s.coefficients) : Json(nullptr);
  if (s.basis_size == 0) doc["eigenfunction_note"] = "orthonormalized Gaussian bumps (stand-in)";
  const VectorXd grid = VectorXd::LinSpaced(201, 0.0, 1.0);
  const MatrixXd values = s.eigenfunctions(grid);
  Json comps = Json::array();
  for (Index k = 0; k < values.cols(); ++k) comps.push_back(to_json(VectorXd(values.col(k))));
  doc["eigenfunctions"] = {{"t", to_json(grid)}, {"values", comps}};
  doc["scores"] = to_json(truth.scores);
  return doc;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace fpca
