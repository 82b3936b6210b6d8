#include "fpca/pipeline.hpp"

#include "fpca/errors.hpp"

namespace fpca {

std::vector<SubjectCache> make_subject_caches(const BasisSystem& basis,
                                              const SparseDataset& centered) {
  std::vector<SubjectCache> out;
  out.reserve(centered.num_subjects());
  for (const auto& s : centered.subjects) {
    MatrixXd design = evaluate_design(basis, s.times);
    VectorXd y = Eigen::Map<const VectorXd>(s.values.data(), static_cast<Index>(s.size()));
    out.emplace_back(std::move(design), std::move(y));
  }
  return out;
}

PreparedData prepare(const SparseDataset& data, std::optional<double> mean_bandwidth) {
  data.validate();
  MeanEstimate mean = estimate_mean(data, mean_bandwidth);
  SparseDataset centered = center(data, mean);
  return PreparedData{std::move(mean), std::move(centered)};
}

CellFit fit_cell(const SparseDataset& centered, int num_basis, int rank,
                 const FitOptions& fit_opts, const InitOptions& init_opts) {
  BasisSystem basis(num_basis);
  if (rank < 1 || rank > num_basis) throw DimensionError("rank must lie in [1, M]");
  std::vector<SubjectCache> caches = make_subject_caches(basis, centered);
  const ModelParams init = initial_params(centered, basis, rank, init_opts);
  FitReport report = fit(caches, init, fit_opts);
  return CellFit{std::move(basis), std::move(caches), std::move(report)};
}

MatrixXd eigenfunction_values(const BasisSystem& basis, const ModelParams& params,
                              const VectorXd& times) {
  if (params.basis_size() != basis.size()) throw DimensionError("basis size mismatch");
  MatrixXd out(times.size(), params.rank());
  for (Index a = 0; a < times.size(); ++a) {
    out.row(a) = (params.coef.values().transpose() * basis.values(times(a))).transpose();
  }
  return out;
}

}  // namespace fpca
