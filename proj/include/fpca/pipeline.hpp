#pragma once

#include <optional>
#include <vector>

#include "fpca/dataset.hpp"
#include "fpca/initializer.hpp"
#include "fpca/likelihood.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/spline_basis.hpp"

namespace fpca {

/// Basis-coordinate caches of every subject.
std::vector<SubjectCache> make_subject_caches(const BasisSystem& basis,
                                              const SparseDataset& centered);

struct PreparedData {
  MeanEstimate mean;
  SparseDataset centered;
};

/// Mean estimation followed by centering.
PreparedData prepare(const SparseDataset& data,
                     std::optional<double> mean_bandwidth = std::nullopt);

/// Initializer plus optimizer for one (M, r) cell of centered data.
struct CellFit {
  BasisSystem basis;
  std::vector<SubjectCache> caches;
  FitReport report;
};

CellFit fit_cell(const SparseDataset& centered, int num_basis, int rank,
                 const FitOptions& fit_opts = {}, const InitOptions& init_opts = {});

/// Eigenfunction values psi(t) = B^T phi(t) for each t; rows follow `times`.
MatrixXd eigenfunction_values(const BasisSystem& basis, const ModelParams& params,
                              const VectorXd& times);

}  // namespace fpca
