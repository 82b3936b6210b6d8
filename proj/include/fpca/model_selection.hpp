#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpca/dataset.hpp"
#include "fpca/initializer.hpp"
#include "fpca/likelihood.hpp"
#include "fpca/optimizer.hpp"

namespace fpca {

/// Terms of the second-order approximation to leave-one-curve-out CV.
struct CvBreakdown {
  double in_sample = 0.0;        // sum_i l_i at the estimate
  double first_order_tz = 0.0;   // sum_i g_i^T H^{-1} g_i in (tau, zeta)
  double first_order_b = 0.0;    // sum_i <g_i, H_B^{-1} g_i>_c
  double second_order_tz = 0.0;  // 3/2 sum_i d_i^T H_i d_i, d_i = H^{-1} g_i
  double second_order_b = 0.0;   // 3/2 sum_i Hess_B l_i(d_i, d_i)
  double total = 0.0;
};

/// Needs a converged fit and n >= r + 2 subjects (PreconditionError
/// otherwise). Performs one likelihood pass over `data`.
CvBreakdown approx_cv(const FitReport& fit, const std::vector<SubjectCache>& data);

struct CellResult {
  int num_basis = 0;
  int rank = 0;
  std::optional<FitReport> fit;
  std::optional<CvBreakdown> cv;
  std::string failure;  // empty when the cell is usable

  bool ok() const noexcept { return fit && fit->converged && cv.has_value(); }
};

struct SelectionOptions {
  FitOptions fit;
  InitOptions init;
  std::vector<double> fev_kappas;
};

struct SelectionResult {
  std::vector<CellResult> grid;  // sorted by (M, r)
  std::size_t chosen = 0;        // index into grid
  std::map<double, int> fev_pruned_r;

  const CellResult& best() const { return grid.at(chosen); }
};

/// Index of the usable cell with the smallest CV total; ties go to the
/// smaller M, then the smaller r. NoModelError when no cell is usable.
std::size_t choose_best(const std::vector<CellResult>& cells);

/// Fits and scores every (M, r) with r <= M on centered data.
SelectionResult select_model(const SparseDataset& centered, const std::vector<int>& m_grid,
                             const std::vector<int>& r_grid, const SelectionOptions& opts = {});

/// Smallest count whose cumulative eigenvalue share reaches kappa.
int fev_prune(const VectorXd& lambda, double kappa);

}  // namespace fpca
