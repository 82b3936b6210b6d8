#pragma once

#include <optional>
#include <vector>

#include "fpca/dataset.hpp"
#include "fpca/likelihood.hpp"
#include "fpca/spline_basis.hpp"

namespace fpca {

/// Local linear fit with a Gaussian kernel at x. Falls back to the kernel
/// average when the local design is degenerate.
double local_linear(const std::vector<double>& t, const std::vector<double>& y, double x,
                    double bandwidth);

/// Local linear estimate of the mean curve from pooled observations.
class MeanEstimate {
 public:
  MeanEstimate(std::vector<double> t, std::vector<double> y, double bandwidth,
               int grid_size = 101);

  double operator()(double t) const { return local_linear(t_, y_, t, bandwidth_); }
  double bandwidth() const noexcept { return bandwidth_; }
  const VectorXd& grid() const noexcept { return grid_; }
  const VectorXd& grid_values() const noexcept { return grid_values_; }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  double bandwidth_;
  VectorXd grid_;
  VectorXd grid_values_;
};

/// Candidate bandwidths: `count` geometric values in [range/20, range/2].
std::vector<double> mean_bandwidth_grid(double range, int count = 10);

/// With no bandwidth the value is chosen by leave-one-subject-out CV over
/// mean_bandwidth_grid. Needs at least 10 pooled points.
MeanEstimate estimate_mean(const SparseDataset& data,
                           std::optional<double> bandwidth = std::nullopt);

SparseDataset center(const SparseDataset& data, const MeanEstimate& mean);

struct InitOptions {
  int grid_size = 51;                  // uniform grid of the reported surface
  std::optional<double> bandwidth;     // default 2 * spacing * (n/100)^(-1/6)
  double eigen_floor_ratio = 1e-4;
  double noise_floor = 1e-4;
};

/// Smoothed covariance of centered data on a G x G uniform grid.
struct CovarianceSurface {
  VectorXd grid;
  MatrixXd values;             // C(s, t), symmetric
  VectorXd diagonal_variance;  // smoothed Var Y(t) = C(t, t) + sigma^2
  double bandwidth = 0.0;
  int size() const noexcept { return static_cast<int>(grid.size()); }
};

/// Nadaraya-Watson smoother of the within-subject cross products
/// y_ij y_ik (j != k) and of the squares y_ij^2.
class CovarianceSmoother {
 public:
  CovarianceSmoother(const SparseDataset& centered, double bandwidth);

  double bandwidth() const noexcept { return bandwidth_; }
  /// Surface on arbitrary nodes: out(a, b) = C(s_a, s_b).
  MatrixXd surface(const VectorXd& nodes) const;
  /// Smoothed Var Y(t) at each node.
  VectorXd variance(const VectorXd& nodes) const;

 private:
  MatrixXd kernel_matrix(const VectorXd& nodes) const;  // nodes x points
  double bandwidth_;
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
};

double default_surface_bandwidth(std::size_t num_subjects, int grid_size = 51);

CovarianceSurface smooth_covariance(const SparseDataset& centered, const InitOptions& opts = {});

/// K = A^T W C W A with A the basis at the quadrature nodes and W the weights:
/// the kernel's coordinates in the orthonormal basis.
MatrixXd project_kernel(const BasisSystem& basis, const MatrixXd& kernel_at_nodes);

/// Top-r eigenpairs of the (symmetrized) projected kernel turned into start
/// values, with the eigenvalue and noise floors applied.
ModelParams params_from_projection(const MatrixXd& projected, double raw_noise_variance, int r,
                                   const InitOptions& opts = {});

/// Start values from centered data.
ModelParams initial_params(const SparseDataset& centered, const BasisSystem& basis, int r,
                           const InitOptions& opts = {});

}  // namespace fpca
