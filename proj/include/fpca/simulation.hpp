#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpca/dataset.hpp"
#include "fpca/initializer.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/spline_basis.hpp"

namespace fpca {

enum class Setting { kEasy, kPractical, kChallenging, kHybrid };
enum class NoiseKind { kGaussian, kT4, kExponential };

Setting parse_setting(const std::string& name);
NoiseKind parse_noise(const std::string& name);
std::string to_string(Setting s);
std::string to_string(NoiseKind k);

/// Unit-variance, mean-zero noise draw: N(0,1), t_4 / sqrt(2), Exp(1) - 1.
double draw_noise(NoiseKind kind, std::mt19937_64& rng);

/// Truth of a simulation design. Eigenfunctions are either orthonormal
/// coefficients over a cubic B-spline basis or (challenging) three
/// orthonormalized Gaussian bumps.
struct TruthSpec {
  Setting setting = Setting::kEasy;
  VectorXd eigenvalues;
  int basis_size = 0;         // 0 for the bump functions
  MatrixXd coefficients;      // basis_size x r, empty for the bump functions
  double noise_variance = 1.0 / 16.0;
  NoiseKind noise = NoiseKind::kGaussian;
  int min_measurements = 2;
  int max_measurements = 10;

  int rank() const noexcept { return static_cast<int>(eigenvalues.size()); }
  /// psi_k(t_a) in out(a, k).
  MatrixXd eigenfunctions(const VectorXd& times) const;
  /// Throws InvalidOptionError when the fields are inconsistent.
  void validate() const;
};

TruthSpec make_truth(Setting setting, double noise_variance = 1.0 / 16.0,
                     NoiseKind noise = NoiseKind::kGaussian);

/// Fixed orthonormal coefficient matrices of the B-spline settings.
MatrixXd truth_coefficients(Setting setting);

struct GroundTruth {
  TruthSpec spec;
  MatrixXd scores;  // n x r standard-normal scores
  std::uint64_t seed = 0;
};

/// Sparse sample from the design with zero mean, reproducible from `seed`.
std::pair<SparseDataset, GroundTruth> generate(const TruthSpec& spec, int n,
                                               std::uint64_t seed);

/// Per-replicate seed derived from (seed, replicate).
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

/// Integrated squared error of each column after sign alignment. `estimated`
/// and `truth` are values on the quadrature nodes (rows); compares the first
/// min(r_est, r_true) columns.
VectorXd mise_eigenfunctions(const MatrixXd& estimated, const MatrixXd& truth,
                             const QuadratureRule& quadrature);

/// Quadrature used for eigenfunction errors; exact for products of cubic
/// splines on any uniform knot grid with up to 7 intervals.
const QuadratureRule& metric_quadrature();

/// mean((est - truth)^2) / truth^2.
double nmse(std::span<const double> estimates, double truth);

struct CellSummary {
  int num_basis = 0;
  int rank = 0;
  bool converged = false;
  std::optional<double> cv_total;
  std::string failure;
  bool fitted = false;  // the fields below are set when a fit was returned
  VectorXd eigenvalues;
  double noise_variance = 0.0;
  double orthonormality_error = 0.0;
};

struct ReplicateRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  int num_basis = 0;
  int rank = 0;
  int iterations = 0;
  double neg_loglik = 0.0;
  VectorXd eigenvalues;
  double noise_variance = 0.0;
  VectorXd mise;
  double orthonormality_error = 0.0;
  std::string failure;
  std::vector<CellSummary> cells;  // filled when a grid was searched
};

struct MetricReport {
  std::string setting;
  int n = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<int> m_grid;
  std::vector<int> r_grid;
  int converged = 0;
  VectorXd mise_mean;
  VectorXd mise_sd;
  VectorXd eigenvalue_nmse;
  double noise_nmse = 0.0;
  std::map<std::pair<int, int>, int> selection_counts;
  std::vector<ReplicateRecord> records;
};

struct BenchmarkOptions {
  FitOptions fit;
  InitOptions init;
  std::optional<double> mean_bandwidth;
};

/// Aggregates the converged records of `records` into a report.
MetricReport aggregate(const TruthSpec& spec, std::vector<ReplicateRecord> records);

/// generate -> mean -> center -> initialize -> fit (or grid search) per
/// replicate; metrics use converged replicates only.
MetricReport run_benchmark(const TruthSpec& spec, int n, int replicates,
                           const std::vector<int>& m_grid, const std::vector<int>& r_grid,
                           std::uint64_t seed, const BenchmarkOptions& opts = {});

}  // namespace fpca
