#include "fpca/initializer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpca/errors.hpp"

namespace fpca {

namespace {

struct LocalSums {
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;

  void add(double d, double y, double h) {
    const double u = d / h;
    const double k = std::exp(-0.5 * u * u);
    s0 += k;
    s1 += k * d;
    s2 += k * d * d;
    t0 += k * y;
    t1 += k * d * y;
  }
  LocalSums operator-(const LocalSums& o) const {
    return {s0 - o.s0, s1 - o.s1, s2 - o.s2, t0 - o.t0, t1 - o.t1};
  }
  // NaN when there is no kernel mass at all.
  double value() const {
    if (!(s0 > 1e-300)) return std::numeric_limits<double>::quiet_NaN();
    const double det = s0 * s2 - s1 * s1;
    if (det <= 1e-12 * s0 * s2 || det <= 0.0) return t0 / s0;
    return (s2 * t0 - s1 * t1) / det;
  }
};

double pooled_mean(const std::vector<double>& y) {
  double acc = 0.0;
  for (double v : y) acc += v;
  return y.empty() ? 0.0 : acc / static_cast<double>(y.size());
}

}  // namespace

double local_linear(const std::vector<double>& t, const std::vector<double>& y, double x,
                    double bandwidth) {
  LocalSums sums;
  for (std::size_t k = 0; k < t.size(); ++k) sums.add(t[k] - x, y[k], bandwidth);
  const double v = sums.value();
  return std::isfinite(v) ? v : pooled_mean(y);
}

MeanEstimate::MeanEstimate(std::vector<double> t, std::vector<double> y, double bandwidth,
                           int grid_size)
    : t_(std::move(t)), y_(std::move(y)), bandwidth_(bandwidth) {
  if (t_.size() != y_.size() || t_.empty()) throw DimensionError("mean needs matching t and y");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw InvalidOptionError("mean bandwidth must be positive");
  if (grid_size < 2) throw InvalidOptionError("mean grid needs at least 2 points");
  grid_ = VectorXd::LinSpaced(grid_size, 0.0, 1.0);
  grid_values_.resize(grid_size);
  for (int g = 0; g < grid_size; ++g) grid_values_(g) = (*this)(grid_(g));
}

std::vector<double> mean_bandwidth_grid(double range, int count) {
  std::vector<double> out;
  const double lo = range / 20.0;
  const double hi = range / 2.0;
  for (int k = 0; k < count; ++k) {
    const double frac = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back(lo * std::pow(hi / lo, frac));
  }
  return out;
}

MeanEstimate estimate_mean(const SparseDataset& data, std::optional<double> bandwidth) {
  std::vector<double> t, y;
  std::vector<std::size_t> offsets{0};
  for (const auto& s : data.subjects) {
    t.insert(t.end(), s.times.begin(), s.times.end());
    y.insert(y.end(), s.values.begin(), s.values.end());
    offsets.push_back(t.size());
  }
  if (t.size() < 10) throw InsufficientDataError("mean estimation needs at least 10 points");
  if (bandwidth) return MeanEstimate(std::move(t), std::move(y), *bandwidth);

  const auto [lo_it, hi_it] = std::minmax_element(t.begin(), t.end());
  const double range = *hi_it - *lo_it;
  if (!(range > 0.0)) throw InsufficientDataError("all measurement times coincide");

  const auto candidates = mean_bandwidth_grid(range);
  double best_h = candidates.front();
  double best_score = std::numeric_limits<double>::infinity();
  const std::size_t n = data.subjects.size();
  for (double h : candidates) {
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = offsets[i]; a < offsets[i + 1]; ++a) {
        LocalSums all, own;
        for (std::size_t k = 0; k < t.size(); ++k) {
          if (k >= offsets[i] && k < offsets[i + 1]) {
            own.add(t[k] - t[a], y[k], h);
          } else {
            all.add(t[k] - t[a], y[k], h);
          }
        }
        const double pred = all.value();
        if (!std::isfinite(pred)) {
          score = std::numeric_limits<double>::infinity();
          break;
        }
        score += (y[a] - pred) * (y[a] - pred);
      }
      if (!std::isfinite(score)) break;
    }
    if (score < best_score) {
      best_score = score;
      best_h = h;
    }
  }
  return MeanEstimate(std::move(t), std::move(y), best_h);
}

SparseDataset center(const SparseDataset& data, const MeanEstimate& mean) {
  SparseDataset out = data;
  for (auto& s : out.subjects) {
    for (std::size_t j = 0; j < s.size(); ++j) s.values[j] -= mean(s.times[j]);
  }
  return out;
}

CovarianceSmoother::CovarianceSmoother(const SparseDataset& centered, double bandwidth)
    : bandwidth_(bandwidth) {
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
    throw InvalidOptionError("surface bandwidth must be positive");
  bool has_pair = false;
  offsets_.push_back(0);
  for (const auto& s : centered.subjects) {
    times_.insert(times_.end(), s.times.begin(), s.times.end());
    values_.insert(values_.end(), s.values.begin(), s.values.end());
    offsets_.push_back(times_.size());
    has_pair = has_pair || s.size() >= 2;
  }
  if (!has_pair) throw InsufficientDataError("no subject has two or more measurements");
}

MatrixXd CovarianceSmoother::kernel_matrix(const VectorXd& nodes) const {
  MatrixXd k(nodes.size(), static_cast<Index>(times_.size()));
  for (Index p = 0; p < k.cols(); ++p) {
    for (Index a = 0; a < k.rows(); ++a) {
      const double u = (nodes(a) - times_[static_cast<std::size_t>(p)]) / bandwidth_;
      k(a, p) = std::exp(-0.5 * u * u);
    }
  }
  return k;
}

MatrixXd CovarianceSmoother::surface(const VectorXd& nodes) const {
  const MatrixXd k = kernel_matrix(nodes);
  const Index g = nodes.size();
  MatrixXd num = MatrixXd::Zero(g, g);
  MatrixXd den = MatrixXd::Zero(g, g);
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
    const Index begin = static_cast<Index>(offsets_[i]);
    const Index m = static_cast<Index>(offsets_[i + 1]) - begin;
    if (m < 2) continue;
    const auto ki = k.middleCols(begin, m);
    const VectorXd yi = Eigen::Map<const VectorXd>(values_.data() + begin, m);
    const VectorXd a = ki * yi;
    const VectorXd b = ki.rowwise().sum();
    // Sum over all ordered pairs minus the diagonal j = k.
    num.noalias() += a * a.transpose() - ki * yi.cwiseAbs2().asDiagonal() * ki.transpose();
    den.noalias() += b * b.transpose() - ki * ki.transpose();
  }
  MatrixXd out(g, g);
  for (Index c = 0; c < g; ++c) {
    for (Index r = 0; r < g; ++r) {
      out(r, c) = den(r, c) > 1e-300 ? num(r, c) / den(r, c) : 0.0;
    }
  }
  return 0.5 * (out + out.transpose());
}

VectorXd CovarianceSmoother::variance(const VectorXd& nodes) const {
  const MatrixXd k = kernel_matrix(nodes);
  const VectorXd y2 = Eigen::Map<const VectorXd>(values_.data(),
                                                 static_cast<Index>(values_.size()))
                          .cwiseAbs2();
  const VectorXd num = k * y2;
  const VectorXd den = k.rowwise().sum();
  VectorXd out(nodes.size());
  for (Index a = 0; a < out.size(); ++a) out(a) = den(a) > 1e-300 ? num(a) / den(a) : 0.0;
  return out;
}

double default_surface_bandwidth(std::size_t num_subjects, int grid_size) {
  const double spacing = 1.0 / (grid_size - 1);
  return 2.0 * spacing * std::pow(static_cast<double>(num_subjects) / 100.0, -1.0 / 6.0);
}

CovarianceSurface smooth_covariance(const SparseDataset& centered, const InitOptions& opts) {
  if (opts.grid_size < 2) throw InvalidOptionError("surface grid needs at least 2 points");
  const double h = opts.bandwidth.value_or(
      default_surface_bandwidth(centered.num_subjects(), opts.grid_size));
  const CovarianceSmoother smoother(centered, h);
  CovarianceSurface out;
  out.grid = VectorXd::LinSpaced(opts.grid_size, 0.0, 1.0);
  out.values = smoother.surface(out.grid);
  out.diagonal_variance = smoother.variance(out.grid);
  out.bandwidth = h;
  return out;
}

MatrixXd project_kernel(const BasisSystem& basis, const MatrixXd& kernel_at_nodes) {
  const QuadratureRule& q = basis.quadrature();
  const Index nq = q.nodes.size();
  if (kernel_at_nodes.rows() != nq || kernel_at_nodes.cols() != nq)
    throw DimensionError("kernel must be evaluated on the basis quadrature nodes");
  MatrixXd aw(nq, basis.size());  // W A
  for (Index a = 0; a < nq; ++a) aw.row(a) = q.weights(a) * basis.values(q.nodes(a)).transpose();
  MatrixXd k = aw.transpose() * kernel_at_nodes * aw;
  return 0.5 * (k + k.transpose());
}

ModelParams params_from_projection(const MatrixXd& projected, double raw_noise_variance, int r,
                                   const InitOptions& opts) {
  const Index m = projected.rows();
  if (projected.cols() != m) throw DimensionError("projected kernel must be square");
  if (r < 1 || r > m) throw DimensionError("rank must lie in [1, M]");
  const MatrixXd sym = 0.5 * (projected + projected.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw IndefiniteError("eigendecomposition failed");
  MatrixXd b(m, r);
  VectorXd lambda(r);
  for (Index k = 0; k < r; ++k) {
    b.col(k) = eig.eigenvectors().col(m - 1 - k);
    lambda(k) = eig.eigenvalues()(m - 1 - k);
  }
  lambda(0) = std::max(lambda(0), 1e-8);
  const double top = lambda(0);
  const double floor = opts.eigen_floor_ratio * top;
  VectorXd zeta(r);
  for (Index k = 0; k < r; ++k) zeta(k) = std::log(std::max(lambda(k), floor));
  const double sigma2 = std::isfinite(raw_noise_variance)
                            ? std::max(opts.noise_floor, raw_noise_variance)
                            : opts.noise_floor;
  // The symmetric eigensolver returns orthonormal vectors up to rounding; a QR
  // pass removes the residual drift.
  Eigen::HouseholderQR<MatrixXd> qr(b);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(m, r);
  for (Index k = 0; k < r; ++k) {
    if (q.col(k).dot(b.col(k)) < 0.0) q.col(k) *= -1.0;
  }
  return ModelParams(StiefelPoint(q), zeta, std::log(sigma2));
}

ModelParams initial_params(const SparseDataset& centered, const BasisSystem& basis, int r,
                           const InitOptions& opts) {
  if (r < 1 || r > basis.size()) throw DimensionError("rank must lie in [1, M]");
  const CovarianceSurface surf = smooth_covariance(centered, opts);
  const CovarianceSmoother smoother(centered, surf.bandwidth);
  const MatrixXd at_nodes = smoother.surface(basis.quadrature().nodes);
  const MatrixXd projected = project_kernel(basis, at_nodes);
  const double raw_sigma2 = (surf.diagonal_variance - surf.values.diagonal()).mean();
  return params_from_projection(projected, raw_sigma2, r, opts);
}

}  // namespace fpca
