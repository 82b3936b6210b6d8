#include "fpca/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fpca/errors.hpp"
#include "fpca/model_selection.hpp"
#include "fpca/parallel.hpp"
#include "fpca/pipeline.hpp"

namespace fpca {

namespace {

const double kBumpCenters[3] = {0.25, 0.5, 0.75};
constexpr double kBumpWidth = 0.05;

VectorXd bumps(double t) {
  VectorXd out(3);
  for (int k = 0; k < 3; ++k) {
    const double u = (t - kBumpCenters[k]) / kBumpWidth;
    out(k) = std::exp(-0.5 * u * u);
  }
  return out;
}

// Gram-Schmidt of the bumps, as a lower-triangular map from raw to orthonormal.
const MatrixXd& bump_transform() {
  static const MatrixXd transform = [] {
    const QuadratureRule q = composite_gauss_legendre(200, 8);
    MatrixXd gram = MatrixXd::Zero(3, 3);
    for (Index a = 0; a < q.nodes.size(); ++a) {
      const VectorXd v = bumps(q.nodes(a));
      gram.noalias() += q.weights(a) * v * v.transpose();
    }
    const MatrixXd l = gram.llt().matrixL();
    return MatrixXd(l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(3, 3)));
  }();
  return transform;
}

VectorXd powers(int r) {
  VectorXd out(r);
  for (int k = 0; k < r; ++k) out(k) = std::pow(static_cast<double>(k + 1), -0.6);
  return out;
}

}  // namespace

Setting parse_setting(const std::string& name) {
  if (name == "easy") return Setting::kEasy;
  if (name == "practical") return Setting::kPractical;
  if (name == "challenging") return Setting::kChallenging;
  if (name == "hybrid") return Setting::kHybrid;
  throw InvalidOptionError("unknown setting '" + name + "'");
}

NoiseKind parse_noise(const std::string& name) {
  if (name == "gaussian") return NoiseKind::kGaussian;
  if (name == "t4") return NoiseKind::kT4;
  if (name == "exp") return NoiseKind::kExponential;
  throw InvalidOptionError("unknown noise '" + name + "'");
}

std::string to_string(Setting s) {
  switch (s) {
    case Setting::kEasy: return "easy";
    case Setting::kPractical: return "practical";
    case Setting::kChallenging: return "challenging";
    case Setting::kHybrid: return "hybrid";
  }
  return "unknown";
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kT4: return "t4";
    case NoiseKind::kExponential: return "exp";
  }
  return "unknown";
}

double draw_noise(NoiseKind kind, std::mt19937_64& rng) {
  switch (kind) {
    case NoiseKind::kGaussian:
      return std::normal_distribution<double>(0.0, 1.0)(rng);
    case NoiseKind::kT4:
      return std::student_t_distribution<double>(4.0)(rng) / std::sqrt(2.0);
    case NoiseKind::kExponential:
      return std::exponential_distribution<double>(1.0)(rng) - 1.0;
  }
  throw InvalidOptionError("unknown noise kind");
}

MatrixXd TruthSpec::eigenfunctions(const VectorXd& times) const {
  MatrixXd out(times.size(), rank());
  if (basis_size == 0) {
    const MatrixXd& t = bump_transform();
    for (Index a = 0; a < times.size(); ++a) {
      out.row(a) = (t * bumps(times(a))).head(rank()).transpose();
    }
    return out;
  }
  const BasisSystem basis(basis_size);
  for (Index a = 0; a < times.size(); ++a) {
    out.row(a) = (coefficients.transpose() * basis.values(times(a))).transpose();
  }
  return out;
}

void TruthSpec::validate() const {
  const Index r = eigenvalues.size();
  if (r < 1) throw InvalidOptionError("truth needs at least one eigenvalue");
  for (Index k = 0; k < r; ++k) {
    if (!(eigenvalues(k) > 0.0)) throw InvalidOptionError("eigenvalues must be positive");
    if (k > 0 && eigenvalues(k) > eigenvalues(k - 1))
      throw InvalidOptionError("eigenvalues must be non-increasing");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw InvalidOptionError("noise variance must be non-negative");
  if (min_measurements < 1 || max_measurements < min_measurements)
    throw InvalidOptionError("invalid measurement-count range");
  if (basis_size == 0) {
    if (r > 3) throw InvalidOptionError("the bump design has three eigenfunctions");
    return;
  }
  if (coefficients.rows() != basis_size || coefficients.cols() != r)
    throw InvalidOptionError("coefficient matrix has the wrong shape");
  const double err =
      (coefficients.transpose() * coefficients - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw InvalidOptionError("coefficients are not orthonormal");
}

TruthSpec make_truth(Setting setting, double noise_variance, NoiseKind noise) {
  TruthSpec spec;
  spec.setting = setting;
  spec.noise_variance = noise_variance;
  spec.noise = noise;
  switch (setting) {
    case Setting::kEasy:
      spec.eigenvalues = powers(3);
      spec.basis_size = 5;
      break;
    case Setting::kPractical:
      spec.eigenvalues = powers(5);
      spec.basis_size = 10;
      break;
    case Setting::kChallenging:
      spec.eigenvalues = powers(3);
      spec.basis_size = 0;
      break;
    case Setting::kHybrid:
      spec.eigenvalues.resize(10);
      spec.eigenvalues << 1.0, 0.66, 0.52, 0.07, 9.47e-3, 1.28e-3, 1.74e-4, 2.35e-5, 3.18e-6,
          4.30e-7;
      spec.basis_size = 10;
      break;
  }
  if (spec.basis_size > 0) spec.coefficients = truth_coefficients(setting);
  spec.validate();
  return spec;
}

std::pair<SparseDataset, GroundTruth> generate(const TruthSpec& spec, int n,
                                               std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidOptionError("n must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(spec.min_measurements, spec.max_measurements);
  std::uniform_real_distribution<double> time(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int r = spec.rank();
  const VectorXd root = spec.eigenvalues.cwiseSqrt();
  const double sigma = std::sqrt(spec.noise_variance);
  GroundTruth truth{spec, MatrixXd(n, r), seed};
  SparseDataset data;
  data.subjects.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int m = count(rng);
    VectorXd t(m);
    for (int j = 0; j < m; ++j) t(j) = time(rng);
    std::sort(t.data(), t.data() + m);
    for (int k = 0; k < r; ++k) truth.scores(i, k) = normal(rng);
    const VectorXd signal =
        spec.eigenfunctions(t) * root.cwiseProduct(truth.scores.row(i).transpose());
    Subject s;
    s.id = "s" + std::to_string(i + 1);
    for (int j = 0; j < m; ++j) {
      s.times.push_back(t(j));
      s.values.push_back(signal(j) + sigma * draw_noise(spec.noise, rng));
    }
    data.subjects.push_back(std::move(s));
  }
  return {std::move(data), std::move(truth)};
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

VectorXd mise_eigenfunctions(const MatrixXd& estimated, const MatrixXd& truth,
                             const QuadratureRule& quadrature) {
  const Index q = quadrature.weights.size();
  if (estimated.rows() != q || truth.rows() != q)
    throw DimensionError("eigenfunctions must be evaluated on the quadrature nodes");
  const Index r = std::min(estimated.cols(), truth.cols());
  VectorXd out(r);
  for (Index k = 0; k < r; ++k) {
    const double cross = quadrature.weights.dot(estimated.col(k).cwiseProduct(truth.col(k)));
    const double sign = cross < 0.0 ? -1.0 : 1.0;
    const VectorXd diff = estimated.col(k) - sign * truth.col(k);
    out(k) = quadrature.weights.dot(diff.cwiseAbs2());
  }
  return out;
}

const QuadratureRule& metric_quadrature() {
  static const QuadratureRule rule = composite_gauss_legendre(420, 4);
  return rule;
}

double nmse(std::span<const double> estimates, double truth) {
  if (truth == 0.0) throw DomainError("nmse needs a nonzero true value");
  if (estimates.empty()) throw EmptyError("nmse needs at least one estimate");
  double acc = 0.0;
  for (double e : estimates) acc += (e - truth) * (e - truth);
  return acc / static_cast<double>(estimates.size()) / (truth * truth);
}

MetricReport aggregate(const TruthSpec& spec, std::vector<ReplicateRecord> records) {
  MetricReport rep;
  rep.setting = to_string(spec.setting);
  rep.replicates = static_cast<int>(records.size());
  const int r_true = spec.rank();
  std::vector<std::vector<double>> mise(static_cast<std::size_t>(r_true));
  std::vector<std::vector<double>> lambda(static_cast<std::size_t>(r_true));
  std::vector<double> sigma2;
  for (const auto& rec : records) {
    if (!rec.converged) continue;
    ++rep.converged;
    ++rep.selection_counts[{rec.num_basis, rec.rank}];
    sigma2.push_back(rec.noise_variance);
    for (Index k = 0; k < r_true; ++k) {
      if (k < rec.mise.size()) mise[static_cast<std::size_t>(k)].push_back(rec.mise(k));
      if (k < rec.eigenvalues.size())
        lambda[static_cast<std::size_t>(k)].push_back(rec.eigenvalues(k));
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.mise_mean = VectorXd::Constant(r_true, nan);
  rep.mise_sd = VectorXd::Constant(r_true, nan);
  rep.eigenvalue_nmse = VectorXd::Constant(r_true, nan);
  rep.noise_nmse = nan;
  for (Index k = 0; k < r_true; ++k) {
    const auto& v = mise[static_cast<std::size_t>(k)];
    if (!v.empty()) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      rep.mise_mean(k) = mean;
      rep.mise_sd(k) = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    }
    const auto& l = lambda[static_cast<std::size_t>(k)];
    if (!l.empty()) rep.eigenvalue_nmse(k) = nmse(l, spec.eigenvalues(k));
  }
  if (!sigma2.empty() && spec.noise_variance > 0.0) rep.noise_nmse = nmse(sigma2, spec.noise_variance);
  rep.records = std::move(records);
  return rep;
}

MetricReport run_benchmark(const TruthSpec& spec, int n, int replicates,
                           const std::vector<int>& m_grid, const std::vector<int>& r_grid,
                           std::uint64_t seed, const BenchmarkOptions& opts) {
  spec.validate();
  if (replicates < 1) throw InvalidOptionError("replicates must be positive");
  if (m_grid.empty() || r_grid.empty()) throw InvalidOptionError("grids must be nonempty");
  opts.fit.validate();
  const bool single = m_grid.size() == 1 && r_grid.size() == 1;
  const QuadratureRule& quad = metric_quadrature();
  const MatrixXd truth_at_nodes = spec.eigenfunctions(quad.nodes);

  std::vector<ReplicateRecord> records(static_cast<std::size_t>(replicates));
  parallel_for(records.size(), [&](std::size_t idx) {
    ReplicateRecord& rec = records[idx];
    rec.replicate = static_cast<int>(idx);
    rec.seed = replicate_seed(seed, rec.replicate);
    try {
      const auto [data, truth] = generate(spec, n, rec.seed);
      const PreparedData prep = prepare(data, opts.mean_bandwidth);
      std::optional<FitReport> chosen;
      if (single) {
        if (r_grid[0] > m_grid[0]) throw InvalidOptionError("r exceeds M");
        CellFit cell = fit_cell(prep.centered, m_grid[0], r_grid[0], opts.fit, opts.init);
        rec.num_basis = m_grid[0];
        rec.rank = r_grid[0];
        chosen = std::move(cell.report);
      } else {
        SelectionOptions sel{opts.fit, opts.init, {}};
        std::optional<SelectionResult> result;
        try {
          result = select_model(prep.centered, m_grid, r_grid, sel);
        } catch (const NoModelError& e) {
          rec.failure = e.what();
        }
        if (result) {
          for (const auto& c : result->grid) {
            CellSummary cs;
            cs.num_basis = c.num_basis;
            cs.rank = c.rank;
            cs.converged = c.ok();
            if (c.cv) cs.cv_total = c.cv->total;
            cs.failure = c.failure;
            if (c.fit) {
              cs.fitted = true;
              cs.eigenvalues = c.fit->params.eigenvalues();
              cs.noise_variance = c.fit->params.noise_variance();
              cs.orthonormality_error = c.fit->params.coef.orthonormality_error();
            }
            rec.cells.push_back(std::move(cs));
          }
          rec.num_basis = result->best().num_basis;
          rec.rank = result->best().rank;
          chosen = *result->best().fit;
        }
      }
      if (!chosen) return;
      const FitReport& f = *chosen;
      rec.converged = f.converged;
      rec.iterations = f.iterations;
      rec.neg_loglik = f.neg_loglik;
      rec.eigenvalues = f.params.eigenvalues();
      rec.noise_variance = f.params.noise_variance();
      rec.orthonormality_error = f.params.coef.orthonormality_error();
      if (!f.converged) rec.failure = f.failure_reason;
      const BasisSystem basis(rec.num_basis);
      rec.mise = mise_eigenfunctions(eigenfunction_values(basis, f.params, quad.nodes),
                                     truth_at_nodes, quad);
    } catch (const Error& e) {
      rec.converged = false;
      rec.failure = e.what();
    }
  });

  MetricReport rep = aggregate(spec, std::move(records));
  rep.n = n;
  rep.seed = seed;
  rep.m_grid = m_grid;
  rep.r_grid = r_grid;
  return rep;
}

}  // namespace fpca
