#include "fpca/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "fpca/errors.hpp"

namespace fpca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sup_norm(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Objective at a candidate; +inf when the candidate is numerically invalid.
double try_loss(const ModelParams& p, const std::vector<SubjectCache>& data) {
  try {
    const double f = LikelihoodEvaluation(p, data, EvalLevel::kLoss).loss();
    return std::isfinite(f) ? f : kInf;
  } catch (const Error&) {
    return kInf;
  }
}

bool accepts(double f_new, double f_old) {
  return f_new <= f_old + 1e-12 * (1.0 + std::abs(f_old));
}

// Solves (H + shift I) delta = -g with the smallest shift 0, floor, 10 floor, ...
// that leaves the system positive definite.
std::optional<VectorXd> levenberg_step(const MatrixXd& h, const VectorXd& g, double floor,
                                       double& shift) {
  const MatrixXd sym = 0.5 * (h + h.transpose());
  shift = 0.0;
  for (int k = 0; k < 40; ++k) {
    Eigen::LLT<MatrixXd> llt(sym + shift * MatrixXd::Identity(h.rows(), h.cols()));
    if (llt.info() == Eigen::Success) {
      VectorXd delta = llt.solve(-g);
      if (delta.allFinite()) return delta;
    }
    shift = (shift == 0.0) ? floor : shift * 10.0;
  }
  return std::nullopt;
}

}  // namespace

void FitOptions::validate() const {
  if (!(tol > 0.0) || !std::isfinite(tol)) throw InvalidOptionError("tol must be positive");
  if (max_iter < 1) throw InvalidOptionError("max_iter must be at least 1");
  if (!(initial_alpha > 0.0 && initial_alpha <= 1.0))
    throw InvalidOptionError("initial_alpha must lie in (0, 1]");
  if (damped_iterations < 0) throw InvalidOptionError("damped_iterations must be non-negative");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    throw InvalidOptionError("backtrack_factor must lie in (0, 1)");
  if (max_backtracks < 0) throw InvalidOptionError("max_backtracks must be non-negative");
  if (!(levenberg_floor > 0.0)) throw InvalidOptionError("levenberg_floor must be positive");
}

ModelParams canonicalize(const ModelParams& params) {
  const Index r = params.rank();
  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return params.log_eigenvalues(a) > params.log_eigenvalues(b);
  });
  const MatrixXd& b = params.coef.values();
  MatrixXd out(b.rows(), r);
  VectorXd zeta(r);
  for (Index k = 0; k < r; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.col(k) = b.col(src);
    zeta(k) = params.log_eigenvalues(src);
    for (Index i = 0; i < out.rows(); ++i) {
      if (std::abs(out(i, k)) > 1e-10) {
        if (out(i, k) < 0.0) out.col(k) *= -1.0;
        break;
      }
    }
  }
  return ModelParams(StiefelPoint(out), zeta, params.log_noise_variance);
}

FitReport fit(const std::vector<SubjectCache>& data, const ModelParams& init,
              const FitOptions& opts) {
  opts.validate();
  if (data.empty()) throw PreconditionError("fit needs at least one subject");
  for (const auto& s : data) {
    if (s.basis_size() != init.basis_size())
      throw DimensionError("subject design does not match the basis size of the start value");
  }

  FitReport report{init, false, 0, 0.0, 0.0, {}, {}, {}};
  ModelParams params = init;

  for (int iter = 1;; ++iter) {
    const LikelihoodEvaluation eval(params, data, EvalLevel::kFull);
    const TangentVector g_b = eval.riemannian_grad();
    const double grad_sup = std::max(sup_norm(g_b.values()), sup_norm(eval.grad_tz()));
    report.final_grad_supnorm = grad_sup;
    report.neg_loglik = eval.loss();
    if (!std::isfinite(grad_sup)) {
      report.failure_reason = "non-finite gradient";
      break;
    }
    if (grad_sup <= opts.tol) {
      report.converged = true;
      break;
    }
    if (iter > opts.max_iter) {
      report.failure_reason = "iteration limit reached";
      break;
    }
    report.iterations = iter;

    IterationRecord rec;
    rec.iteration = iter;
    rec.grad_supnorm = grad_sup;
    double f = eval.loss();

    // (a) damped Newton step in (tau, zeta).
    bool tz_moved = false;
    double shift = 0.0;
    if (auto delta = levenberg_step(eval.hess_tz(), eval.grad_tz(), opts.levenberg_floor, shift)) {
      rec.levenberg_shift = shift;
      double alpha = 1.0;
      for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= opts.backtrack_factor) {
        const VectorXd step = alpha * *delta;
        std::optional<ModelParams> cand;
        try {
          cand.emplace(params.coef, params.log_eigenvalues + step.tail(params.rank()),
                       params.log_noise_variance + step(0));
        } catch (const Error&) {
          continue;
        }
        const double f_new = try_loss(*cand, data);
        if (accepts(f_new, f)) {
          params = *cand;
          f = f_new;
          rec.alpha_tz = alpha;
          tz_moved = true;
          break;
        }
      }
    }

    // (b) Newton step in B along a geodesic.
    bool b_moved = false;
    try {
      const LikelihoodEvaluation eval_b(params, data, EvalLevel::kGradient);
      const TangentVector g = eval_b.riemannian_grad();
      if (sup_norm(g.values()) > 0.0) {
        const StiefelHessian hess = eval_b.hessian_b();
        TangentVector dir = hess.solve(-g.values());
        if (!(canonical_inner(params.coef, g, dir) < 0.0)) {
          dir = TangentVector(params.coef, -g.values());
          rec.newton_direction = false;
        }
        double alpha = (iter <= opts.damped_iterations) ? opts.initial_alpha : 1.0;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, alpha *= opts.backtrack_factor) {
          std::optional<ModelParams> cand;
          try {
            cand.emplace(geodesic_step(params.coef, dir, alpha), params.log_eigenvalues,
                         params.log_noise_variance);
          } catch (const Error&) {
            continue;
          }
          const double f_new = try_loss(*cand, data);
          if (accepts(f_new, f)) {
            params = *cand;
            f = f_new;
            rec.alpha_b = alpha;
            b_moved = true;
            break;
          }
        }
      } else {
        b_moved = true;
      }
    } catch (const SingularSystemError&) {
      rec.objective = f;
      report.trace.push_back(rec);
      report.neg_loglik = f;
      report.failure_reason = "singular Newton system in B";
      break;
    }

    rec.objective = f;
    report.trace.push_back(rec);
    if (!tz_moved && !b_moved) {
      report.failure_reason = "line search exhausted";
      break;
    }
  }

  report.params = canonicalize(params);
  const VectorXd& zeta = report.params.log_eigenvalues;
  for (Index k = 0; k + 1 < zeta.size(); ++k) {
    if (zeta(k) - zeta(k + 1) < 1e-6) {
      report.warnings.push_back("eigenvalues " + std::to_string(k + 1) + " and " +
                                std::to_string(k + 2) + " are nearly tied");
    }
  }
  return report;
}

}  // namespace fpca
