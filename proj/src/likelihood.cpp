#include "fpca/likelihood.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "fpca/errors.hpp"
#include "fpca/parallel.hpp"

namespace fpca {
namespace {

std::atomic<std::uint64_t> g_pass_count{0};

// Thread start-up costs more than evaluating a few hundred subjects.
constexpr std::size_t kParallelThreshold = 2048;

}  // namespace

ModelParams::ModelParams(StiefelPoint b, VectorXd zeta, double tau)
    : coef(std::move(b)), log_eigenvalues(std::move(zeta)), log_noise_variance(tau) {
  if (log_eigenvalues.size() != coef.rank()) {
    throw DimensionError("need one log-eigenvalue per column of B");
  }
  if (!log_eigenvalues.allFinite() || !std::isfinite(log_noise_variance)) {
    throw DomainError("log-eigenvalues and log noise variance must be finite");
  }
}

SubjectCache::SubjectCache(MatrixXd design, VectorXd centered)
    : phi(std::move(design)), ytilde(std::move(centered)) {
  if (phi.cols() != ytilde.size()) throw DimensionError("design columns must match responses");
  if (ytilde.size() < 1) throw PreconditionError("a subject needs at least one measurement");
  phi_phi_t = phi * phi.transpose();
  phi_y = phi * ytilde;
  y_sq = ytilde.squaredNorm();
}

namespace {

struct QFactor {
  MatrixXd q;
  MatrixXd q_inv;
  double log_det = 0.0;
};

QFactor factor_q(const ModelParams& params, const MatrixXd& s) {
  const Index r = params.rank();
  QFactor f;
  f.q = s;
  const double sigma2 = params.noise_variance();
  for (Index k = 0; k < r; ++k) f.q(k, k) += sigma2 * std::exp(-params.log_eigenvalues[k]);
  Eigen::LLT<MatrixXd> llt(f.q);
  if (llt.info() != Eigen::Success) throw IndefiniteError("Q_i is not positive definite");
  const MatrixXd lower = llt.matrixL();
  f.log_det = 2.0 * lower.diagonal().array().log().sum();
  if (!std::isfinite(f.log_det)) throw IndefiniteError("Q_i has a non-positive pivot");
  f.q_inv = llt.solve(MatrixXd::Identity(r, r));
  return f;
}

void check_shapes(const ModelParams& params, const SubjectCache& cache) {
  if (cache.basis_size() != params.basis_size()) {
    throw DimensionError("subject design has " + std::to_string(cache.basis_size()) +
                         " basis rows, model has " + std::to_string(params.basis_size()));
  }
}

}  // namespace

MatrixXd q_matrix(const ModelParams& params, const SubjectCache& cache) {
  check_shapes(params, cache);
  const MatrixXd& b = params.coef.values();
  return factor_q(params, b.transpose() * cache.phi_phi_t * b).q;
}

SubjectTerms evaluate_subject(const ModelParams& params, const SubjectCache& cache,
                              EvalLevel level) {
  check_shapes(params, cache);
  const MatrixXd& b = params.coef.values();
  const Index r = params.rank();
  const double m = static_cast<double>(cache.m());
  const double tau = params.log_noise_variance;
  const double sigma2 = std::exp(tau);
  const VectorXd lambda = params.eigenvalues();

  SubjectTerms out;
  out.cb = cache.phi_phi_t * b;
  const MatrixXd s = b.transpose() * out.cb;   // H^T H
  const VectorXd h = b.transpose() * cache.phi_y;  // H^T ytilde
  const QFactor qf = factor_q(params, s);
  out.q_inv = qf.q_inv;
  out.w = qf.q_inv * h;

  // ytilde^T P^{-1} ytilde + log|P|, with log|P| = (m - r) tau + sum zeta + log|Q|.
  const double quad = (cache.y_sq - h.dot(out.w)) / sigma2;
  out.loss = quad + (m - static_cast<double>(r)) * tau + params.log_eigenvalues.sum() + qf.log_det;
  if (level == EvalLevel::kLoss) return out;

  // Gradient in B.
  const VectorXd cbw = out.cb * out.w;
  out.grad_b = (2.0 / sigma2) * (cbw - cache.phi_y) * out.w.transpose() + 2.0 * out.cb * qf.q_inv;

  // (tau, zeta) block, with a = P^{-1} ytilde never formed:
  //   H^T a = Lambda^{-1} w,  a^T a and a^T P^{-1} a from r x r quantities.
  const VectorXd u = out.w.cwiseQuotient(lambda);
  const MatrixXd qs = qf.q_inv * s;
  const double a_sq = (cache.y_sq - 2.0 * h.dot(out.w) + out.w.dot(s * out.w)) / (sigma2 * sigma2);
  const double a_pinv_a = (a_sq - u.dot(qf.q_inv * u)) / sigma2;
  const double tr_pinv = (m - qs.trace()) / sigma2;
  const double tr_pinv2 = (m - 2.0 * qs.trace() + (qs * qs).trace()) / (sigma2 * sigma2);
  const MatrixXd sqs = s * qs;
  const MatrixXd n1 = (s - sqs) / sigma2;                                  // H^T P^{-1} H
  const MatrixXd n2 = (s - 2.0 * sqs + sqs * qs) / (sigma2 * sigma2);       // H^T P^{-2} H
  const VectorXd pv = (u - s * (qf.q_inv * u)) / sigma2;                    // H^T P^{-2} ytilde

  out.grad_tz.resize(r + 1);
  out.grad_tz[0] = sigma2 * (tr_pinv - a_sq);
  for (Index k = 0; k < r; ++k) {
    out.grad_tz[k + 1] = lambda[k] * (n1(k, k) - u[k] * u[k]);
  }
  if (level == EvalLevel::kGradient) return out;

  MatrixXd& hz = out.hess_tz;
  hz.resize(r + 1, r + 1);
  hz(0, 0) = sigma2 * (2.0 * sigma2 * a_pinv_a - a_sq) + sigma2 * (tr_pinv - sigma2 * tr_pinv2);
  for (Index k = 0; k < r; ++k) {
    const double v = lambda[k] * sigma2 * (2.0 * u[k] * pv[k] - n2(k, k));
    hz(0, k + 1) = v;
    hz(k + 1, 0) = v;
    for (Index l = 0; l < r; ++l) {
      const double ll = lambda[k] * lambda[l];
      if (k == l) {
        hz(k + 1, k + 1) = lambda[k] * u[k] * u[k] * (2.0 * lambda[k] * n1(k, k) - 1.0) +
                           lambda[k] * n1(k, k) * (1.0 - lambda[k] * n1(k, k));
      } else {
        hz(k + 1, l + 1) = 2.0 * ll * u[k] * u[l] * n1(k, l) - ll * n1(k, l) * n1(k, l);
      }
    }
  }
  return out;
}

MatrixXd subject_hess_b_euclid(const ModelParams& params, const SubjectCache& cache,
                               const SubjectTerms& terms, const MatrixXd& d) {
  const double sigma2 = params.noise_variance();
  const MatrixXd& c = cache.phi_phi_t;
  const MatrixXd& q_inv = terms.q_inv;
  const VectorXd& w = terms.w;
  const VectorXd& v = cache.phi_y;

  const MatrixXd cd = c * d;
  const MatrixXd dq = d.transpose() * terms.cb + terms.cb.transpose() * d;  // dQ/dt along D
  const VectorXd z = q_inv * (d.transpose() * v - dq * w);
  const MatrixXd h1 = (2.0 / sigma2) * ((cd * w + terms.cb * z) * w.transpose() +
                                        (terms.cb * w - v) * z.transpose());
  const MatrixXd h2 = 2.0 * (cd - terms.cb * (q_inv * dq)) * q_inv;
  return h1 + h2;
}

LikelihoodEvaluation::LikelihoodEvaluation(const ModelParams& params,
                                           const std::vector<SubjectCache>& data, EvalLevel level)
    : params_(params), data_(&data) {
  if (data.empty()) throw PreconditionError("likelihood needs at least one subject");
  ++g_pass_count;
  subjects_.resize(data.size());
  const auto body = [&](std::size_t i) { subjects_[i] = evaluate_subject(params_, data[i], level); };
  parallel_for(data.size(), body, data.size() >= kParallelThreshold ? worker_count() : 1);

  std::vector<double> losses(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) losses[i] = subjects_[i].loss;
  loss_ = pairwise_sum(losses);
  if (level == EvalLevel::kLoss) return;

  std::vector<MatrixXd> gb(subjects_.size());
  std::vector<VectorXd> gtz(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    gb[i] = subjects_[i].grad_b;
    gtz[i] = subjects_[i].grad_tz;
  }
  grad_b_ = pairwise_sum(gb);
  grad_tz_ = pairwise_sum(gtz);
  if (level == EvalLevel::kGradient) return;

  std::vector<MatrixXd> htz(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) htz[i] = subjects_[i].hess_tz;
  hess_tz_ = pairwise_sum(htz);
}

TangentVector LikelihoodEvaluation::riemannian_grad() const {
  return project_to_tangent(params_.coef, grad_b_);
}

MatrixXd LikelihoodEvaluation::hess_b_apply(const TangentVector& d) const {
  if (!(d.base() == params_.coef)) throw BaseMismatchError("direction is not tangent at B");
  std::vector<MatrixXd> parts(subjects_.size());
  for (std::size_t i = 0; i < subjects_.size(); ++i) {
    parts[i] = subject_hess_b_euclid(params_, (*data_)[i], subjects_[i], d.values());
  }
  const MatrixXd h = pairwise_sum(parts);
  const MatrixXd& b = params_.coef.values();
  return h - b * h.transpose() * b;
}

MatrixXd LikelihoodEvaluation::subject_hess_b_apply(std::size_t i, const TangentVector& d) const {
  if (!(d.base() == params_.coef)) throw BaseMismatchError("direction is not tangent at B");
  const MatrixXd h = subject_hess_b_euclid(params_, data_->at(i), subjects_.at(i), d.values());
  const MatrixXd& b = params_.coef.values();
  return h - b * h.transpose() * b;
}

double LikelihoodEvaluation::subject_riemannian_hessian(std::size_t i, const MatrixXd& x,
                                                        const MatrixXd& y) const {
  const SubjectTerms& t = subjects_.at(i);
  const MatrixXd& b = params_.coef.values();
  const MatrixXd& f = t.grad_b;
  const MatrixXd hx = subject_hess_b_euclid(params_, data_->at(i), t, x);
  const double euclid = hx.cwiseProduct(y).sum();
  const double second = 0.5 * ((f.transpose() * x * b.transpose() + b.transpose() * x * f.transpose()) * y).trace();
  const MatrixXd sym = b.transpose() * f + f.transpose() * b;
  const MatrixXd pi_y = y - b * (b.transpose() * y);
  const double third = 0.5 * (sym * (x.transpose() * pi_y)).trace();
  return euclid + second - third;
}

StiefelHessian LikelihoodEvaluation::hessian_b() const {
  return StiefelHessian(params_.coef, grad_b_,
                        [this](const TangentVector& d) { return hess_b_apply(d); });
}

double neg_loglik(const ModelParams& params, const std::vector<SubjectCache>& data) {
  return LikelihoodEvaluation(params, data, EvalLevel::kLoss).loss();
}

MatrixXd euclid_grad_b(const ModelParams& params, const std::vector<SubjectCache>& data) {
  return LikelihoodEvaluation(params, data, EvalLevel::kGradient).grad_b();
}

MatrixXd hess_b_apply(const ModelParams& params, const std::vector<SubjectCache>& data,
                      const TangentVector& d) {
  return LikelihoodEvaluation(params, data, EvalLevel::kGradient).hess_b_apply(d);
}

VectorXd grad_tau_zeta(const ModelParams& params, const std::vector<SubjectCache>& data) {
  return LikelihoodEvaluation(params, data, EvalLevel::kGradient).grad_tz();
}

MatrixXd hess_tau_zeta(const ModelParams& params, const std::vector<SubjectCache>& data) {
  return LikelihoodEvaluation(params, data, EvalLevel::kFull).hess_tz();
}

std::uint64_t likelihood_pass_count() { return g_pass_count.load(); }

}  // namespace fpca
