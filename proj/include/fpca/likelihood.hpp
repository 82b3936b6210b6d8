#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fpca/stiefel.hpp"

namespace fpca {

/// Psi = (B, zeta, tau): orthonormal basis coefficients of the eigenfunctions,
/// log-eigenvalues and log noise variance.
struct ModelParams {
  StiefelPoint coef;
  VectorXd log_eigenvalues;
  double log_noise_variance = 0.0;

  ModelParams(StiefelPoint b, VectorXd zeta, double tau);

  Index basis_size() const noexcept { return coef.ambient_dim(); }
  Index rank() const noexcept { return coef.rank(); }
  VectorXd eigenvalues() const { return log_eigenvalues.array().exp(); }
  double noise_variance() const { return std::exp(log_noise_variance); }
};

/// Per-subject data in basis coordinates. phi is M x m, ytilde the
/// mean-centered responses.
struct SubjectCache {
  MatrixXd phi;
  VectorXd ytilde;
  MatrixXd phi_phi_t;  // Phi Phi^T
  VectorXd phi_y;      // Phi ytilde
  double y_sq = 0.0;   // ytilde^T ytilde

  SubjectCache(MatrixXd design, VectorXd centered);
  Index m() const noexcept { return ytilde.size(); }
  Index basis_size() const noexcept { return phi.rows(); }
};

/// Q_i = sigma^2 Lambda^{-1} + B^T Phi_i Phi_i^T B. Throws IndefiniteError if
/// it is not numerically positive definite.
MatrixXd q_matrix(const ModelParams& params, const SubjectCache& cache);

/// Everything one subject contributes at a parameter value.
struct SubjectTerms {
  double loss = 0.0;          // F^1 + F^2
  MatrixXd grad_b;            // Euclidean gradient in B, M x r
  VectorXd grad_tz;           // (d/dtau, d/dzeta_1..r)
  MatrixXd hess_tz;           // (r+1) x (r+1); empty unless requested

  // Intermediates reused by Hessian actions in B.
  MatrixXd q_inv;             // Q^{-1}
  VectorXd w;                 // Q^{-1} B^T Phi ytilde
  MatrixXd cb;                // Phi Phi^T B
};

enum class EvalLevel { kLoss, kGradient, kFull };

SubjectTerms evaluate_subject(const ModelParams& params, const SubjectCache& cache,
                              EvalLevel level = EvalLevel::kFull);

/// Euclidean second-derivative action H_i(D) of one subject (not projected).
MatrixXd subject_hess_b_euclid(const ModelParams& params, const SubjectCache& cache,
                               const SubjectTerms& terms, const MatrixXd& d);

/// One full pass over the data: per-subject terms plus their
/// deterministic (pairwise) sums.
class LikelihoodEvaluation {
 public:
  LikelihoodEvaluation(const ModelParams& params, const std::vector<SubjectCache>& data,
                       EvalLevel level = EvalLevel::kFull);

  const ModelParams& params() const noexcept { return params_; }
  std::size_t num_subjects() const noexcept { return subjects_.size(); }
  const SubjectTerms& subject(std::size_t i) const { return subjects_.at(i); }

  double loss() const noexcept { return loss_; }
  const MatrixXd& grad_b() const noexcept { return grad_b_; }
  const VectorXd& grad_tz() const noexcept { return grad_tz_; }
  const MatrixXd& hess_tz() const noexcept { return hess_tz_; }

  /// Riemannian gradient project_to_tangent(B, grad_b).
  TangentVector riemannian_grad() const;

  /// F_BB(D) = H(D) - B H(D)^T B summed over subjects.
  MatrixXd hess_b_apply(const TangentVector& d) const;
  /// Same for a single subject.
  MatrixXd subject_hess_b_apply(std::size_t i, const TangentVector& d) const;

  /// Riemannian Hessian bilinear form of subject i under the canonical metric:
  ///   f_BB(X, Y) + 1/2 Tr[(f_B^T X B^T + B^T X f_B^T) Y]
  ///              - 1/2 Tr[(B^T f_B + f_B^T B) X^T Pi Y].
  double subject_riemannian_hessian(std::size_t i, const MatrixXd& x, const MatrixXd& y) const;

  /// Factored Riemannian Hessian of the total objective in B.
  StiefelHessian hessian_b() const;

 private:
  ModelParams params_;
  const std::vector<SubjectCache>* data_;
  std::vector<SubjectTerms> subjects_;
  double loss_ = 0.0;
  MatrixXd grad_b_;
  VectorXd grad_tz_;
  MatrixXd hess_tz_;
};

// Convenience wrappers, each one full pass.
double neg_loglik(const ModelParams& params, const std::vector<SubjectCache>& data);
MatrixXd euclid_grad_b(const ModelParams& params, const std::vector<SubjectCache>& data);
MatrixXd hess_b_apply(const ModelParams& params, const std::vector<SubjectCache>& data,
                      const TangentVector& d);
VectorXd grad_tau_zeta(const ModelParams& params, const std::vector<SubjectCache>& data);
MatrixXd hess_tau_zeta(const ModelParams& params, const std::vector<SubjectCache>& data);

/// Number of full likelihood passes performed by this process so far.
std::uint64_t likelihood_pass_count();

}  // namespace fpca
