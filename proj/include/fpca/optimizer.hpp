#pragma once

#include <string>
#include <vector>

#include "fpca/likelihood.hpp"

namespace fpca {

struct FitOptions {
  double tol = 1e-4;            // sup-norm of the combined gradient
  int max_iter = 100;
  double initial_alpha = 0.5;   // first step fraction along the geodesic
  int damped_iterations = 3;    // iterations that start from initial_alpha
  double backtrack_factor = 0.5;
  int max_backtracks = 20;
  double levenberg_floor = 1e-8;

  /// Throws InvalidOptionError on out-of-range values.
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;      // after both block updates
  double grad_supnorm = 0.0;   // at the start of the iteration
  double alpha_tz = 0.0;       // accepted step in (tau, zeta); 0 if none
  double alpha_b = 0.0;        // accepted geodesic step; 0 if none
  double levenberg_shift = 0.0;
  bool newton_direction = true;  // false when the B step fell back to -G
};

struct FitReport {
  ModelParams params;
  bool converged = false;
  int iterations = 0;
  double final_grad_supnorm = 0.0;
  double neg_loglik = 0.0;
  std::vector<IterationRecord> trace;
  std::string failure_reason;
  std::vector<std::string> warnings;
};

/// Two-block Newton-Raphson: a damped Newton step in (tau, zeta) followed by
/// a Newton step in B along a geodesic of the Stiefel manifold, repeated
/// until the combined gradient sup-norm drops below opts.tol. Numerical
/// failures are reported through FitReport::failure_reason, not thrown.
FitReport fit(const std::vector<SubjectCache>& data, const ModelParams& init,
              const FitOptions& opts = {});

/// Sorts eigenvalues in non-increasing order (permuting B's columns along)
/// and makes the first entry of magnitude > 1e-10 in each column positive.
ModelParams canonicalize(const ModelParams& params);

}  // namespace fpca
