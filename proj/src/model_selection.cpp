#include "fpca/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "fpca/errors.hpp"
#include "fpca/parallel.hpp"
#include "fpca/pipeline.hpp"

namespace fpca {

CvBreakdown approx_cv(const FitReport& fit, const std::vector<SubjectCache>& data) {
  if (!fit.converged) throw PreconditionError("approximate CV needs a converged fit");
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(fit.params.rank()) + 2)
    throw PreconditionError("approximate CV needs at least r + 2 subjects");

  const LikelihoodEvaluation eval(fit.params, data, EvalLevel::kFull);
  const StiefelHessian h_b = eval.hessian_b();

  const MatrixXd h_tz = 0.5 * (eval.hess_tz() + eval.hess_tz().transpose());
  const Eigen::PartialPivLU<MatrixXd> lu_tz(h_tz);
  if (!(lu_tz.rcond() > 1e-12)) throw SingularSystemError("(tau, zeta) Hessian is singular");

  const StiefelPoint& b = fit.params.coef;
  std::vector<double> f_tz(n), f_b(n), s_tz(n), s_b(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const SubjectTerms& t = eval.subject(i);
        const VectorXd d_tz = lu_tz.solve(t.grad_tz);
        f_tz[i] = t.grad_tz.dot(d_tz);
        s_tz[i] = 1.5 * d_tz.dot(t.hess_tz * d_tz);

        const TangentVector g = project_to_tangent(b, t.grad_b);
        const TangentVector d_b = h_b.solve(g.values());
        f_b[i] = canonical_inner(b, g, d_b);
        s_b[i] = 1.5 * eval.subject_riemannian_hessian(i, d_b.values(), d_b.values());
      },
      n >= 256 ? worker_count() : 1);

  CvBreakdown out;
  out.in_sample = eval.loss();
  out.first_order_tz = pairwise_sum(f_tz);
  out.first_order_b = pairwise_sum(f_b);
  out.second_order_tz = pairwise_sum(s_tz);
  out.second_order_b = pairwise_sum(s_b);
  out.total = out.in_sample + out.first_order_tz + out.first_order_b + out.second_order_tz +
              out.second_order_b;
  return out;
}

std::size_t choose_best(const std::vector<CellResult>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const CellResult& c = cells[k];
    if (!c.ok()) continue;
    if (!best) {
      best = k;
      continue;
    }
    const CellResult& o = cells[*best];
    if (std::make_tuple(c.cv->total, c.num_basis, c.rank) <
        std::make_tuple(o.cv->total, o.num_basis, o.rank)) {
      best = k;
    }
  }
  if (!best) throw NoModelError("no (M, r) cell converged");
  return *best;
}

SelectionResult select_model(const SparseDataset& centered, const std::vector<int>& m_grid,
                             const std::vector<int>& r_grid, const SelectionOptions& opts) {
  if (m_grid.empty() || r_grid.empty()) throw InvalidOptionError("grids must be nonempty");
  opts.fit.validate();
  for (double kappa : opts.fev_kappas) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidOptionError("kappa must lie in [0, 1]");
  }
  std::set<std::pair<int, int>> keys;
  for (int m : m_grid) {
    for (int r : r_grid) {
      if (r >= 1 && r <= m) keys.emplace(m, r);
    }
  }
  if (keys.empty()) throw InvalidOptionError("grid has no cell with 1 <= r <= M");

  SelectionResult result;
  result.grid.resize(keys.size());
  std::size_t slot = 0;
  for (const auto& [m, r] : keys) {
    result.grid[slot].num_basis = m;
    result.grid[slot].rank = r;
    ++slot;
  }

  parallel_for(result.grid.size(), [&](std::size_t k) {
    CellResult& c = result.grid[k];
    try {
      CellFit cell = fit_cell(centered, c.num_basis, c.rank, opts.fit, opts.init);
      c.fit = std::move(cell.report);
      if (!c.fit->converged) {
        c.failure = "not converged: " + c.fit->failure_reason;
        return;
      }
      c.cv = approx_cv(*c.fit, cell.caches);
    } catch (const Error& e) {
      c.failure = e.what();
    }
  });

  result.chosen = choose_best(result.grid);
  const VectorXd lambda = result.best().fit->params.eigenvalues();
  for (double kappa : opts.fev_kappas) result.fev_pruned_r[kappa] = fev_prune(lambda, kappa);
  return result;
}

int fev_prune(const VectorXd& lambda, double kappa) {
  if (lambda.size() == 0) throw EmptyError("no eigenvalues to prune");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidOptionError("kappa must lie in [0, 1]");
  if (!(lambda.array() > 0.0).all()) throw DomainError("eigenvalues must be positive");
  const double total = lambda.sum();
  double acc = 0.0;
  for (Index k = 0; k < lambda.size(); ++k) {
    acc += lambda(k);
    if (acc / total >= kappa) return static_cast<int>(k + 1);
  }
  return static_cast<int>(lambda.size());
}

}  // namespace fpca
