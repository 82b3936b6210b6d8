// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run everything
//   acceptance 3 5        run criteria 3 and 5 only
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fpca/errors.hpp"
#include "fpca/likelihood.hpp"
#include "fpca/model_selection.hpp"
#include "fpca/pipeline.hpp"
#include "fpca/simulation.hpp"
#include "fpca/stiefel.hpp"
#include "support/oracles.hpp"

namespace {

using namespace fpca;
using fpca::testing::rel_err;
using fpca::testing::Rng;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

constexpr std::uint64_t kBenchSeed = 20240601;

// 1. Finite-difference agreement of all derivatives.
void derivative_correctness(Outcome& o) {
  Rng rng(101);
  const BasisSystem basis(5);
  double worst_grad = 0, worst_hess = 0;
  for (int point = 0; point < 20; ++point) {
    const ModelParams p = fpca::testing::random_params(5, 2, rng);
    const auto data = fpca::testing::random_caches(basis, 10, 2, 6, rng);
    const LikelihoodEvaluation eval(p, data);
    const MatrixXd& b = p.coef.values();
    const auto loss_b = [&](const MatrixXd& bb) {
      return fpca::testing::loss_at(bb, p.log_eigenvalues, p.log_noise_variance, data);
    };

    MatrixXd fd_b(b.rows(), b.cols());
    const double h1 = 1e-6;
    for (Index j = 0; j < b.cols(); ++j)
      for (Index i = 0; i < b.rows(); ++i) {
        MatrixXd bp = b, bm = b;
        bp(i, j) += h1;
        bm(i, j) -= h1;
        fd_b(i, j) = (loss_b(bp) - loss_b(bm)) / (2 * h1);
      }
    worst_grad = std::max(worst_grad, rel_err(eval.grad_b(), fd_b, 1e-8));

    const auto tz_params = [&](const VectorXd& delta) {
      return ModelParams(p.coef, p.log_eigenvalues + delta.tail(2), p.log_noise_variance + delta(0));
    };
    VectorXd fd_tz(3);
    MatrixXd fd_htz(3, 3);
    const double f0 = neg_loglik(p, data);
    const double h2 = 1e-4;
    for (Index a = 0; a < 3; ++a) {
      const VectorXd ea = VectorXd::Unit(3, a);
      const double fp = neg_loglik(tz_params(h1 * ea), data);
      const double fm = neg_loglik(tz_params(-h1 * ea), data);
      fd_tz(a) = (fp - fm) / (2 * h1);
      for (Index c = 0; c < 3; ++c) {
        const VectorXd ec = VectorXd::Unit(3, c);
        if (a == c) {
          fd_htz(a, a) = (neg_loglik(tz_params(h2 * ea), data) - 2 * f0 +
                          neg_loglik(tz_params(-h2 * ea), data)) / (h2 * h2);
        } else {
          fd_htz(a, c) = (neg_loglik(tz_params(h2 * (ea + ec)), data) -
                          neg_loglik(tz_params(h2 * (ea - ec)), data) -
                          neg_loglik(tz_params(h2 * (ec - ea)), data) +
                          neg_loglik(tz_params(-h2 * (ea + ec)), data)) / (4 * h2 * h2);
        }
      }
    }
    worst_grad = std::max(worst_grad, rel_err(MatrixXd(eval.grad_tz()), MatrixXd(fd_tz), 1e-8));
    worst_hess = std::max(worst_hess, rel_err(eval.hess_tz(), fd_htz, 1e-8));

    for (int pair = 0; pair < 3; ++pair) {
      const TangentVector d = fpca::testing::random_tangent(p.coef, rng);
      const TangentVector x = fpca::testing::random_tangent(p.coef, rng);
      const double analytic = canonical_inner(b, eval.hess_b_apply(d), x.values());
      const auto f = [&](double s, double t) { return loss_b(b + s * d.values() + t * x.values()); };
      const double mixed = (f(h2, h2) - f(h2, -h2) - f(-h2, h2) + f(-h2, -h2)) / (4 * h2 * h2);
      worst_hess = std::max(worst_hess, rel_err(analytic, mixed, 1e-8));
    }
  }
  o.check(worst_grad < 1e-4, "gradient relative error");
  o.check(worst_hess < 1e-3, "Hessian relative error");
  o.detail << "max rel err: gradients " << worst_grad << ", Hessians " << worst_hess;
}

// 2. Woodbury path equals the dense path.
void woodbury_equivalence(Outcome& o) {
  Rng rng(202);
  std::uniform_int_distribution<int> mdist(4, 10), rdist(1, 4);
  double worst = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int m = mdist(rng);
    const int r = std::min(rdist(rng), m);
    const BasisSystem basis(m);
    const ModelParams p = fpca::testing::random_params(m, r, rng);
    const auto data = fpca::testing::random_caches(basis, 4, 1, 12, rng);
    double dense_loss = 0;
    MatrixXd dense_gb = MatrixXd::Zero(m, r);
    VectorXd dense_gtz = VectorXd::Zero(r + 1);
    MatrixXd dense_htz = MatrixXd::Zero(r + 1, r + 1);
    const TangentVector dir = fpca::testing::random_tangent(p.coef, rng);
    MatrixXd dense_hb = MatrixXd::Zero(m, r);
    for (const auto& c : data) {
      const auto d = fpca::testing::dense_subject(p, c);
      dense_loss += d.loss;
      dense_gb += d.grad_b;
      dense_gtz += d.grad_tz;
      dense_htz += d.hess_tz;
      dense_hb += fpca::testing::dense_hess_b_euclid(p, c, dir.values());
    }
    dense_hb -= p.coef.values() * dense_hb.transpose() * p.coef.values();
    const LikelihoodEvaluation eval(p, data);
    worst = std::max({worst, rel_err(eval.loss(), dense_loss, 1e-300),
                      rel_err(eval.grad_b(), dense_gb, 1e-300),
                      rel_err(MatrixXd(eval.grad_tz()), MatrixXd(dense_gtz), 1e-300),
                      rel_err(eval.hess_tz(), dense_htz, 1e-300),
                      rel_err(eval.hess_b_apply(dir), dense_hb, 1e-300)});
  }
  o.check(worst <= 1e-9, "relative difference");
  o.detail << "max rel diff over 200 instances: " << worst;
}

// 3. Manifold primitives.
void manifold_suite(Outcome& o) {
  Rng rng(303);
  double orth = 0, taylor = 0, geo = 0, resid = 0, skew = 0;
  int singular = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const Index p = 2 + inst % 6;
    const MatrixXd x = fpca::testing::random_skew(p, rng);
    const MatrixXd e = exp_skew(x, 0.7);
    orth = std::max(orth, (e.transpose() * e - MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff());
    taylor = std::max(taylor, (e - fpca::testing::taylor_exp(x, 0.7)).cwiseAbs().maxCoeff());

    const Index m = 4 + inst % 5;
    const Index r = 1 + inst % 3;
    const StiefelPoint b = fpca::testing::random_stiefel(m, r, rng);
    const TangentVector d = fpca::testing::random_tangent(b, rng);
    for (double t : {0.1, 0.5, 1.0, 2.0}) geo = std::max(geo, geodesic_step(b, d, t).orthonormality_error());

    const BasisSystem basis(static_cast<int>(m));
    const ModelParams params(b, fpca::testing::random_params(m, r, rng).log_eigenvalues, -1.0);
    const auto data = fpca::testing::random_caches(basis, 15, 2, 8, rng);
    const LikelihoodEvaluation eval(params, data);
    try {
      const StiefelHessian hess = eval.hessian_b();
      const TangentVector g = eval.riemannian_grad();
      const TangentVector delta = hess.solve(-g.values());
      const double gmax = g.values().cwiseAbs().maxCoeff();
      resid = std::max(resid, (hess.apply(delta) + g.values()).cwiseAbs().maxCoeff() / (1 + gmax));
      const MatrixXd s = b.values().transpose() * delta.values();
      skew = std::max(skew, (s + s.transpose()).cwiseAbs().maxCoeff());
    } catch (const SingularSystemError&) {
      ++singular;
    }
  }
  o.check(orth <= 1e-10, "exp_skew orthogonality");
  o.check(taylor <= 1e-8, "Taylor agreement");
  o.check(geo <= 1e-8, "geodesic on manifold");
  o.check(resid <= 1e-8, "Newton residual");
  o.check(skew <= 1e-8, "B^T D skew");
  o.detail << "orth " << orth << ", taylor " << taylor << ", geodesic " << geo << ", residual "
           << resid << ", skew " << skew << ", singular " << singular << "/100";
}

// 4. Approximate CV against brute-force leave-one-curve-out.
void cv_oracle(Outcome& o) {
  const TruthSpec spec = make_truth(Setting::kEasy);
  double worst = 0;
  int agree = 0;
  for (int ds = 0; ds < 5; ++ds) {
    const auto [raw, truth] = generate(spec, 30, 4000 + ds);
    const PreparedData prep = prepare(raw);
    std::vector<double> approx_tot, exact_tot;
    for (int m : {4, 5, 6}) {
      const CellFit cell = fit_cell(prep.centered, m, 2);
      if (!cell.report.converged) {
        approx_tot.push_back(INFINITY);
        exact_tot.push_back(INFINITY);
        o.detail << "[dataset " << ds << " M=" << m << " did not converge] ";
        continue;
      }
      const CvBreakdown cv = approx_cv(cell.report, cell.caches);
      const auto exact = fpca::testing::exact_loo_cv(cell.report, cell.caches);
      approx_tot.push_back(cv.total);
      exact_tot.push_back(exact.total);
      if (m == 4) {
        const double rel = std::abs(cv.total - exact.total) / std::abs(exact.total);
        worst = std::max(worst, rel);
        o.check(rel < 0.10, "dataset " + std::to_string(ds) + " M=4 within 10%");
      }
    }
    const auto best_approx = std::min_element(approx_tot.begin(), approx_tot.end()) - approx_tot.begin();
    std::vector<std::size_t> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return exact_tot[a] < exact_tot[b]; });
    const bool ok = order[0] == static_cast<std::size_t>(best_approx) ||
                    order[1] == static_cast<std::size_t>(best_approx);
    agree += ok;
    o.check(ok, "dataset " + std::to_string(ds) + " best-cell agreement");
  }
  o.detail << "max rel diff (M=4): " << worst << ", best-cell agreement " << agree << "/5";
}

std::vector<std::string> admissibility_failures;

void check_admissible(const VectorXd& lambda, double sigma2, double orth, const std::string& tag) {
  bool ok = lambda.size() > 0 && (lambda.array() > 0).all() && sigma2 > 0 && orth <= 1e-8;
  for (Index k = 0; k + 1 < lambda.size(); ++k) ok = ok && lambda(k) >= lambda(k + 1);
  if (!ok) admissibility_failures.push_back(tag);
}

int fits_checked = 0;

void record_admissibility(const MetricReport& rep, const std::string& suite) {
  for (const auto& rec : rep.records) {
    if (rec.cells.empty()) {
      if (rec.eigenvalues.size() == 0) continue;  // no fit returned
      check_admissible(rec.eigenvalues, rec.noise_variance, rec.orthonormality_error,
                       suite + " replicate " + std::to_string(rec.replicate));
      ++fits_checked;
    }
    for (const auto& c : rec.cells) {
      if (!c.fitted) continue;
      check_admissible(c.eigenvalues, c.noise_variance, c.orthonormality_error,
                       suite + " replicate " + std::to_string(rec.replicate) + " M=" +
                           std::to_string(c.num_basis));
      ++fits_checked;
    }
  }
}

bool ran_suite5 = false, ran_suite6 = false;

// 5. Desk-scale estimation accuracy.
void estimation_accuracy(Outcome& o) {
  const TruthSpec spec = make_truth(Setting::kEasy);
  const MetricReport rep = run_benchmark(spec, 200, 20, {5}, {3}, kBenchSeed);
  record_admissibility(rep, "suite5");
  ran_suite5 = true;
  o.check(rep.converged >= 16, "converged >= 16");
  o.check(rep.mise_mean(0) >= 0.01 && rep.mise_mean(0) <= 0.15, "MISE(psi1) in [0.01, 0.15]");
  o.check(rep.noise_nmse <= 0.05, "sigma2 NMSE <= 0.05");
  for (Index k = 0; k < 3; ++k)
    o.check(rep.eigenvalue_nmse(k) <= 0.10, "eigenvalue NMSE " + std::to_string(k + 1));
  o.detail << "converged " << rep.converged << "/20, MISE " << rep.mise_mean.transpose()
           << ", sigma2 NMSE " << rep.noise_nmse << ", eigenvalue NMSE "
           << rep.eigenvalue_nmse.transpose();
}

// 6. Desk-scale model selection.
void selection_accuracy(Outcome& o) {
  const TruthSpec spec = make_truth(Setting::kEasy);
  const MetricReport rep = run_benchmark(spec, 200, 20, {4, 5, 6, 9}, {3}, kBenchSeed + 1);
  record_admissibility(rep, "suite6");
  ran_suite6 = true;
  int chose5 = 0;
  for (const auto& [key, count] : rep.selection_counts)
    if (key.first == 5) chose5 += count;
  const double frac = rep.converged ? static_cast<double>(chose5) / rep.converged : 0.0;
  o.check(rep.converged > 0 && frac >= 0.70, "M=5 chosen in >= 70%");
  o.detail << "M=5 chosen " << chose5 << "/" << rep.converged << " converged; counts:";
  for (const auto& [key, count] : rep.selection_counts)
    o.detail << " (M=" << key.first << ",r=" << key.second << "):" << count;
}

// 7. FEV pruning of the hybrid eigenvalues.
void fev(Outcome& o) {
  const VectorXd lam = make_truth(Setting::kHybrid).eigenvalues;
  const int r95 = fev_prune(lam, 0.95);
  const int r99 = fev_prune(lam, 0.99);
  o.check(r95 == 3, "kappa 0.95 -> 3");
  o.check(r99 == 4, "kappa 0.99 -> 4");
  o.detail << "kappa 0.95 -> " << r95 << ", kappa 0.99 -> " << r99;
}

// 8. Positivity and canonical form of every fit in suites 5 and 6.
void admissibility(Outcome& o) {
  if (!ran_suite5) {
    Outcome tmp;
    estimation_accuracy(tmp);
  }
  if (!ran_suite6) {
    Outcome tmp;
    selection_accuracy(tmp);
  }
  o.check(fits_checked > 0, "fits were checked");
  o.check(admissibility_failures.empty(), "all fits admissible");
  o.detail << fits_checked << " fits checked, " << admissibility_failures.size() << " violations";
  if (!admissibility_failures.empty()) o.detail << " (first: " << admissibility_failures.front() << ")";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"derivative correctness", derivative_correctness},
      {"Woodbury/dense equivalence", woodbury_equivalence},
      {"manifold suite", manifold_suite},
      {"approximate CV oracle", cv_oracle},
      {"desk-scale estimation (easy, n=200, M=5, r=3)", estimation_accuracy},
      {"desk-scale model selection (easy, n=200, M in {4,5,6,9})", selection_accuracy},
      {"FEV pruning (hybrid eigenvalues)", fev},
      {"positivity and canonicalization", admissibility},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[k].second(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
    std::printf("AC%d %s: %s [%.1fs] %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                secs.count(), o.detail.str().c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
