#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "fpca/likelihood.hpp"
#include "fpca/parallel.hpp"
#include "support/oracles.hpp"

namespace fpca {
namespace {

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, 4);
  for (int h : hits) EXPECT_EQ(h, 1);
  parallel_for(0, [](std::size_t) { FAIL(); }, 4);
}

TEST(ParallelFor, RethrowsAndRunsNestedInline) {
  EXPECT_THROW(parallel_for(
                   10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
               std::runtime_error);
  std::atomic<int> total{0};
  parallel_for(4, [&](std::size_t) {
    parallel_for(5, [&](std::size_t) { ++total; }, 4);
  }, 2);
  EXPECT_EQ(total.load(), 20);
}

TEST(WorkerCount, ReadsEnvironment) {
  ::setenv("FPCA_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::setenv("FPCA_THREADS", "junk", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("FPCA_THREADS");
}

TEST(PairwiseSum, FixedShape) {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(pairwise_sum(v), (1e16 + 1.0) + (-1e16 + 1.0));
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

TEST(Likelihood, BitwiseIdenticalAcrossThreadCounts) {
  testing::Rng rng(3);
  const BasisSystem basis(6);
  const auto data = testing::random_caches(basis, 2500, 2, 6, rng);
  const ModelParams p = testing::random_params(6, 3, rng);
  ::setenv("FPCA_THREADS", "1", 1);
  const LikelihoodEvaluation one(p, data);
  ::setenv("FPCA_THREADS", "4", 1);
  const LikelihoodEvaluation four(p, data);
  ::unsetenv("FPCA_THREADS");
  EXPECT_EQ(one.loss(), four.loss());
  EXPECT_EQ(one.grad_b(), four.grad_b());
  EXPECT_EQ(one.hess_tz(), four.hess_tz());
}

}  // namespace
}  // namespace fpca
