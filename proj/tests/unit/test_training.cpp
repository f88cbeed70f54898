#include <cmath>
#include <random>

#include "doctest.h"
#include "models.hpp"
#include "qcomp/divergence.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/merge.hpp"
#include "qcomp/training.hpp"

using namespace qcomp;

TEST_CASE("one-state fit of a fair coin") {
  const Word w = sample_hmm(build_bernoulli(0.5), 10000, 3);
  TrainingConfig cfg;
  cfg.num_states = 1;
  const auto r = baum_welch_train({w}, {"0", "1"}, cfg);
  CHECK(std::abs(r.model.transition(0)(0, 0) - 0.5) < 0.02);
  CHECK(std::abs(r.model.transition(1)(0, 0) - 0.5) < 0.02);
}

TEST_CASE("likelihood does not decrease and training is deterministic") {
  const Hmm truth = testing::random_hmm(3, 3, 5, 0.3);
  const Word w = sample_hmm(truth, 5000, 11);
  TrainingConfig cfg;
  cfg.num_states = 3;
  cfg.max_iterations = 60;
  cfg.seed = 2;
  const auto a = baum_welch_train({w}, truth.alphabet(), cfg);
  for (std::size_t i = 1; i < a.log_likelihood.size(); ++i)
    CHECK(a.log_likelihood[i] >= a.log_likelihood[i - 1] - 1e-8);
  CHECK(a.monotonicity_violations == 0);
  const auto b = baum_welch_train({w}, truth.alphabet(), cfg);
  for (std::size_t x = 0; x < 3; ++x) CHECK(a.model.transition(x) == b.model.transition(x));
  // the fit should explain the data at least as well as the generating model
  double ll_truth = 0.0;
  {
    const auto g = LinearGenerator::from_hmm(truth);
    Vector state = g.init;
    for (auto x : w) {
      state = g.generators[x] * state;
      const double s = state.sum();
      ll_truth += std::log2(s);
      state /= s;
    }
  }
  CHECK(a.log_likelihood.back() >= ll_truth - 50.0);
}

TEST_CASE("bad training input") {
  TrainingConfig cfg;
  CHECK_THROWS_AS(baum_welch_train({}, {"a"}, cfg), InputError);
  CHECK_THROWS_AS(baum_welch_train({{0, 3}}, {"a", "b"}, cfg), InputError);
  cfg.num_states = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

TEST_CASE("k-means finds separated clusters") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.2);
  const double centres[4][2] = {{0, 0}, {6, 0}, {0, 6}, {6, 6}};
  Matrix f(400, 2);
  for (Eigen::Index i = 0; i < 400; ++i) {
    f(i, 0) = centres[i % 4][0] + g(rng);
    f(i, 1) = centres[i % 4][1] + g(rng);
  }
  const auto r = kmeans_quantize(f, 4, 9);
  REQUIRE(r.labels.size() == 400);
  for (auto l : r.labels) CHECK(l < 4);
  for (Eigen::Index i = 4; i < 400; ++i) CHECK(r.labels[i] == r.labels[i % 4]);
  for (std::size_t i = 1; i < r.wcss_history.size(); ++i) CHECK(r.wcss_history[i] <= r.wcss_history[i - 1] + 1e-9);
  CHECK(kmeans_assign(r.codebook, f) == r.labels);
  CHECK(kmeans_quantize(f, 4, 9).labels == r.labels);
  CHECK_THROWS_AS(kmeans_quantize(Matrix::Zero(3, 2), 2, 0), InputError);
}

TEST_CASE("merging b2 to one state keeps the symbol marginals") {
  const Hmm m = testing::b2();
  const auto steps = greedy_merge_baseline(m, 1);
  REQUIRE(steps.size() == 1);
  const Hmm& one = steps.front().model;
  CHECK(one.num_states() == 1);
  CHECK(one.transition(1)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(one.transition(0)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("merging duplicate states is exact") {
  // states 1 and 2 are copies: same emissions, same successor mixture
  Matrix t0(3, 3), t1(3, 3);
  t0 << 0.3, 0.2, 0.2,
        0.1, 0.1, 0.1,
        0.1, 0.1, 0.1;
  t1 << 0.2, 0.3, 0.3,
        0.2, 0.15, 0.15,
        0.1, 0.15, 0.15;
  const Hmm m({"a", "b"}, {t0, t1});
  const Vector pi = stationary_distribution(m);
  CHECK(merge_objective(m, pi, 1, 2) == doctest::Approx(0.0).epsilon(1e-14));
  const auto steps = greedy_merge_baseline(m, 2);
  REQUIRE(steps.size() == 1);
  CHECK(steps.front().merged_a == 1);
  CHECK(steps.front().merged_b == 2);
  const auto rc = cdr(LinearGenerator::from_hmm(m), LinearGenerator::from_hmm(steps.front().model));
  CHECK(std::abs(rc.rate) < 1e-10);
  CHECK_THROWS_AS(greedy_merge_baseline(m, 3), InputError);
}
