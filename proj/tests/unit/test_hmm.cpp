#include <cmath>

#include "doctest.h"
#include "models.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/hmm.hpp"
#include "qcomp/linear_generator.hpp"

using namespace qcomp;
using qcomp::testing::b2;

TEST_CASE("b2 stationary distribution and word probabilities") {
  const Hmm m = b2();
  const Vector pi = stationary_distribution(m);
  CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const Word one{1};
  CHECK(word_probability(m, one) == doctest::Approx(2.0 / 3.0 * 0.25 + 1.0 / 3.0).epsilon(1e-14));
  CHECK(stationary_state_entropy(m) == doctest::Approx(0.9182958340544896).epsilon(1e-12));
}

TEST_CASE("b2 branching profile") {
  const auto prof = branching_profile(b2());
  CHECK(prof.k(0, 0) == 2);
  CHECK(prof.k(0, 1) == 1);
  CHECK(prof.k(1, 1) == 1);
  CHECK(prof.aux_size == 2);
  CHECK_FALSE(prof.is_unifilar);
}

TEST_CASE("word probabilities match path sums on random models") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Hmm m = testing::random_hmm(3, 2, seed);
    for (const auto& w : testing::all_words(2, 4))
      CHECK(word_probability(m, w) == doctest::Approx(testing::path_sum_probability(m, w)).epsilon(1e-12));
  }
}

TEST_CASE("invalid models are rejected") {
  Matrix t(2, 2);
  t << 0.5, 0.0, 0.4, 1.0;
  CHECK_THROWS_AS(Hmm({"a"}, {t}), InputError);
  Matrix cyc(2, 2);
  cyc << 0.0, 1.0, 1.0, 0.0;
  CHECK_THROWS_AS(Hmm({"a"}, {cyc}), InputError);  // periodic
  Matrix neg(1, 1);
  neg << -1.0;
  CHECK_THROWS_AS(Hmm({"a", "b"}, {neg, 2.0 * Matrix::Ones(1, 1)}), InputError);
}

TEST_CASE("tns family") {
  const Hmm m = build_tns(4, 0.3);
  CHECK(m.num_states() == 4);
  CHECK(m.transition(0)(2, 2) == doctest::Approx(0.3));
  CHECK(m.transition(1)(2, 2) == doctest::Approx(0.35));
  CHECK(m.transition(1)(3, 2) == doctest::Approx(0.35));
  CHECK(m.transition(1)(0, 3) == doctest::Approx(0.35));
  const Vector pi = stationary_distribution(m);
  CHECK((pi.array() - 0.25).abs().maxCoeff() < 1e-12);
}

TEST_CASE("bernoulli and entropy helpers") {
  const Hmm m = build_bernoulli(0.3);
  const Word w{0, 1, 1};
  CHECK(word_probability(m, w) == doctest::Approx(0.3 * 0.7 * 0.7).epsilon(1e-14));
  Vector p(3);
  p << 0.5, 0.5, 0.0;
  CHECK(shannon_entropy_bits(p) == doctest::Approx(1.0));
}

TEST_CASE("sampled symbol frequencies follow the model") {
  const Hmm m = b2();
  const Word w = sample_hmm(m, 100000, 7);
  double ones = 0;
  for (auto x : w) ones += static_cast<double>(x == 1);
  const double p = 0.5;
  CHECK(std::abs(ones / 1e5 - p) < 4.0 * std::sqrt(p * (1 - p) / 1e5) * 2.0);
  CHECK(sample_hmm(m, 50, 3) == sample_hmm(m, 50, 3));
}

TEST_CASE("linear generator of an hmm") {
  const Hmm m = testing::random_hmm(3, 3, 11);
  const auto g = LinearGenerator::from_hmm(m);
  const auto block = block_distribution(g, 3);
  const auto words = testing::all_words(3, 3);
  double total = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    CHECK(block[i] == doctest::Approx(testing::path_sum_probability(m, words[i])).epsilon(1e-12));
    total += block[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const auto check = validate_generator(g, 4);
  CHECK(check.normalised);
  CHECK(check.probabilities_in_range);
  const Word bad{7};
  CHECK_THROWS_AS(g.word_probability(bad), InputError);
}
