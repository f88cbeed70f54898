#include <cmath>

#include "doctest.h"
#include "models.hpp"
#include "qcomp/divergence.hpp"
#include "qcomp/errors.hpp"

using namespace qcomp;

namespace {

double closed_form_cdr(double p, double q) {
  return -0.5 * std::log2((p * q + (1 - p) * (1 - q)) /
                          std::sqrt((p * p + (1 - p) * (1 - p)) * (q * q + (1 - q) * (1 - q))));
}

// -(1/2L) log2( sum_w P Q / sqrt(sum_w P^2 sum_w Q^2) ) by enumerating words.
double co_emission_rate(const Hmm& a, const Hmm& b, std::size_t length) {
  double pq = 0.0, pp = 0.0, qq = 0.0;
  for (const auto& w : testing::all_words(a.alphabet_size(), length)) {
    const double x = testing::path_sum_probability(a, w);
    const double y = testing::path_sum_probability(b, w);
    pq += x * y;
    pp += x * x;
    qq += y * y;
  }
  return -std::log2(pq / std::sqrt(pp * qq)) / (2.0 * static_cast<double>(length));
}

LinearGenerator gen(const Hmm& m) { return LinearGenerator::from_hmm(m); }

}  // namespace

TEST_CASE("bernoulli closed form agrees with exhaustive enumeration") {
  for (double p : {0.1, 0.5, 0.9})
    for (double q : {0.2, 0.7})
      CHECK(co_emission_rate(build_bernoulli(p), build_bernoulli(q), 8) ==
            doctest::Approx(closed_form_cdr(p, q)).epsilon(1e-12));
}

TEST_CASE("cdr of bernoulli pairs") {
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const CdrResult r = cdr(gen(build_bernoulli(p)), gen(build_bernoulli(q)));
      CHECK(std::abs(r.rate - closed_form_cdr(p, q)) < 1e-12);
    }
}

TEST_CASE("cdr is zero on self pairs and symmetric") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = gen(testing::random_hmm(4, 2, seed));
    const auto b = gen(testing::random_hmm(3, 2, seed + 100));
    const CdrResult self = cdr(a, a);
    CHECK(std::abs(self.rate) < 1e-10);
    CHECK_FALSE(self.nonreal);
    const double ab = cdr(a, b).rate;
    CHECK(ab == doctest::Approx(cdr(b, a).rate).epsilon(1e-10));
    CHECK(ab >= -1e-10);
  }
}

TEST_CASE("finite-length co-emission rates approach the cdr") {
  const Hmm a = testing::random_hmm(2, 2, 3);
  const Hmm b = testing::random_hmm(2, 2, 4);
  const double rate = cdr(gen(a), gen(b)).rate;
  // Transients decay like 1/L, so the gap at L = 10 should be below the gap at L = 5.
  CHECK(std::abs(co_emission_rate(a, b, 10) - rate) < std::abs(co_emission_rate(a, b, 5) - rate) + 1e-15);
}

TEST_CASE("cdr rejects mismatched alphabets") {
  auto a = gen(testing::b2());
  auto b = gen(build_bernoulli(0.5));
  b.alphabet = {"x", "y"};
  CHECK_THROWS_AS(cdr(a, b), InputError);
}

TEST_CASE("finite-length fidelity rates") {
  const auto a = gen(build_bernoulli(0.3));
  const auto b = gen(build_bernoulli(0.6));
  const double expected = -0.5 * std::log2(std::sqrt(0.18) + std::sqrt(0.28));
  for (std::size_t len = 1; len <= 5; ++len) CHECK(cfdr_finite_L(a, b, len) == doctest::Approx(expected).epsilon(1e-12));
  const Hmm x = testing::random_hmm(3, 2, 8);
  const Hmm y = testing::random_hmm(3, 2, 9);
  for (std::size_t len = 1; len <= 4; ++len)
    CHECK(bhattacharyya_coefficient(gen(x), gen(y), len) ==
          doctest::Approx(testing::brute_bhattacharyya(x, y, len)).epsilon(1e-12));
  for (double r : cfdr_sequence(gen(x), gen(x), 6)) CHECK(r == 0.0);
  CHECK_THROWS_AS(cfdr_finite_L(gen(testing::random_hmm(2, 4, 1)), gen(testing::random_hmm(2, 4, 2)), 11),
                  InputError);
}

TEST_CASE("bound certificates") {
  Vector one(1);
  one << 1.0;
  const auto c1 = certify_bounds(one, 1, 2);
  CHECK(c1.tail == 0.0);
  CHECK(c1.entropy == 0.0);
  CHECK(c1.passed());

  Vector lam(4);
  lam << 0.5, 0.25, 0.125, 0.125;
  const auto c = certify_bounds(lam, 4, 2);
  CHECK(c.tail == doctest::Approx(0.25));
  CHECK(c.entropy == doctest::Approx(1.75));
  CHECK(c.entropy_bound == doctest::Approx(1.75));
  CHECK(c.rank_bound == doctest::Approx(2.0));
  CHECK(c.passed());

  const auto bad = certify_bounds(lam, 2, 2);  // H = 1.75 > log2 2
  CHECK_FALSE(bad.entropy_within_rank);
  CHECK_THROWS_AS(certify_bounds(lam, 4, 1), InputError);
}

TEST_CASE("marginalising the auxiliary label") {
  const Hmm m = testing::random_hmm(3, 2, 6);
  const DilatedHmm d = dilate(m, make_labelling(m, LabellingStrategy::parse("random:2")));
  const LinearGenerator x = marginalise(d.generator(), d.aux_size());
  CHECK(x.alphabet == m.alphabet());
  for (const auto& w : testing::all_words(2, 3))
    CHECK(x.word_probability(w) == doctest::Approx(testing::path_sum_probability(m, w)).epsilon(1e-12));
}

TEST_CASE("data processing on two labellings of one model") {
  const Hmm m = testing::random_hmm(3, 2, 13, 0.7);
  const DilatedHmm a = dilate(m, make_labelling(m, LabellingStrategy::parse("sequential")));
  const DilatedHmm b = dilate(m, make_labelling(m, LabellingStrategy::parse("probability-descending")));
  const auto rep = data_processing_check(a.generator(), b.generator(), a.aux_size(), 4);
  CHECK(rep.passed());
  REQUIRE(rep.rows.size() == 4);
  for (const auto& r : rep.rows) {
    CHECK(r.coefficient_x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.rate_xy >= -1e-12);
  }
  const auto same = data_processing_check(a.generator(), a.generator(), a.aux_size(), 3);
  for (const auto& r : same.rows) CHECK(r.coefficient_xy == doctest::Approx(1.0).epsilon(1e-12));
}
