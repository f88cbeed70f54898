#include "doctest.h"
#include "models.hpp"
#include "qcomp/dilation.hpp"
#include "qcomp/errors.hpp"

using namespace qcomp;

TEST_CASE("sequential labelling of b2") {
  const Hmm m = testing::b2();
  const Labelling l = make_labelling(m, LabellingStrategy::parse("sequential"));
  CHECK(l.at(0, 0, 0) == 0);
  CHECK(l.at(0, 1, 0) == 1);
  CHECK(l.at(0, 1, 1) == 0);
  CHECK(l.at(1, 0, 1) == 0);
  CHECK(l.at(1, 1, 0) == Labelling::kUnlabelled);
  CHECK(l.is_injective());
}

TEST_CASE("dilated b2 has three composite symbols in use") {
  const DilatedHmm d = dilate(testing::b2(), make_labelling(testing::b2(), LabellingStrategy::parse("sequential")));
  REQUIRE(d.composite.size() == 4);
  CHECK(d.composite_alphabet() == std::vector<std::string>{"0|0", "0|1", "1|0", "1|1"});
  std::size_t used = 0;
  for (const auto& c : d.composite) used += c.cwiseAbs().sum() > 0 ? 1 : 0;
  CHECK(used == 3);
  CHECK(d.composite[0](0, 0) == doctest::Approx(0.5));
  CHECK(d.composite[1](1, 0) == doctest::Approx(0.25));
  CHECK(d.composite[2](1, 0) == doctest::Approx(0.25));
  CHECK(d.composite[2](0, 1) == doctest::Approx(1.0));
  CHECK(branching_profile(d.as_hmm()).is_unifilar);
}

TEST_CASE("probability orderings sort successors") {
  Matrix t(3, 3);
  t << 0.1, 0.3, 0.3,
       0.5, 0.4, 0.3,
       0.4, 0.3, 0.4;
  const Hmm m({"a"}, {t});
  const auto asc = make_labelling(m, LabellingStrategy::parse("probability-ascending"));
  const auto desc = make_labelling(m, LabellingStrategy::parse("probability-descending"));
  CHECK(asc.at(0, 0, 0) == 0);
  CHECK(asc.at(0, 2, 0) == 1);
  CHECK(asc.at(0, 1, 0) == 2);
  CHECK(desc.at(0, 1, 0) == 0);
  CHECK(desc.at(0, 0, 0) == 2);
}

TEST_CASE("strategy names round-trip") {
  for (const std::string s : {"sequential", "probability-ascending", "probability-descending", "random:42"})
    CHECK(LabellingStrategy::parse(s).name() == s);
  CHECK_THROWS_AS(LabellingStrategy::parse("random:x"), InputError);
  CHECK_THROWS_AS(LabellingStrategy::parse("alphabetical"), InputError);
}

TEST_CASE("dilation preserves marginals on random models") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Hmm m = testing::random_hmm(4, 2, seed, 0.6);
    for (const std::string s : {"sequential", "probability-descending", "random:5"}) {
      const DilatedHmm d = dilate(m, make_labelling(m, LabellingStrategy::parse(s)));
      const auto rep = verify_dilation(d, 4);
      CHECK(rep.passed());
      CHECK(rep.max_marginal_error <= 1e-12);
      // independent check through path sums over the composite alphabet
      const Hmm c = d.as_hmm();
      const Word w{0, 1, 1};
      double total = 0.0;
      for (std::size_t y0 = 0; y0 < d.aux_size(); ++y0)
        for (std::size_t y1 = 0; y1 < d.aux_size(); ++y1)
          for (std::size_t y2 = 0; y2 < d.aux_size(); ++y2)
            total += testing::path_sum_probability(
                c, {d.composite_index(0, y0), d.composite_index(1, y1), d.composite_index(1, y2)});
      CHECK(total == doctest::Approx(testing::path_sum_probability(m, w)).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-injective labellings are rejected") {
  const Hmm m = testing::b2();
  Labelling l(2, 2, 2);
  l.set(0, 0, 0, 0);
  l.set(0, 1, 0, 0);
  l.set(0, 1, 1, 0);
  l.set(1, 0, 1, 0);
  CHECK_FALSE(l.is_injective());
  CHECK_THROWS_AS(dilate(m, l), InputError);
}
