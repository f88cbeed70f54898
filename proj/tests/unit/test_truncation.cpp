#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "models.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/random.hpp"
#include "qcomp/truncation.hpp"

using namespace qcomp;

namespace {

Imps qsample_of(const Hmm& m) {
  return qsample_tensors(dilate(m, make_labelling(m, LabellingStrategy::parse("sequential"))));
}

double dominant_modulus(const Matrix& e) {
  Eigen::EigenSolver<Matrix> es(e, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// |eta_mix| / sqrt(eta_a eta_b) from explicit Kronecker products.
double fidelity_oracle(const Imps& a, const Imps& b) {
  const auto kron_sum = [](const Imps& x, const Imps& y) {
    const Eigen::Index dx = x.tensors.front().rows();
    const Eigen::Index dy = y.tensors.front().rows();
    Matrix e = Matrix::Zero(dx * dy, dx * dy);
    for (std::size_t s = 0; s < x.tensors.size(); ++s)
      for (Eigen::Index i = 0; i < dx; ++i)
        for (Eigen::Index j = 0; j < dx; ++j) e.block(i * dy, j * dy, dy, dy) += x.tensors[s](i, j) * y.tensors[s];
    return e;
  };
  return dominant_modulus(kron_sum(a, b)) / std::sqrt(dominant_modulus(kron_sum(a, a)) * dominant_modulus(kron_sum(b, b)));
}

}  // namespace

TEST_CASE("polar factor is an isometry and fixes isometries") {
  Rng rng(3);
  Matrix g(9, 3);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = standard_normal(rng);
  const Matrix u = polar_isometry(g);
  CHECK((u.transpose() * u - Matrix::Identity(3, 3)).norm() < 1e-12);
  CHECK((polar_isometry(u) - u).norm() < 1e-12);
}

TEST_CASE("full bond dimension is lossless") {
  const Imps q = qsample_of(testing::random_hmm(4, 2, 5));
  TruncationOptions opt;
  opt.target_dim = 4;
  const auto r = variational_truncate(q, opt);
  CHECK(r.fidelity == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fidelity_per_site(q, r.truncated) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("truncated states are left-canonical and the fidelity is consistent") {
  const Imps q = qsample_of(testing::random_hmm(6, 2, 8, 0.5));
  TruncationOptions opt;
  opt.target_dim = 3;
  opt.restarts = 3;
  opt.seed = 4;
  const auto r = variational_truncate(q, opt);
  CHECK(r.truncated.bond_dim() == 3);
  CHECK(left_completeness_error(r.truncated) < 1e-10);
  CHECK(r.fidelity > 0.0);
  CHECK(r.fidelity <= 1.0);
  CHECK(r.fidelity_rate == doctest::Approx(-std::log2(r.fidelity)));
  REQUIRE(r.restart_fidelities.size() == 3);
  for (double f : r.restart_fidelities) CHECK(f <= r.fidelity + 1e-15);
  CHECK(r.fidelity >= r.initial_fidelity);
  CHECK(fidelity_oracle(q, r.truncated) == doctest::Approx(r.fidelity).epsilon(1e-8));
  CHECK(fidelity_per_site(q, r.truncated) == doctest::Approx(r.fidelity).epsilon(1e-8));
}

TEST_CASE("warm starts make the fidelity non-decreasing in the bond dimension") {
  const Imps q = qsample_of(testing::random_hmm(7, 3, 2, 0.4));
  std::optional<Imps> warm;
  double last = 0.0;
  for (std::size_t d = 1; d <= 7; ++d) {
    TruncationOptions opt;
    opt.target_dim = d;
    opt.restarts = 2;
    opt.warm_start = warm;
    const auto r = variational_truncate(q, opt);
    CHECK(r.fidelity >= last - 1e-12);
    last = r.fidelity;
    warm = r.truncated;
  }
  CHECK(last == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("truncation is deterministic for a seed") {
  const Imps q = qsample_of(testing::random_hmm(5, 2, 12));
  TruncationOptions opt;
  opt.target_dim = 2;
  opt.seed = 99;
  const auto a = variational_truncate(q, opt);
  const auto b = variational_truncate(q, opt);
  CHECK(a.fidelity == b.fidelity);
  for (std::size_t i = 0; i < a.truncated.tensors.size(); ++i) CHECK(a.truncated.tensors[i] == b.truncated.tensors[i]);
}

TEST_CASE("fidelity is symmetric and one on equal states") {
  const Imps a = qsample_of(testing::random_hmm(3, 2, 1));
  const Imps b = qsample_of(testing::random_hmm(3, 2, 2));
  CHECK(fidelity_per_site(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fidelity_per_site(a, b) == doctest::Approx(fidelity_per_site(b, a)).epsilon(1e-10));
  CHECK(fidelity_per_site(a, b) == doctest::Approx(fidelity_oracle(a, b)).epsilon(1e-9));
}

TEST_CASE("bad truncation options") {
  const Imps q = qsample_of(testing::b2());
  TruncationOptions opt;
  opt.target_dim = 0;
  CHECK_THROWS_AS(variational_truncate(q, opt), InputError);
  opt.target_dim = 3;
  CHECK_THROWS_AS(variational_truncate(q, opt), InputError);
  opt.target_dim = 1;
  opt.restarts = 0;
  CHECK_THROWS_AS(variational_truncate(q, opt), InputError);
}
