#include "models.hpp"

#include <cmath>
#include <random>

namespace qcomp::testing {

std::vector<std::string> symbols(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::to_string(i));
  return out;
}

namespace {

std::vector<Matrix> normalise(std::vector<Matrix> t) {
  const Eigen::Index n = t.front().cols();
  for (Eigen::Index s = 0; s < n; ++s) {
    double total = 0.0;
    for (const auto& m : t) total += m.col(s).sum();
    for (auto& m : t) m.col(s) /= total;
  }
  return t;
}

}  // namespace

Hmm random_hmm(std::size_t states, std::size_t alphabet, std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(states);
  std::vector<Matrix> t(alphabet, Matrix::Zero(n, n));
  for (Eigen::Index s = 0; s < n; ++s) {
    t[static_cast<std::size_t>(rng() % alphabet)]((s + 1) % n, s) += 0.2 + u(rng);
    // a self-loop keeps the chain aperiodic
    t[static_cast<std::size_t>(rng() % alphabet)](s, s) += 0.2 + u(rng);
    for (auto& m : t)
      for (Eigen::Index r = 0; r < n; ++r)
        if (u(rng) < density) m(r, s) += u(rng);
  }
  return Hmm(symbols(alphabet), normalise(std::move(t)));
}

Hmm random_deterministic_hmm(std::size_t states, std::size_t alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(states);
  for (;;) {
    std::vector<Matrix> t(alphabet, Matrix::Zero(n, n));
    for (Eigen::Index s = 0; s < n; ++s)
      for (std::size_t x = 0; x < alphabet; ++x) {
        const auto next = x == 0 ? (s + 1) % n : static_cast<Eigen::Index>(rng() % states);
        t[x](next, s) = 0.1 + u(rng);
      }
    try {
      return Hmm(symbols(alphabet), normalise(std::move(t)));
    } catch (const std::exception&) {
      // periodic draw; try again
    }
  }
}

Hmm b2() {
  Matrix t0(2, 2), t1(2, 2);
  t0 << 0.5, 0.0, 0.25, 0.0;
  t1 << 0.0, 1.0, 0.25, 0.0;
  return Hmm({"0", "1"}, {t0, t1});
}

Vector oracle_stationary(const Matrix& chain) {
  const Eigen::Index n = chain.rows();
  Matrix a(n + 1, n);
  a.topRows(n) = chain - Matrix::Identity(n, n);
  a.row(n).setOnes();
  Vector b = Vector::Zero(n + 1);
  b(n) = 1.0;
  return a.colPivHouseholderQr().solve(b);
}

double path_sum_probability(const Hmm& model, const Word& word) {
  const std::size_t n = model.num_states();
  const Vector pi = oracle_stationary(model.state_chain());
  const std::size_t steps = word.size();
  std::size_t paths = 1;
  for (std::size_t i = 0; i <= steps; ++i) paths *= n;
  double total = 0.0;
  std::vector<std::size_t> path(steps + 1);
  for (std::size_t code = 0; code < paths; ++code) {
    std::size_t c = code;
    for (auto& s : path) {
      s = c % n;
      c /= n;
    }
    double w = pi(static_cast<Eigen::Index>(path[0]));
    for (std::size_t t = 0; t < steps && w != 0.0; ++t)
      w *= model.transition(word[t])(static_cast<Eigen::Index>(path[t + 1]), static_cast<Eigen::Index>(path[t]));
    total += w;
  }
  return total;
}

std::vector<Word> all_words(std::size_t alphabet, std::size_t length) {
  std::vector<Word> out;
  std::size_t count = 1;
  for (std::size_t i = 0; i < length; ++i) count *= alphabet;
  for (std::size_t code = 0; code < count; ++code) {
    Word w(length);
    std::size_t c = code;
    for (std::size_t i = length; i-- > 0;) {
      w[i] = c % alphabet;
      c /= alphabet;
    }
    out.push_back(std::move(w));
  }
  return out;
}

double brute_bhattacharyya(const Hmm& p, const Hmm& q, std::size_t length) {
  double total = 0.0;
  for (const auto& w : all_words(p.alphabet_size(), length))
    total += std::sqrt(path_sum_probability(p, w) * path_sum_probability(q, w));
  return total;
}

}  // namespace qcomp::testing
