#include "qcomp/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "qcomp/errors.hpp"
#include "qcomp/linear_generator.hpp"
#include "qcomp/random.hpp"

namespace qcomp {

Hmm::Hmm(std::vector<std::string> alphabet, std::vector<Matrix> transitions)
    : alphabet_(std::move(alphabet)), transitions_(std::move(transitions)) {
  if (alphabet_.empty()) throw InputError("HMM alphabet is empty");
  if (alphabet_.size() != transitions_.size())
    throw InputError("HMM alphabet has " + std::to_string(alphabet_.size()) + " symbols but " +
                     std::to_string(transitions_.size()) + " transition matrices");
  std::set<std::string> seen;
  for (const auto& a : alphabet_) {
    if (!seen.insert(a).second) throw InputError("duplicate symbol label '" + a + "'");
  }
  num_states_ = static_cast<std::size_t>(transitions_.front().rows());
  if (num_states_ == 0) throw InputError("HMM has no states");
  for (std::size_t x = 0; x < transitions_.size(); ++x) {
    const Matrix& t = transitions_[x];
    if (static_cast<std::size_t>(t.rows()) != num_states_ ||
        static_cast<std::size_t>(t.cols()) != num_states_)
      throw InputError("transition matrix for symbol '" + alphabet_[x] + "' is not " +
                       std::to_string(num_states_) + "x" + std::to_string(num_states_));
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double v = t.data()[i];
      if (!std::isfinite(v) || v < 0.0)
        throw InputError("transition entries must be finite and non-negative (symbol '" +
                         alphabet_[x] + "')");
    }
  }
  const Matrix chain = state_chain();
  for (std::size_t s = 0; s < num_states_; ++s) {
    const double sum = chain.col(static_cast<Eigen::Index>(s)).sum();
    if (std::abs(sum - 1.0) > kColumnSumTolerance)
      throw InputError("outgoing probabilities of state " + std::to_string(s) + " sum to " +
                       std::to_string(sum));
  }
  if (!is_irreducible(chain)) throw InputError("HMM state chain is not irreducible");
  if (chain_period(chain) != 1) throw InputError("HMM state chain is periodic");
}

Matrix Hmm::state_chain() const {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(num_states_), static_cast<Eigen::Index>(num_states_));
  for (const auto& t : transitions_) p += t;
  return p;
}

std::size_t Hmm::symbol_index(std::string_view label) const {
  for (std::size_t x = 0; x < alphabet_.size(); ++x) {
    if (alphabet_[x] == label) return x;
  }
  throw InputError("unknown symbol '" + std::string(label) + "'");
}

Word Hmm::encode(std::span<const std::string> labels) const {
  Word w;
  w.reserve(labels.size());
  for (const auto& l : labels) w.push_back(symbol_index(l));
  return w;
}

namespace {

std::vector<std::vector<std::size_t>> successors(const Matrix& chain) {
  const auto n = static_cast<std::size_t>(chain.cols());
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      if (chain(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) > 0.0) adj[s].push_back(t);
  return adj;
}

std::vector<long> bfs_levels(const std::vector<std::vector<std::size_t>>& adj, std::size_t root) {
  std::vector<long> level(adj.size(), -1);
  std::queue<std::size_t> q;
  level[root] = 0;
  q.push(root);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto v : adj[u]) {
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        q.push(v);
      }
    }
  }
  return level;
}

}  // namespace

bool is_irreducible(const Matrix& chain) {
  const auto n = static_cast<std::size_t>(chain.cols());
  if (n == 0) return false;
  const auto adj = successors(chain);
  std::vector<std::vector<std::size_t>> rev(n);
  for (std::size_t u = 0; u < n; ++u)
    for (auto v : adj[u]) rev[v].push_back(u);
  // Strongly connected iff node 0 reaches everything forwards and backwards.
  const auto fwd = bfs_levels(adj, 0);
  const auto bwd = bfs_levels(rev, 0);
  return std::all_of(fwd.begin(), fwd.end(), [](long l) { return l >= 0; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](long l) { return l >= 0; });
}

std::size_t chain_period(const Matrix& chain) {
  // For an irreducible chain the period is the gcd over edges u->v of
  // level(u) + 1 - level(v), with BFS levels from any root.
  const auto adj = successors(chain);
  const auto level = bfs_levels(adj, 0);
  long g = 0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    if (level[u] < 0) continue;
    for (auto v : adj[u]) {
      if (level[v] < 0) continue;
      g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
    }
  }
  return static_cast<std::size_t>(g);
}

bool is_ergodic(const Matrix& chain) { return is_irreducible(chain) && chain_period(chain) == 1; }

Vector stationary_of(const Matrix& chain) {
  const Eigen::Index n = chain.rows();
  if (n == 1) return Vector::Ones(1);
  Matrix a = chain - Matrix::Identity(n, n);
  a.row(n - 1).setOnes();
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(a);
  Vector pi = lu.solve(b);
  // One step of iterative refinement, then polish with a few chain applications.
  pi += lu.solve(b - a * pi);
  for (Eigen::Index i = 0; i < n; ++i) pi(i) = std::max(pi(i), 0.0);
  pi /= pi.sum();
  double residual = (chain * pi - pi).lpNorm<Eigen::Infinity>();
  std::size_t it = 0;
  while (residual > 1e-12 && it < 1000) {
    pi = chain * pi;
    pi /= pi.sum();
    residual = (chain * pi - pi).lpNorm<Eigen::Infinity>();
    ++it;
  }
  if (!(residual <= 1e-12)) throw SolverError("stationary distribution did not converge", it, residual);
  return pi;
}

Vector stationary_distribution(const Hmm& model) { return stationary_of(model.state_chain()); }

double word_probability(const Hmm& model, std::span<const std::size_t> word) {
  return LinearGenerator::from_hmm(model).word_probability(word);
}

double shannon_entropy_bits(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log2(p(i));
  }
  return h;
}

double stationary_state_entropy(const Hmm& model) {
  return shannon_entropy_bits(stationary_distribution(model));
}

BranchingProfile branching_profile(const Hmm& model) {
  BranchingProfile prof;
  const auto n = model.num_states();
  const auto nx = model.alphabet_size();
  prof.alphabet_size = nx;
  prof.successor_counts.assign(n * nx, 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t x = 0; x < nx; ++x) {
      const auto col = model.transition(x).col(static_cast<Eigen::Index>(s));
      std::size_t k = 0;
      for (Eigen::Index t = 0; t < col.size(); ++t) k += col(t) > 0.0 ? 1 : 0;
      prof.successor_counts[s * nx + x] = k;
      prof.aux_size = std::max(prof.aux_size, k);
    }
  }
  prof.is_unifilar = prof.aux_size <= 1;
  return prof;
}

Hmm build_tns(std::size_t num_states, double p) {
  if (num_states < 2) throw InputError("TNS needs at least two states");
  if (!(p > 0.0 && p < 1.0)) throw InputError("TNS parameter p must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(num_states);
  Matrix t0 = Matrix::Zero(n, n);
  Matrix t1 = Matrix::Zero(n, n);
  const double half = (1.0 - p) / 2.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    t0(i, i) = p;
    t1(i, i) += half;
    t1((i + 1) % n, i) += half;
  }
  return Hmm({"0", "1"}, {t0, t1});
}

Hmm build_bernoulli(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("Bernoulli parameter must lie in [0, 1]");
  return Hmm({"0", "1"}, {Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, 1.0 - q)});
}

Word sample_hmm(const Hmm& model, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  const Vector pi = stationary_distribution(model);
  const auto n = static_cast<Eigen::Index>(model.num_states());
  auto draw = [&](auto&& weight, Eigen::Index count) {
    double u = uniform01(rng);
    Eigen::Index last = 0;
    for (Eigen::Index i = 0; i < count; ++i) {
      const double w = weight(i);
      if (w <= 0.0) continue;
      last = i;
      u -= w;
      if (u < 0.0) return i;
    }
    return last;
  };
  Eigen::Index state = draw([&](Eigen::Index i) { return pi(i); }, n);
  const auto nx = static_cast<Eigen::Index>(model.alphabet_size());
  Word out;
  out.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    // Joint draw over (x, s') from column `state`.
    const Eigen::Index k = draw(
        [&](Eigen::Index i) { return model.transition(static_cast<std::size_t>(i / n))(i % n, state); },
        nx * n);
    out.push_back(static_cast<std::size_t>(k / n));
    state = k % n;
  }
  return out;
}

}  // namespace qcomp
