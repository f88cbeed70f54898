#include "qcomp/qhmm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qcomp/dilation.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/hmm.hpp"
#include "qcomp/random.hpp"
#include "qcomp/truncation.hpp"

namespace qcomp {

namespace {

constexpr double kCompletenessTolerance = 1e-9;
constexpr double kVecTolerance = 1e-12;

Matrix stationary_state(const QhmmModel& q, const EigenOptions& opts) {
  const auto d = static_cast<Eigen::Index>(q.kraus.front().front().rows());
  const auto pair = leading_eigenpair([&](const Matrix& rho) { return q.channel(rho); },
                                      Matrix::Identity(d, d) / static_cast<double>(d), opts);
  Matrix rho = 0.5 * (pair.vector + pair.vector.transpose());
  if (rho.trace() < 0.0) rho = -rho;
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  const Vector ev = es.eigenvalues().cwiseMax(0.0);
  rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  rho = 0.5 * (rho + rho.transpose()).eval();
  return rho / rho.trace();
}

}  // namespace

std::size_t QhmmModel::symbol_index(const std::string& label) const {
  const auto it = std::find(alphabet.begin(), alphabet.end(), label);
  if (it == alphabet.end()) throw InputError("symbol '" + label + "' is not in the QHMM alphabet");
  return static_cast<std::size_t>(it - alphabet.begin());
}

Matrix QhmmModel::apply(std::size_t x, const Matrix& rho) const {
  if (x >= kraus.size()) throw InputError("symbol index " + std::to_string(x) + " is out of range");
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& k : kraus[x]) out.noalias() += k * rho * k.transpose();
  return out;
}

Matrix QhmmModel::channel(const Matrix& rho) const {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& family : kraus)
    for (const auto& k : family) out.noalias() += k * rho * k.transpose();
  return out;
}

QhmmCheck check_qhmm(const QhmmModel& q) {
  QhmmCheck out;
  const auto d = static_cast<Eigen::Index>(q.bond_dim());
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& family : q.kraus)
    for (const auto& k : family) sum.noalias() += k.transpose() * k;
  out.completeness_error = (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  out.trace_error = std::abs(q.rho_star.trace() - 1.0);
  out.fixed_point_error = (q.channel(q.rho_star) - q.rho_star).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> es(q.rho_star, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  return out;
}

QhmmModel reconstruct_qhmm(const Imps& m, const std::vector<std::string>& base_alphabet, std::size_t aux_size,
                           const EigenOptions& opts) {
  if (base_alphabet.empty() || aux_size == 0) throw InputError("base alphabet and auxiliary size must be nonempty");
  if (m.phys_dim() != base_alphabet.size() * aux_size)
    throw InputError("iMPS has " + std::to_string(m.phys_dim()) + " site tensors, expected |X| * |Y| = " +
                     std::to_string(base_alphabet.size() * aux_size));
  if (!m.alphabet.empty()) {
    for (std::size_t x = 0; x < base_alphabet.size(); ++x)
      for (std::size_t y = 0; y < aux_size; ++y)
        if (m.alphabet[x * aux_size + y] != composite_label(base_alphabet[x], y))
          throw InputError("iMPS symbol '" + m.alphabet[x * aux_size + y] + "' does not match composite label '" +
                           composite_label(base_alphabet[x], y) + "'");
  }
  const double err = left_completeness_error(m);
  if (err > kCompletenessTolerance)
    throw GaugeError("site tensors violate left completeness by " + std::to_string(err) + "; re-canonicalise first");

  QhmmModel q;
  q.alphabet = base_alphabet;
  q.kraus.resize(base_alphabet.size());
  for (std::size_t x = 0; x < base_alphabet.size(); ++x)
    for (std::size_t y = 0; y < aux_size; ++y) q.kraus[x].push_back(m.tensors[x * aux_size + y]);
  q.rho_star = stationary_state(q, opts);
  return q;
}

QhmmModel reconstruct_qhmm(const TruncationResult& t, const std::vector<std::string>& base_alphabet,
                           std::size_t aux_size, const EigenOptions& opts) {
  return reconstruct_qhmm(t.truncated, base_alphabet, aux_size, opts);
}

Vector vec(const Matrix& m) {
  const Matrix t = m.transpose();
  return Eigen::Map<const Vector>(t.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index dim) {
  if (v.size() != dim * dim) throw InputError("vector length does not match the requested square shape");
  return Eigen::Map<const Matrix>(v.data(), dim, dim).transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double vec_identity_error(std::uint64_t seed, std::size_t trials, Eigen::Index dim) {
  Rng rng(seed);
  auto random = [&] {
    Matrix m(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      for (Eigen::Index i = 0; i < dim; ++i) m(i, j) = standard_normal(rng);
    return m;
  };
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const Matrix a = random();
    const Matrix rho = random();
    const Matrix b = random();
    const Vector lhs = vec(a * rho * b);
    const Vector rhs = kron(a, b.transpose()) * vec(rho);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

LinearGenerator liouville_generators(const QhmmModel& q) {
  const double err = vec_identity_error(0x11a5ULL);
  if (err > kVecTolerance) throw VerificationError("vectorisation self-test failed: " + std::to_string(err));
  const auto d = static_cast<Eigen::Index>(q.bond_dim());
  LinearGenerator gen;
  gen.alphabet = q.alphabet;
  for (const auto& family : q.kraus) {
    Matrix g = Matrix::Zero(d * d, d * d);
    for (const auto& k : family) g += kron(k, k);
    gen.generators.push_back(std::move(g));
  }
  gen.init = vec(q.rho_star);
  gen.readout = vec(Matrix::Identity(d, d));
  return gen;
}

double word_probability_q(const QhmmModel& q, std::span<const std::size_t> word) {
  Matrix rho = q.rho_star;
  for (std::size_t x : word) rho = q.apply(x, rho);
  return rho.trace();
}

double word_probability_q(const QhmmModel& q, std::span<const std::string> labels) {
  Word word;
  for (const auto& l : labels) word.push_back(q.symbol_index(l));
  return word_probability_q(q, word);
}

Word sample_sequence(const QhmmModel& q, std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  Word out;
  out.reserve(length);
  Matrix rho = q.rho_star;
  std::vector<Matrix> next(q.alphabet_size());
  std::vector<double> weight(q.alphabet_size());
  for (std::size_t t = 0; t < length; ++t) {
    double total = 0.0;
    for (std::size_t x = 0; x < q.alphabet_size(); ++x) {
      next[x] = q.apply(x, rho);
      weight[x] = std::max(next[x].trace(), 0.0);
      total += weight[x];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      std::ostringstream dump;
      dump << "all outcome probabilities vanished at step " << t << "; state:\n" << rho;
      throw SolverError(dump.str(), t, total);
    }
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = q.alphabet_size();
    for (std::size_t x = 0; x < q.alphabet_size(); ++x) {
      if (weight[x] <= 0.0) continue;
      acc += weight[x];
      pick = x;
      if (u < acc) break;
    }
    out.push_back(pick);
    rho = next[pick] / weight[pick];
  }
  return out;
}

double quantum_memory(const QhmmModel& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (q.rho_star + q.rho_star.transpose()), Eigen::EigenvaluesOnly);
  Vector mu = es.eigenvalues();
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu(i) < 1e-14) mu(i) = 0.0;
  return shannon_entropy_bits(mu / mu.sum());
}

}  // namespace qcomp
