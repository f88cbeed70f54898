#include "qcomp/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qcomp/errors.hpp"
#include "qcomp/random.hpp"

namespace qcomp {

void TrainingConfig::validate() const {
  if (num_states < 1) throw InputError("training needs at least one state");
  if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw InputError("training tolerance must be positive");
}

namespace {

constexpr double kProbabilityFloor = 1e-12;

struct Parameters {
  std::vector<Matrix> t;
  Vector initial;
};

struct Expectations {
  std::vector<Matrix> counts;  // expected transition counts per symbol
  Vector initial;              // summed posterior of the first state
  double log_likelihood = 0.0; // natural log
};

Expectations expectation_step(const Parameters& params, const std::vector<Word>& sequences) {
  const auto n = params.initial.size();
  const std::size_t nx = params.t.size();
  Expectations e;
  e.counts.assign(nx, Matrix::Zero(n, n));
  e.initial = Vector::Zero(n);
  std::vector<Matrix> outer(nx, Matrix::Zero(n, n));

  for (const auto& seq : sequences) {
    const std::size_t len = seq.size();
    Matrix alpha(n, static_cast<Eigen::Index>(len + 1));
    Vector scale(static_cast<Eigen::Index>(len + 1));
    alpha.col(0) = params.initial;
    scale(0) = 1.0;
    for (std::size_t t = 1; t <= len; ++t) {
      Vector a = params.t[seq[t - 1]] * alpha.col(static_cast<Eigen::Index>(t - 1));
      const double c = a.sum();
      if (!(c > 0.0)) throw InputError("training data has zero probability under the current model");
      scale(static_cast<Eigen::Index>(t)) = c;
      alpha.col(static_cast<Eigen::Index>(t)) = a / c;
      e.log_likelihood += std::log(c);
    }
    Vector beta = Vector::Ones(n);
    for (std::size_t t = len; t >= 1; --t) {
      const auto ti = static_cast<Eigen::Index>(t);
      const std::size_t x = seq[t - 1];
      outer[x].noalias() += (beta / scale(ti)) * alpha.col(ti - 1).transpose();
      beta = params.t[x].transpose() * beta / scale(ti);
    }
    e.initial += alpha.col(0).cwiseProduct(beta);
  }
  for (std::size_t x = 0; x < nx; ++x) e.counts[x] = params.t[x].cwiseProduct(outer[x]);
  return e;
}

Parameters maximisation_step(const Expectations& e, std::size_t num_sequences, bool& floored) {
  const auto n = e.initial.size();
  const std::size_t nx = e.counts.size();
  Parameters p;
  p.t = e.counts;
  for (Eigen::Index s = 0; s < n; ++s) {
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x) total += p.t[x].col(s).sum();
    if (!(total > 0.0)) {
      floored = true;
      for (std::size_t x = 0; x < nx; ++x) p.t[x].col(s) = p.t[x].col(s).cwiseMax(kProbabilityFloor);
      total = 0.0;
      for (std::size_t x = 0; x < nx; ++x) total += p.t[x].col(s).sum();
    }
    for (std::size_t x = 0; x < nx; ++x) p.t[x].col(s) /= total;
  }
  p.initial = e.initial / static_cast<double>(num_sequences);
  p.initial /= p.initial.sum();
  return p;
}

}  // namespace

TrainingResult baum_welch_train(const std::vector<Word>& sequences, const std::vector<std::string>& alphabet,
                                const TrainingConfig& cfg) {
  cfg.validate();
  if (alphabet.empty()) throw InputError("training alphabet is empty");
  std::size_t num_symbols = 0;
  for (const auto& seq : sequences) {
    for (auto x : seq)
      if (x >= alphabet.size()) throw InputError("training symbol outside declared alphabet");
    num_symbols += seq.size();
  }
  if (sequences.empty() || num_symbols == 0) throw InputError("training data is empty");

  const auto n = static_cast<Eigen::Index>(cfg.num_states);
  const std::size_t nx = alphabet.size();
  Parameters params;
  params.initial = Vector::Constant(n, 1.0 / static_cast<double>(n));
  params.t.assign(nx, Matrix::Zero(n, n));
  Rng rng(cfg.seed);
  for (Eigen::Index s = 0; s < n; ++s) {
    double total = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double w = cfg.init == InitScheme::random ? 0.5 + uniform01(rng) : 1.0;
        params.t[x](r, s) = w;
        total += w;
      }
    }
    for (std::size_t x = 0; x < nx; ++x) params.t[x].col(s) /= total;
  }

  std::vector<double> history;
  bool floored = false;
  bool converged = false;
  std::size_t violations = 0;
  const double per_symbol = 1.0 / static_cast<double>(num_symbols);
  for (std::size_t iter = 0;; ++iter) {
    const Expectations e = expectation_step(params, sequences);
    const double ll_bits = e.log_likelihood / std::log(2.0);
    if (!history.empty()) {
      const double gain = (ll_bits - history.back()) * per_symbol;
      if (gain < -1e-9) ++violations;
      history.push_back(ll_bits);
      if (gain < cfg.tolerance) {
        converged = true;
        break;
      }
    } else {
      history.push_back(ll_bits);
    }
    if (iter == cfg.max_iterations) break;
    params = maximisation_step(e, sequences.size(), floored);
  }

  Matrix chain = Matrix::Zero(n, n);
  for (const auto& t : params.t) chain += t;
  bool ergodic_floor = false;
  if (!is_ergodic(chain)) {
    ergodic_floor = true;
    for (Eigen::Index s = 0; s < n; ++s) {
      double total = 0.0;
      for (auto& t : params.t) {
        t.col(s).array() += kProbabilityFloor;
        total += t.col(s).sum();
      }
      for (auto& t : params.t) t.col(s) /= total;
    }
  }

  TrainingResult result{Hmm(alphabet, params.t), std::move(history), num_symbols, converged, floored,
                        ergodic_floor, violations};
  return result;
}

// ---------------------------------------------------------------------------

namespace {

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

std::size_t count_distinct_rows(const Matrix& m) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto& row = rows.emplace_back(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

}  // namespace

std::vector<std::size_t> kmeans_assign(const Matrix& codebook, const Matrix& features) {
  std::vector<std::size_t> labels(static_cast<std::size_t>(features.rows()), 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < codebook.rows(); ++c) {
      const double d = squared_distance(features, i, codebook, c);
      if (d < best) {
        best = d;
        labels[static_cast<std::size_t>(i)] = static_cast<std::size_t>(c);
      }
    }
  }
  return labels;
}

KMeansResult kmeans_quantize(const Matrix& features, std::size_t k, std::uint64_t seed,
                             std::size_t max_iterations) {
  if (k < 1) throw InputError("k must be >= 1");
  if (features.rows() == 0 || features.cols() == 0) throw InputError("feature set is empty");
  if (k > count_distinct_rows(features))
    throw InputError("duplicate centroid: k=" + std::to_string(k) + " exceeds the number of distinct points");

  const Eigen::Index n = features.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  Rng rng(seed);

  // k-means++ seeding.
  Matrix centroids(kk, features.cols());
  centroids.row(0) = features.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = squared_distance(features, i, centroids, 0);
  for (Eigen::Index c = 1; c < kk; ++c) {
    const double total = d2.sum();
    double u = uniform01(rng) * total;
    Eigen::Index pick = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2(i) <= 0.0) continue;
      pick = i;
      u -= d2(i);
      if (u < 0.0) break;
    }
    centroids.row(c) = features.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), squared_distance(features, i, centroids, c));
  }

  KMeansResult result;
  result.labels = kmeans_assign(centroids, features);
  auto wcss = [&]() {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      total += squared_distance(features, i, centroids, static_cast<Eigen::Index>(result.labels[static_cast<std::size_t>(i)]));
    return total;
  };
  result.wcss_history.push_back(wcss());

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    // Update step.
    Matrix sums = Matrix::Zero(kk, features.cols());
    std::vector<std::size_t> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = result.labels[static_cast<std::size_t>(i)];
      sums.row(static_cast<Eigen::Index>(c)) += features.row(i);
      ++counts[c];
    }
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // Empty cluster: move it onto the point that currently costs the most.
        Eigen::Index far = 0;
        double worst = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d = squared_distance(features, i, centroids,
                                            static_cast<Eigen::Index>(result.labels[static_cast<std::size_t>(i)]));
          if (d > worst) {
            worst = d;
            far = i;
          }
        }
        centroids.row(c) = features.row(far);
        result.labels[static_cast<std::size_t>(far)] = static_cast<std::size_t>(c);
      }
    }
    // Assignment step.
    auto next = kmeans_assign(centroids, features);
    const bool changed = next != result.labels;
    result.labels = std::move(next);
    result.wcss_history.push_back(wcss());
    result.iterations = iter + 1;
    if (!changed) break;
  }
  result.codebook = centroids;
  return result;
}

}  // namespace qcomp
