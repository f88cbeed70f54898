#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcomp/hmm.hpp"
#include "qcomp/types.hpp"

namespace qcomp {

enum class InitScheme { random, uniform };

struct TrainingConfig {
  std::size_t num_states = 2;
  std::size_t max_iterations = 200;
  /// Training stops once the per-symbol log-likelihood (bits) improves by less than this.
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::random;

  void validate() const;
};

struct TrainingResult {
  Hmm model;
  /// Total log-likelihood in bits of the training data, one entry per E-step;
  /// the last entry belongs to the returned model.
  std::vector<double> log_likelihood;
  std::size_t num_symbols = 0;
  bool converged = false;
  /// A state with zero posterior occupation had its column floored.
  bool floored_columns = false;
  /// The fitted chain was not ergodic and every entry was floored.
  bool ergodicity_floor = false;
  std::size_t monotonicity_violations = 0;

  double per_symbol_log_likelihood() const {
    return log_likelihood.back() / static_cast<double>(num_symbols);
  }
};

/// Maximum-likelihood fit of an edge-emitting HMM by expectation-maximisation
/// (scaled forward-backward). Deterministic given the seed.
TrainingResult baum_welch_train(const std::vector<Word>& sequences, const std::vector<std::string>& alphabet,
                                const TrainingConfig& cfg);

struct KMeansResult {
  Matrix codebook;  // k x dim
  std::vector<std::size_t> labels;
  std::vector<double> wcss_history;
  std::size_t iterations = 0;
};

/// Lloyd's k-means with k-means++ seeding. Rows of `features` are points.
/// Throws InputError if k exceeds the number of distinct points.
KMeansResult kmeans_quantize(const Matrix& features, std::size_t k, std::uint64_t seed,
                             std::size_t max_iterations = 300);

/// Nearest-centroid labels for new points.
std::vector<std::size_t> kmeans_assign(const Matrix& codebook, const Matrix& features);

}  // namespace qcomp
