#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qcomp/types.hpp"

namespace qcomp {

/// Tolerance on the per-column normalisation of an HMM.
inline constexpr double kColumnSumTolerance = 1e-12;

/// Finite edge-emitting hidden Markov model.
///
/// transition(x)(s', s) = Pr(S_{t+1} = s', X_t = x | S_t = s): columns index
/// the current state, rows the next state. Words act by left multiplication
/// in time order. Construction validates non-negativity, column
/// normalisation and ergodicity of the summed chain, throwing InputError.
class Hmm {
 public:
  Hmm(std::vector<std::string> alphabet, std::vector<Matrix> transitions);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t alphabet_size() const noexcept { return alphabet_.size(); }
  const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
  const std::vector<Matrix>& transitions() const noexcept { return transitions_; }
  const Matrix& transition(std::size_t x) const { return transitions_.at(x); }

  /// P = sum_x T^x.
  Matrix state_chain() const;

  std::size_t symbol_index(std::string_view label) const;
  Word encode(std::span<const std::string> labels) const;

 private:
  std::vector<std::string> alphabet_;
  std::vector<Matrix> transitions_;
  std::size_t num_states_ = 0;
};

// Support-graph analysis of a column-stochastic chain. Edge s -> s' iff P(s', s) > 0.
bool is_irreducible(const Matrix& chain);
std::size_t chain_period(const Matrix& chain);
bool is_ergodic(const Matrix& chain);

/// Stationary distribution of a column-stochastic chain; throws SolverError
/// when the residual cannot be brought under 1e-12.
Vector stationary_of(const Matrix& chain);
Vector stationary_distribution(const Hmm& model);

/// Word probability from the stationary distribution.
double word_probability(const Hmm& model, std::span<const std::size_t> word);

/// Shannon entropy (bits) of the stationary state distribution of this
/// presentation. Equals the statistical complexity only for epsilon-machines.
double stationary_state_entropy(const Hmm& model);

/// Entropy in bits of a probability vector, with 0 log 0 = 0.
double shannon_entropy_bits(const Vector& p);

struct BranchingProfile {
  /// k(s, x), stored at [s * alphabet_size + x].
  std::vector<std::size_t> successor_counts;
  std::size_t alphabet_size = 0;
  std::size_t aux_size = 0;  // d_y
  bool is_unifilar = false;

  std::size_t k(std::size_t s, std::size_t x) const { return successor_counts[s * alphabet_size + x]; }
};

BranchingProfile branching_profile(const Hmm& model);

/// N-state tunable non-deterministic source. From state i: emit 0 w.p. p and
/// stay; emit 1 w.p. (1-p)/2 and stay; emit 1 w.p. (1-p)/2 and move to i+1 mod N.
Hmm build_tns(std::size_t num_states, double p);

/// Single-state i.i.d. source emitting "0" with probability q and "1" otherwise.
Hmm build_bernoulli(double q);

/// Samples a stationary trajectory of observed symbols.
Word sample_hmm(const Hmm& model, std::size_t length, std::uint64_t seed);

}  // namespace qcomp
