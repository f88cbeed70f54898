#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcomp/hmm.hpp"
#include "qcomp/imps.hpp"

namespace qcomp::testing {

std::vector<std::string> symbols(std::size_t count);

/// Ergodic HMM with a guaranteed cycle 0 -> 1 -> ... -> n-1 -> 0 plus random
/// extra edges kept with probability `density`.
Hmm random_hmm(std::size_t states, std::size_t alphabet, std::uint64_t seed, double density = 0.5);

/// Unifilar HMM: each (s, x) has at most one successor.
Hmm random_deterministic_hmm(std::size_t states, std::size_t alphabet, std::uint64_t seed);

/// The two-state example: from 0 emit 0 and stay (1/2), emit 0 or 1 and move
/// to 1 (1/4 each); from 1 emit 1 and return to 0.
Hmm b2();

/// Stationary distribution from the linear system (P - I) pi = 0, sum pi = 1.
Vector oracle_stationary(const Matrix& chain);

/// Explicit sum over all hidden state paths.
double path_sum_probability(const Hmm& model, const Word& word);

/// All |X|^L words, first symbol most significant.
std::vector<Word> all_words(std::size_t alphabet, std::size_t length);

/// sum_w sqrt(P(w) Q(w)) over length-L words by path sums.
double brute_bhattacharyya(const Hmm& p, const Hmm& q, std::size_t length);

}  // namespace qcomp::testing
