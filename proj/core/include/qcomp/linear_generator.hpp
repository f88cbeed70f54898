#pragma once

#include <span>
#include <string>
#include <vector>

#include "qcomp/types.hpp"

namespace qcomp {

class Hmm;

/// Finite-state word-probability generator:
///   Pr(x_1 ... x_L) = readout . L^{x_L} ... L^{x_1} . init
///
/// Covers classical HMMs (L^x = T^x, init = pi, readout = ones) and
/// Liouville-space quantum models (L^x = G^(x), init = vec(rho), readout = vec(I)).
struct LinearGenerator {
  std::vector<std::string> alphabet;
  std::vector<Matrix> generators;
  Vector init;
  Vector readout;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(init.size()); }
  std::size_t alphabet_size() const noexcept { return alphabet.size(); }

  static LinearGenerator from_hmm(const Hmm& model);

  /// Throws InputError on an out-of-range symbol index.
  double word_probability(std::span<const std::size_t> word) const;
  double word_probability(std::span<const std::string> labels) const;

  Word encode(std::span<const std::string> labels) const;
};

/// Probabilities of all |X|^L words in lexicographic order (first symbol most
/// significant), computed by depth-first prefix contraction.
std::vector<double> block_distribution(const LinearGenerator& gen, std::size_t length);

struct GeneratorCheck {
  bool probabilities_in_range = true;
  bool normalised = true;
  double worst_deviation = 0.0;
};

/// Checks word probabilities lie in [0,1] and sum to one for every L <= max_length
/// (tolerance 1e-9).
GeneratorCheck validate_generator(const LinearGenerator& gen, std::size_t max_length = 4);

}  // namespace qcomp
