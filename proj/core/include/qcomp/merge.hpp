#pragma once

#include <vector>

#include "qcomp/hmm.hpp"

namespace qcomp {

struct MergeStep {
  std::size_t state_count = 0;
  Hmm model;
  /// Indices (in the previous step's model) of the merged pair, a < b.
  std::size_t merged_a = 0;
  std::size_t merged_b = 0;
  double objective = 0.0;
};

/// Stationary-weighted KL objective for merging states a and b:
///   pi_a KL(p_a || p_m) + pi_b KL(p_b || p_m),  p_m = (pi_a p_a + pi_b p_b)/(pi_a + pi_b)
/// where p_s(x, s') = T^x_{s's}.
double merge_objective(const Hmm& model, const Vector& pi, std::size_t a, std::size_t b);

/// Lumps states a < b into a single state at index a using the stationary-mixture rule.
Hmm merge_states(const Hmm& model, const Vector& pi, std::size_t a, std::size_t b);

/// Greedy state merging down to `target_states`; one entry per state count from
/// num_states - 1 down to target_states.
std::vector<MergeStep> greedy_merge_baseline(const Hmm& model, std::size_t target_states);

}  // namespace qcomp
