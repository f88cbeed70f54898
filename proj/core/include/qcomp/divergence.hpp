#pragma once

#include <vector>

#include "qcomp/eigensolver.hpp"
#include "qcomp/imps.hpp"
#include "qcomp/linear_generator.hpp"

namespace qcomp {

struct CdrResult {
  /// -1/2 log2(mu_pq / sqrt(mu_p mu_q)) in bits per symbol; +inf when mu_pq = 0.
  double rate = 0.0;
  double mu_p = 0.0;
  double mu_q = 0.0;
  double mu_pq = 0.0;
  /// Some dominant eigenvalue looked non-real; the modulus was used.
  bool nonreal = false;
  /// rate < -1e-10 (should not happen; reported, not clipped).
  bool negative = false;
  std::size_t iterations = 0;
};

/// Co-emission divergence rate from the leading moduli of the paired transfer
/// maps sum_x L^x (x) L^x, sum_x Lh^x (x) Lh^x and sum_x L^x (x) Lh^x.
CdrResult cdr(const LinearGenerator& p, const LinearGenerator& q, const EigenOptions& opts = {});

/// Largest |X|^L handled by exhaustive word enumeration (4^10).
inline constexpr std::size_t kEnumerationWordBudget = std::size_t{1} << 20;

/// Bhattacharyya coefficient of the length-L block distributions, normalised by
/// the square roots of their total masses.
double bhattacharyya_coefficient(const LinearGenerator& p, const LinearGenerator& q, std::size_t length);

/// -(1/2L) log2 of the Bhattacharyya coefficient at length L.
double cfdr_finite_L(const LinearGenerator& p, const LinearGenerator& q, std::size_t length);
/// Rates for L = 1..max_length.
std::vector<double> cfdr_sequence(const LinearGenerator& p, const LinearGenerator& q, std::size_t max_length);

struct BoundCertificate {
  std::size_t kept = 0;
  double tail = 0.0;
  double entropy = 0.0;
  std::size_t rank = 0;
  /// H / log2(kept)
  double entropy_bound = 0.0;
  /// log2(rank) / log2(kept), up to the unspecified constant
  double rank_bound = 0.0;
  bool tail_within_entropy_bound = false;
  bool entropy_within_rank = false;

  bool passed() const noexcept { return tail_within_entropy_bound && entropy_within_rank; }
};

/// Needs kept >= 2. Comparisons allow 1e-12 slack.
BoundCertificate certify_bounds(const Vector& schmidt, std::size_t rank, std::size_t kept);
/// Uses the stored Schmidt spectrum when present, otherwise canonicalises.
BoundCertificate certify_bounds(const Imps& m, std::size_t kept);

struct DataProcessingRow {
  std::size_t length = 0;
  double coefficient_x = 0.0;
  double coefficient_xy = 0.0;
  double rate_x = 0.0;
  double rate_xy = 0.0;
  bool holds = false;
};

struct DataProcessingReport {
  std::vector<DataProcessingRow> rows;
  bool passed() const noexcept;
};

/// Marginalising the auxiliary label cannot lower the Bhattacharyya
/// coefficient. Both generators are over the composite alphabet with index
/// x * aux_size + y.
DataProcessingReport data_processing_check(const LinearGenerator& p, const LinearGenerator& q, std::size_t aux_size,
                                           std::size_t max_length);

/// Generator over X obtained by summing the composite generators over y.
LinearGenerator marginalise(const LinearGenerator& composite, std::size_t aux_size);

}  // namespace qcomp
