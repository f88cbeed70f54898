#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcomp/eigensolver.hpp"
#include "qcomp/imps.hpp"

namespace qcomp {

enum class TruncationInit { schmidt_projection, random };

struct TruncationOptions {
  std::size_t target_dim = 1;
  std::size_t max_sweeps = 500;
  /// Stop once a sweep improves the fidelity by less than this.
  double tolerance = 1e-12;
  /// Independent runs; run 0 uses `init`, later runs start from random isometries.
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
  TruncationInit init = TruncationInit::schmidt_projection;
  /// Optional extra candidate, typically the solution at a smaller bond
  /// dimension; it is embedded block-diagonally and polished like any other run.
  std::optional<Imps> warm_start;
  EigenOptions eigen;

  void validate(std::size_t bond_dim) const;
};

struct TruncationResult {
  /// Left-canonical, bond basis rotated so the Schmidt values are non-increasing.
  /// Its bond dimension is below the target when the input's canonical form
  /// is already that small.
  Imps truncated;
  double fidelity = 0.0;
  /// -log2(fidelity)
  double fidelity_rate = 0.0;
  std::size_t sweeps = 0;
  /// Run that produced the result; equals `restarts` for the warm-start candidate.
  std::size_t best_restart = 0;
  bool converged = false;
  std::string warning;
  std::vector<double> restart_fidelities;
  double initial_fidelity = 0.0;
  double wall_time_seconds = 0.0;
};

TruncationResult variational_truncate(const Imps& m, const TruncationOptions& opts);

/// |eta_mix| / sqrt(eta_a eta_b) for the mixed transfer map sum_a A^a (x) B^a.
double fidelity_per_site(const Imps& a, const Imps& b, const EigenOptions& opts = {});

/// Polar factor U V^T of a tall matrix (closest isometry in Frobenius norm).
Matrix polar_isometry(const Matrix& tall);

}  // namespace qcomp
