#pragma once

#include <cstddef>
#include <functional>
#include <limits>

#include "qcomp/types.hpp"

namespace qcomp {

enum class EigenMethod {
  /// Plain power iteration with Frobenius normalisation.
  power,
  /// Explicitly restarted Arnoldi; far fewer operator applications on slowly
  /// mixing maps.
  krylov,
};

struct EigenOptions {
  EigenMethod method = EigenMethod::krylov;
  /// Converged once ||E v - eta v||_F <= tolerance * |eta| with ||v||_F = 1.
  double tolerance = 1e-13;
  /// Budget in operator applications.
  std::size_t max_iterations = 50000;
  std::size_t krylov_dim = 24;
};

/// Linear map on (possibly rectangular) bond matrices, applied matrix-free.
using BondMap = std::function<Matrix(const Matrix&)>;

struct EigenPair {
  /// Dominant eigenvalue; its modulus when `nonreal` is set.
  double value = 0.0;
  Matrix vector;
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// The dominant eigenvalue appears to be non-real (or a +/- pair of equal modulus).
  bool nonreal = false;
  /// Estimated modulus of the next eigenvalue (NaN when unavailable).
  double second_modulus = std::numeric_limits<double>::quiet_NaN();
};

/// Dominant eigenpair of `op` started from `start` (same shape as the
/// eigenmatrix). Deterministic for a fixed start. Throws SolverError when the
/// budget is exhausted without convergence and without a non-real diagnosis.
EigenPair leading_eigenpair(const BondMap& op, const Matrix& start, const EigenOptions& opts = {});

}  // namespace qcomp
