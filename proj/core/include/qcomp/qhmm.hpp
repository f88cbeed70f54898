#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qcomp/eigensolver.hpp"
#include "qcomp/imps.hpp"
#include "qcomp/linear_generator.hpp"
#include "qcomp/types.hpp"

namespace qcomp {

struct TruncationResult;

/// Quantum instrument over the base alphabet: outcome x applies
///   E_x(rho) = sum_y K^{x,y} rho K^{x,y}^T.
struct QhmmModel {
  std::vector<std::string> alphabet;
  /// kraus[x][y], all bond_dim x bond_dim.
  std::vector<std::vector<Matrix>> kraus;
  Matrix rho_star;

  std::size_t bond_dim() const noexcept { return static_cast<std::size_t>(rho_star.rows()); }
  std::size_t alphabet_size() const noexcept { return alphabet.size(); }
  std::size_t symbol_index(const std::string& label) const;

  Matrix apply(std::size_t x, const Matrix& rho) const;
  /// Unconditional channel sum_x E_x.
  Matrix channel(const Matrix& rho) const;
};

struct QhmmCheck {
  double completeness_error = 0.0;
  double trace_error = 0.0;
  double fixed_point_error = 0.0;
  double min_eigenvalue = 0.0;
};

QhmmCheck check_qhmm(const QhmmModel& q);

/// Groups the composite tensors (index x * aux_size + y) by base symbol and
/// computes the stationary memory state. Throws GaugeError when the tensors
/// violate left completeness by more than 1e-9.
QhmmModel reconstruct_qhmm(const Imps& left_canonical, const std::vector<std::string>& base_alphabet,
                           std::size_t aux_size, const EigenOptions& opts = {});
QhmmModel reconstruct_qhmm(const TruncationResult& t, const std::vector<std::string>& base_alphabet,
                           std::size_t aux_size, const EigenOptions& opts = {});

/// Row-stacking vectorisation, vec(rho)[i d + j] = rho(i, j), which satisfies
/// vec(A rho B) = (A kron B^T) vec(rho).
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index dim);
Matrix kron(const Matrix& a, const Matrix& b);

/// Largest deviation of vec(A rho B) from (A kron B^T) vec(rho) over `trials`
/// random square triples.
double vec_identity_error(std::uint64_t seed, std::size_t trials = 10, Eigen::Index dim = 3);

/// G^(x) = sum_y K kron K, init = vec(rho_star), readout = vec(I).
/// Runs the vectorisation self-test first and throws VerificationError if it fails.
LinearGenerator liouville_generators(const QhmmModel& q);

/// Tr(E_{x_L} o ... o E_{x_1}(rho_star)).
double word_probability_q(const QhmmModel& q, std::span<const std::size_t> word);
double word_probability_q(const QhmmModel& q, std::span<const std::string> labels);

/// Sequential measurement starting from rho_star.
Word sample_sequence(const QhmmModel& q, std::size_t length, std::uint64_t seed);

/// Von Neumann entropy of rho_star in bits (eigenvalues below 1e-14 clamped).
double quantum_memory(const QhmmModel& q);

}  // namespace qcomp
