#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "qcomp/dilation.hpp"
#include "qcomp/eigensolver.hpp"
#include "qcomp/types.hpp"

namespace qcomp {

enum class Gauge { none, left, right, mixed };

std::string to_string(Gauge gauge);
Gauge parse_gauge(const std::string& text);

/// Uniform (translation-invariant) MPS: one real bond_dim x bond_dim matrix
/// per physical symbol, using the same row = next-state orientation as the
/// HMM transition matrices.
///
/// Left gauge:  sum_a A^a^T A^a = I  (the tensors are Kraus operators of a
///              trace-preserving channel rho -> sum_a A^a rho A^a^T).
/// Right gauge: sum_a A^a A^a^T = I.
struct Imps {
  std::vector<std::string> alphabet;
  std::vector<Matrix> tensors;
  Gauge gauge = Gauge::none;
  std::optional<Vector> schmidt;

  std::size_t bond_dim() const { return tensors.empty() ? 0 : static_cast<std::size_t>(tensors.front().rows()); }
  std::size_t phys_dim() const noexcept { return tensors.size(); }
  std::size_t symbol_index(const std::string& label) const;
};

/// Mixed transfer map sum_a A^a (x) B^a acting on d_A x d_B matrices.
/// Sparse site tensors (as produced from deterministic HMMs) are stored sparse.
class TransferMap {
 public:
  TransferMap(const std::vector<Matrix>& top, const std::vector<Matrix>& bottom);

  /// X -> sum_a A^a X B^a^T
  Matrix apply_right(const Matrix& x) const;
  /// Y -> sum_a A^a^T Y B^a
  Matrix apply_left(const Matrix& y) const;

  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  bool sparse_ = false;
  std::vector<Matrix> top_dense_;
  std::vector<Eigen::SparseMatrix<double>> top_sparse_;
  std::vector<Eigen::SparseMatrix<double>> top_sparse_t_;
  Matrix bottom_stack_;    // [B^1; B^2; ...]
  Matrix bottom_stack_t_;  // [B^1^T; B^2^T; ...]
};

/// Element-wise square roots of a deterministic dilated HMM.
/// Throws PreconditionError when some (s, (x, y)) has more than one successor.
Imps qsample_tensors(const DilatedHmm& dilated);

struct TransferEig {
  double eta = 0.0;
  /// Fixed point of Y -> sum A^T Y A.
  Matrix left;
  /// Fixed point of X -> sum A X A^T (the stationary bond state up to gauge).
  Matrix right;
  /// (|eta0| - |eta1|) / |eta0|; NaN when the second modulus could not be estimated.
  double gap = 0.0;
  double second_modulus = 0.0;
  std::size_t iterations = 0;
};

/// Leading eigenvalue and eigenmatrices of the transfer operator, symmetrised
/// and jointly normalised so that Tr(right) = 1 and Tr(left right) = 1.
TransferEig transfer_eig(const Imps& m, const EigenOptions& opts = {});

/// Double-layer block probability of a word (time order):
///   Tr(V_l M V_r M^T) / eta^L,  M = A^{w_L} ... A^{w_1}.
double block_probability(const Imps& m, const TransferEig& eig, std::span<const std::size_t> word);

struct CanonicalForm {
  Imps left;
  Imps right;
  Vector schmidt;
};

/// Left- and right-canonical forms with the bond basis rotated so that the
/// Schmidt spectrum is diagonal and non-increasing. A rank-deficient fixed
/// point means some bond directions carry no state; the gauged tensors then
/// live on its support and have a smaller bond dimension. `schmidt` is padded
/// with zeros to the input bond dimension. Throws DegeneracyError when the
/// transfer gap is below 1e-8.
CanonicalForm canonical_form(const Imps& m, const EigenOptions& opts = {});

/// Left-canonical part of canonical_form.
Imps left_canonical(const Imps& m, const EigenOptions& opts = {});

double left_completeness_error(const Imps& m);
double right_completeness_error(const Imps& m);

/// Clamps entries below 1e-14 to zero, renormalises and sorts non-increasing.
Vector normalise_spectrum(Vector lambda);

double tail_weight(const Vector& lambda, std::size_t kept);
/// Numerical rank (threshold 1e-10 sigma_max) of the horizontal concatenation
/// of all nonzero site tensors.
std::size_t slice_rank(const Imps& m);

struct SpectrumDiagnostics {
  double tail = 0.0;
  double entropy = 0.0;
  std::size_t slice_rank = 0;
};

SpectrumDiagnostics spectrum_diagnostics(const Vector& lambda, std::size_t kept, const Imps& m);

}  // namespace qcomp
