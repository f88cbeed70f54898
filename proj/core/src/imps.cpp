#include "qcomp/imps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qcomp/errors.hpp"
#include "qcomp/hmm.hpp"
#include "qcomp/random.hpp"

namespace qcomp {

std::string to_string(Gauge gauge) {
  switch (gauge) {
    case Gauge::none:
      return "none";
    case Gauge::left:
      return "left";
    case Gauge::right:
      return "right";
    case Gauge::mixed:
      return "mixed";
  }
  return "none";
}

Gauge parse_gauge(const std::string& text) {
  if (text == "none") return Gauge::none;
  if (text == "left") return Gauge::left;
  if (text == "right") return Gauge::right;
  if (text == "mixed") return Gauge::mixed;
  throw InputError("unknown gauge '" + text + "'");
}

std::size_t Imps::symbol_index(const std::string& label) const {
  const auto it = std::find(alphabet.begin(), alphabet.end(), label);
  if (it == alphabet.end()) throw InputError("symbol '" + label + "' is not in the iMPS alphabet");
  return static_cast<std::size_t>(it - alphabet.begin());
}

TransferMap::TransferMap(const std::vector<Matrix>& top, const std::vector<Matrix>& bottom) {
  if (top.empty() || top.size() != bottom.size())
    throw InputError("transfer map needs the same nonzero number of top and bottom tensors");
  rows_ = top.front().rows();
  cols_ = bottom.front().rows();
  for (const auto& a : top)
    if (a.rows() != rows_ || a.cols() != rows_) throw InputError("top tensors must be square and equally sized");
  for (const auto& b : bottom)
    if (b.rows() != cols_ || b.cols() != cols_) throw InputError("bottom tensors must be square and equally sized");

  const auto m = static_cast<Eigen::Index>(top.size());
  std::size_t nonzeros = 0;
  for (const auto& a : top) nonzeros += static_cast<std::size_t>((a.array() != 0.0).count());
  sparse_ = static_cast<double>(nonzeros) <= 0.25 * static_cast<double>(top.size() * rows_ * rows_);
  if (sparse_) {
    for (const auto& a : top) {
      top_sparse_.push_back(a.sparseView(0.0, 0.0));
      top_sparse_t_.push_back(a.transpose().sparseView(0.0, 0.0));
    }
  } else {
    top_dense_ = top;
  }
  bottom_stack_.resize(m * cols_, cols_);
  bottom_stack_t_.resize(m * cols_, cols_);
  for (Eigen::Index a = 0; a < m; ++a) {
    bottom_stack_.middleRows(a * cols_, cols_) = bottom[static_cast<std::size_t>(a)];
    bottom_stack_t_.middleRows(a * cols_, cols_) = bottom[static_cast<std::size_t>(a)].transpose();
  }
}

Matrix TransferMap::apply_right(const Matrix& x) const {
  const auto m = static_cast<Eigen::Index>(sparse_ ? top_sparse_.size() : top_dense_.size());
  Matrix wide(rows_, m * cols_);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (sparse_)
      wide.middleCols(a * cols_, cols_).noalias() = top_sparse_[i] * x;
    else
      wide.middleCols(a * cols_, cols_).noalias() = top_dense_[i] * x;
  }
  return wide * bottom_stack_t_;
}

Matrix TransferMap::apply_left(const Matrix& y) const {
  const auto m = static_cast<Eigen::Index>(sparse_ ? top_sparse_.size() : top_dense_.size());
  Matrix wide(rows_, m * cols_);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto i = static_cast<std::size_t>(a);
    if (sparse_)
      wide.middleCols(a * cols_, cols_).noalias() = top_sparse_t_[i] * y;
    else
      wide.middleCols(a * cols_, cols_).noalias() = top_dense_[i].transpose() * y;
  }
  return wide * bottom_stack_;
}

Imps qsample_tensors(const DilatedHmm& dilated) {
  Imps out;
  out.alphabet = dilated.composite_alphabet();
  for (std::size_t c = 0; c < dilated.composite.size(); ++c) {
    const Matrix& t = dilated.composite[c];
    for (Eigen::Index s = 0; s < t.cols(); ++s) {
      if ((t.col(s).array() > 0.0).count() > 1)
        throw PreconditionError("dilated HMM is not deterministic: state " + std::to_string(s) +
                                " has several successors under '" + out.alphabet[c] + "'");
    }
    out.tensors.push_back(t.cwiseSqrt());
  }
  return out;
}

namespace {

constexpr double kGapThreshold = 1e-8;
constexpr double kSchmidtFloor = 1e-14;
constexpr Eigen::Index kDenseGapLimit = 8;
// Fixed-point eigenvalues below this fraction of the largest span no state.
constexpr double kRankThreshold = 1e-10;

void check_tensors(const Imps& m) {
  if (m.tensors.empty()) throw InputError("iMPS has no site tensors");
  const auto d = m.tensors.front().rows();
  if (d == 0) throw InputError("iMPS bond dimension is zero");
  for (const auto& a : m.tensors)
    if (a.rows() != d || a.cols() != d) throw InputError("iMPS site tensors must be square and equally sized");
  if (!m.alphabet.empty() && m.alphabet.size() != m.tensors.size())
    throw InputError("iMPS alphabet size does not match the number of site tensors");
}

bool nearly_diagonal(const Matrix& m) {
  const double scale = m.diagonal().cwiseAbs().maxCoeff();
  Matrix off = m;
  off.diagonal().setZero();
  return off.cwiseAbs().maxCoeff() <= 1e-13 * scale;
}

// Orthogonal basis diagonalising a symmetric PSD matrix, eigenvalues
// non-increasing. Diagonal input keeps the coordinate basis, ties in index order.
Matrix spectral_basis(const Matrix& rho) {
  const Eigen::Index d = rho.rows();
  if (nearly_diagonal(rho)) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return rho(a, a) > rho(b, b); });
    Matrix u = Matrix::Zero(d, d);
    for (Eigen::Index j = 0; j < d; ++j) u(order[static_cast<std::size_t>(j)], j) = 1.0;
    return u;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  Matrix u = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index pivot = 0;
    u.col(j).cwiseAbs().maxCoeff(&pivot);
    if (u(pivot, j) < 0.0) u.col(j) = -u.col(j);
  }
  return u;
}

// V = w^T w with w of full row rank r (the numerical rank of V), plus a right
// inverse: w * pinv = I. Diagonal input keeps the coordinate basis.
struct GramFactor {
  Matrix w;
  Matrix pinv;
};

GramFactor gram_factor(const Matrix& v, const char* what) {
  const Eigen::Index d = v.rows();
  GramFactor f;
  if (nearly_diagonal(v)) {
    const Vector diag = v.diagonal();
    const double cut = kRankThreshold * diag.maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < d; ++i)
      if (diag(i) > cut) keep.push_back(i);
    const auto r = static_cast<Eigen::Index>(keep.size());
    f.w = Matrix::Zero(r, d);
    f.pinv = Matrix::Zero(d, r);
    for (Eigen::Index k = 0; k < r; ++k) {
      const double root = std::sqrt(diag(keep[static_cast<std::size_t>(k)]));
      f.w(k, keep[static_cast<std::size_t>(k)]) = root;
      f.pinv(keep[static_cast<std::size_t>(k)], k) = 1.0 / root;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    const Vector ev = es.eigenvalues().reverse();
    const Matrix u = es.eigenvectors().rowwise().reverse();
    const double cut = kRankThreshold * ev.maxCoeff();
    Eigen::Index r = 0;
    while (r < d && ev(r) > cut) ++r;
    const Vector root = ev.head(r).cwiseSqrt();
    f.w = root.asDiagonal() * u.leftCols(r).transpose();
    f.pinv = u.leftCols(r) * root.cwiseInverse().asDiagonal();
  }
  if (f.w.rows() == 0) throw GaugeError(std::string(what) + " transfer fixed point vanishes");
  return f;
}

Matrix fix_sign(Matrix v) {
  v = 0.5 * (v + v.transpose()).eval();
  if (v.trace() < 0.0) v = -v;
  return v;
}

double second_modulus_dense(const TransferMap& map, Eigen::Index d) {
  const Eigen::Index n = d * d;
  Matrix e(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Matrix unit = Matrix::Zero(d, d);
    unit(j % d, j / d) = 1.0;
    const Matrix col = map.apply_right(unit);
    e.col(j) = Eigen::Map<const Vector>(col.data(), n);
  }
  Eigen::EigenSolver<Matrix> es(e, false);
  std::vector<double> mods;
  for (Eigen::Index i = 0; i < n; ++i) mods.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mods.begin(), mods.end(), std::greater<>());
  return mods.size() > 1 ? mods[1] : 0.0;
}

// Dominant modulus of the transfer map with the leading eigenpair deflated.
double second_modulus_deflated(const TransferMap& map, double eta, const Matrix& left, const Matrix& right,
                               const EigenOptions& opts) {
  const Eigen::Index d = right.rows();
  Rng rng(0x5eedULL);
  Matrix start(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) start(i, j) = standard_normal(rng);
  auto deflated = [&](const Matrix& x) -> Matrix {
    return map.apply_right(x) - eta * (left.array() * x.array()).sum() * right;
  };
  EigenOptions o = opts;
  o.method = EigenMethod::krylov;
  o.tolerance = 1e-8;
  o.max_iterations = 5000;
  try {
    const auto pair = leading_eigenpair(deflated, start, o);
    return std::abs(pair.value);
  } catch (const SolverError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

Imps rotated(const Imps& m, const std::vector<Matrix>& tensors, Gauge gauge, const Vector& schmidt) {
  Imps out;
  out.alphabet = m.alphabet;
  out.tensors = tensors;
  out.gauge = gauge;
  out.schmidt = schmidt;
  return out;
}

void require_gap(const TransferEig& te) {
  if (!std::isnan(te.gap) && te.gap <= kGapThreshold) throw DegeneracyError(std::abs(te.eta), te.second_modulus);
}

}  // namespace

TransferEig transfer_eig(const Imps& m, const EigenOptions& opts) {
  check_tensors(m);
  const Eigen::Index d = m.tensors.front().rows();
  const TransferMap map(m.tensors, m.tensors);
  const Matrix start = Matrix::Identity(d, d) / static_cast<double>(d);

  const auto right = leading_eigenpair([&](const Matrix& x) { return map.apply_right(x); }, start, opts);
  if (right.nonreal) throw DegeneracyError(right.value, right.value);
  const auto left = leading_eigenpair([&](const Matrix& y) { return map.apply_left(y); }, start, opts);
  if (left.nonreal) throw DegeneracyError(left.value, left.value);
  if (right.value <= 0.0) throw SolverError("transfer eigenvalue is not positive", right.iterations, right.residual);

  TransferEig out;
  out.eta = right.value;
  out.right = fix_sign(right.vector);
  out.right /= out.right.trace();
  out.left = fix_sign(left.vector);
  const double overlap = (out.left.array() * out.right.array()).sum();
  if (!(overlap > 0.0)) throw GaugeError("left and right transfer fixed points are orthogonal");
  out.left /= overlap;
  out.iterations = right.iterations + left.iterations;

  out.second_modulus = d <= kDenseGapLimit ? second_modulus_dense(map, d)
                                            : second_modulus_deflated(map, out.eta, out.left, out.right, opts);
  out.gap = (out.eta - out.second_modulus) / out.eta;
  return out;
}

double block_probability(const Imps& m, const TransferEig& eig, std::span<const std::size_t> word) {
  check_tensors(m);
  const Eigen::Index d = m.tensors.front().rows();
  Matrix prod = Matrix::Identity(d, d);
  for (std::size_t w : word) {
    if (w >= m.tensors.size()) throw InputError("symbol index " + std::to_string(w) + " is out of range");
    prod = (m.tensors[w] * prod).eval();
  }
  const double value = (eig.left * prod * eig.right * prod.transpose()).trace();
  return value / std::pow(eig.eta, static_cast<double>(word.size()));
}

namespace {

// Left gauge on the support of V_l: A_L = w A w^+ / sqrt(eta). The kernel of
// V_l is invariant under every A^a, so w A = A_L w holds exactly.
Imps left_from(const Imps& m, const TransferEig& te) {
  const double scale = 1.0 / std::sqrt(te.eta);
  const GramFactor f = gram_factor(te.left, "left");
  const Matrix rho = f.w * te.right * f.w.transpose();
  const Matrix u = spectral_basis(rho);
  std::vector<Matrix> tensors;
  for (const auto& a : m.tensors) tensors.push_back(scale * u.transpose() * f.w * a * f.pinv * u);
  return rotated(m, tensors, Gauge::left, normalise_spectrum((u.transpose() * rho * u).diagonal()));
}

}  // namespace

CanonicalForm canonical_form(const Imps& m, const EigenOptions& opts) {
  const TransferEig te = transfer_eig(m, opts);
  require_gap(te);
  const double scale = 1.0 / std::sqrt(te.eta);

  CanonicalForm out;
  out.left = left_from(m, te);

  // Right gauge on the support of V_r = X X^T with X = w^T.
  const GramFactor f = gram_factor(te.right, "right");
  const Matrix x = f.w.transpose();
  const Matrix xinv = f.pinv.transpose();
  const Matrix sigma = x.transpose() * te.left * x;
  const Matrix v = spectral_basis(sigma);
  std::vector<Matrix> right_tensors;
  for (const auto& a : m.tensors) right_tensors.push_back(scale * v.transpose() * xinv * a * x * v);
  out.right = rotated(m, right_tensors, Gauge::right, normalise_spectrum((v.transpose() * sigma * v).diagonal()));

  Vector full = Vector::Zero(static_cast<Eigen::Index>(m.bond_dim()));
  full.head(out.left.schmidt->size()) = *out.left.schmidt;
  out.schmidt = normalise_spectrum(full);
  return out;
}

Imps left_canonical(const Imps& m, const EigenOptions& opts) {
  const TransferEig te = transfer_eig(m, opts);
  require_gap(te);
  return left_from(m, te);
}

double left_completeness_error(const Imps& m) {
  check_tensors(m);
  const Eigen::Index d = m.tensors.front().rows();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& a : m.tensors) sum.noalias() += a.transpose() * a;
  return (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

double right_completeness_error(const Imps& m) {
  check_tensors(m);
  const Eigen::Index d = m.tensors.front().rows();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& a : m.tensors) sum.noalias() += a * a.transpose();
  return (sum - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

Vector normalise_spectrum(Vector lambda) {
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) < kSchmidtFloor) lambda(i) = 0.0;
  const double total = lambda.sum();
  if (total > 0.0) lambda /= total;
  std::stable_sort(lambda.begin(), lambda.end(), std::greater<>());
  return lambda;
}

double tail_weight(const Vector& lambda, std::size_t kept) {
  const auto n = static_cast<std::size_t>(lambda.size());
  if (kept >= n) return 0.0;
  return lambda.tail(static_cast<Eigen::Index>(n - kept)).sum();
}

std::size_t slice_rank(const Imps& m) {
  check_tensors(m);
  const Eigen::Index d = m.tensors.front().rows();
  std::vector<const Matrix*> nonzero;
  for (const auto& a : m.tensors)
    if (!a.isZero(0.0)) nonzero.push_back(&a);
  if (nonzero.empty()) return 0;
  Matrix wide(d, d * static_cast<Eigen::Index>(nonzero.size()));
  for (std::size_t i = 0; i < nonzero.size(); ++i) wide.middleCols(static_cast<Eigen::Index>(i) * d, d) = *nonzero[i];
  Eigen::BDCSVD<Matrix> svd(wide.transpose());
  const Vector sigma = svd.singularValues();
  const double threshold = 1e-10 * sigma.maxCoeff();
  return static_cast<std::size_t>((sigma.array() > threshold).count());
}

SpectrumDiagnostics spectrum_diagnostics(const Vector& lambda, std::size_t kept, const Imps& m) {
  SpectrumDiagnostics out;
  out.tail = tail_weight(lambda, kept);
  out.entropy = shannon_entropy_bits(lambda);
  out.slice_rank = slice_rank(m);
  return out;
}

}  // namespace qcomp
