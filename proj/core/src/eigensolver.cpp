#include "qcomp/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>

#include <Eigen/Eigenvalues>

#include "qcomp/errors.hpp"

namespace qcomp {

namespace {

double frob_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

EigenPair power_iteration(const BondMap& op, const Matrix& start, const EigenOptions& opts) {
  EigenPair out;
  Matrix v = start / start.norm();
  std::deque<double> residuals;
  std::deque<double> growth;
  const std::size_t window = 1000;
  double eta = 0.0;
  double res = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    Matrix w = op(v);
    eta = frob_dot(v, w);
    res = (w - eta * v).norm();
    const double nw = w.norm();
    out.iterations = it;
    if (res <= opts.tolerance * std::abs(eta) || nw == 0.0) {
      out.value = eta;
      out.vector = std::move(v);
      out.residual = res;
      out.converged = true;
      return out;
    }
    residuals.push_back(res);
    growth.push_back(nw);
    if (residuals.size() > window) {
      residuals.pop_front();
      growth.pop_front();
    }
    v = w / nw;
  }
  // Budget exhausted. A residual that refuses to shrink means the iterate is
  // rotating inside a dominant non-real (or +/-) eigenspace.
  if (residuals.size() >= 2 && residuals.back() > 0.5 * residuals.front()) {
    double log_growth = 0.0;
    for (double g : growth) log_growth += std::log(g);
    out.value = std::exp(log_growth / static_cast<double>(growth.size()));
    out.vector = std::move(v);
    out.residual = res;
    out.nonreal = true;
    return out;
  }
  throw SolverError("power iteration did not converge", out.iterations, res);
}

EigenPair arnoldi(const BondMap& op, const Matrix& start, const EigenOptions& opts) {
  using Complex = std::complex<double>;
  const Eigen::Index rows = start.rows();
  const Eigen::Index cols = start.cols();
  const Eigen::Index n = rows * cols;
  const Eigen::Index m = std::min<Eigen::Index>(static_cast<Eigen::Index>(opts.krylov_dim), n);

  auto apply = [&](const Vector& x) -> Vector {
    const Matrix in = Eigen::Map<const Matrix>(x.data(), rows, cols);
    const Matrix result = op(in);
    return Eigen::Map<const Vector>(result.data(), n);
  };

  EigenPair out;
  Vector x = Eigen::Map<const Vector>(start.data(), n);
  x /= x.norm();
  Matrix basis(n, m + 1);
  Matrix hess(m + 1, m);
  std::size_t applications = 0;
  double last_residual = std::numeric_limits<double>::infinity();
  int suspicious = 0;
  int stalled = 0;
  double best_residual = std::numeric_limits<double>::infinity();

  while (applications < opts.max_iterations) {
    // Check the current vector first; warm starts often converge immediately.
    {
      const Vector w = apply(x);
      ++applications;
      const double eta = x.dot(w);
      const double res = (w - eta * x).norm();
      last_residual = res;
      // Stagnation at the rounding floor counts as converged within a small margin.
      stalled = res > 0.5 * best_residual ? stalled + 1 : 0;
      best_residual = std::min(best_residual, res);
      const bool at_floor = stalled >= 5 && res <= 100.0 * opts.tolerance * std::abs(eta);
      if (res <= opts.tolerance * std::abs(eta) || w.norm() == 0.0 || at_floor) {
        out.value = eta;
        out.vector = Eigen::Map<const Matrix>(x.data(), rows, cols);
        out.residual = res;
        out.converged = true;
        out.iterations = applications;
        return out;
      }
      basis.col(0) = x;
      hess.setZero();
      // First column of the Arnoldi relation reuses w.
      Vector v = w;
      Eigen::Index k = m;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j > 0) {
          v = apply(basis.col(j));
          ++applications;
        }
        const double vnorm = v.norm();
        for (int pass = 0; pass < 2; ++pass) {
          for (Eigen::Index i = 0; i <= j; ++i) {
            const double h = basis.col(i).dot(v);
            hess(i, j) += h;
            v -= h * basis.col(i);
          }
        }
        const double beta = v.norm();
        hess(j + 1, j) = beta;
        if (beta <= 1e-14 * std::max(vnorm, 1e-300)) {
          k = j + 1;
          break;
        }
        basis.col(j + 1) = v / beta;
      }

      Eigen::EigenSolver<Matrix> es(hess.topLeftCorner(k, k));
      const auto& theta = es.eigenvalues();
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < k; ++i)
        if (std::abs(theta(i)) > std::abs(theta(best)) * (1.0 + 1e-12)) best = i;
      double second = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        if (i == best) continue;
        // The conjugate partner of a non-real Ritz value counts as the second one.
        second = std::max(second, std::abs(theta(i)));
      }
      out.second_modulus = k > 1 ? second : std::numeric_limits<double>::quiet_NaN();

      Eigen::VectorXcd y = es.eigenvectors().col(best);
      Eigen::Index pivot = 0;
      y.cwiseAbs().maxCoeff(&pivot);
      y *= std::abs(y(pivot)) / y(pivot);
      Vector next = basis.leftCols(k) * y.real();
      const Complex lead = theta(best);
      const bool nonreal = std::abs(lead.imag()) > 1e-8 * std::abs(lead);
      const bool tied = k > 1 && second >= (1.0 - 1e-9) * std::abs(lead);
      suspicious = (nonreal || tied) ? suspicious + 1 : 0;
      if (suspicious >= 3) {
        // A complex dominant pair never yields a real eigenmatrix; report its modulus.
        out.value = std::abs(lead);
        out.vector = Eigen::Map<const Matrix>(next.data(), rows, cols) / next.norm();
        out.nonreal = true;
        out.residual = std::abs(hess(k, k - 1) * y(k - 1));
        out.iterations = applications;
        return out;
      }
      x = next / next.norm();
    }
  }
  throw SolverError("Krylov eigensolver did not converge", applications, last_residual);
}

}  // namespace

EigenPair leading_eigenpair(const BondMap& op, const Matrix& start, const EigenOptions& opts) {
  if (start.size() == 0) throw InputError("eigensolver start matrix is empty");
  if (start.norm() == 0.0) throw InputError("eigensolver start matrix is zero");
  return opts.method == EigenMethod::power ? power_iteration(op, start, opts) : arnoldi(op, start, opts);
}

}  // namespace qcomp
