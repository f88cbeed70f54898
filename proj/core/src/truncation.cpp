#include "qcomp/truncation.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qcomp/errors.hpp"
#include "qcomp/random.hpp"

namespace qcomp {

void TruncationOptions::validate(std::size_t bond_dim) const {
  if (target_dim < 1) throw InputError("target bond dimension must be at least 1");
  if (target_dim > bond_dim)
    throw InputError("target bond dimension " + std::to_string(target_dim) + " exceeds the bond dimension " +
                     std::to_string(bond_dim));
  if (!(tolerance > 0.0)) throw InputError("truncation tolerance must be positive");
  if (max_sweeps < 1) throw InputError("max_sweeps must be at least 1");
  if (restarts < 1) throw InputError("restarts must be at least 1");
}

Matrix polar_isometry(const Matrix& tall) {
  Eigen::JacobiSVD<Matrix> svd(tall, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

using Clock = std::chrono::steady_clock;

Matrix stack(const std::vector<Matrix>& tensors) {
  const Eigen::Index d = tensors.front().rows();
  Matrix out(d * static_cast<Eigen::Index>(tensors.size()), d);
  for (std::size_t a = 0; a < tensors.size(); ++a) out.middleRows(static_cast<Eigen::Index>(a) * d, d) = tensors[a];
  return out;
}

std::vector<Matrix> unstack(const Matrix& s, std::size_t count) {
  const Eigen::Index d = s.cols();
  std::vector<Matrix> out;
  for (std::size_t a = 0; a < count; ++a) out.push_back(s.middleRows(static_cast<Eigen::Index>(a) * d, d));
  return out;
}

Matrix gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = standard_normal(rng);
  return out;
}

std::vector<Matrix> schmidt_projection(const Imps& left, Eigen::Index dt) {
  std::vector<Matrix> out;
  for (const auto& a : left.tensors) out.push_back(a.topLeftCorner(dt, dt));
  return unstack(polar_isometry(stack(out)), out.size());
}

std::vector<Matrix> random_isometry(std::size_t count, Eigen::Index dt, std::uint64_t seed) {
  Rng rng(seed);
  return unstack(polar_isometry(gaussian(rng, static_cast<Eigen::Index>(count) * dt, dt)), count);
}

std::vector<Matrix> embed(const Imps& warm, Eigen::Index dt) {
  const auto d0 = static_cast<Eigen::Index>(warm.bond_dim());
  std::vector<Matrix> out;
  std::size_t heaviest = 0;
  double weight = -1.0;
  for (std::size_t a = 0; a < warm.tensors.size(); ++a) {
    Matrix b = Matrix::Zero(dt, dt);
    b.topLeftCorner(d0, d0) = warm.tensors[a];
    out.push_back(std::move(b));
    const double w = warm.tensors[a].squaredNorm();
    if (w > weight) {
      weight = w;
      heaviest = a;
    }
  }
  // The new modes get a trivial isometric block so completeness still holds.
  for (Eigen::Index j = d0; j < dt; ++j) out[heaviest](j, j) = 1.0;
  return out;
}

struct RunResult {
  std::vector<Matrix> tensors;
  double fidelity = 0.0;
  double initial = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
  bool nonreal = false;
};

// Monotone ascent of |eta_mix| over left isometries. The derivative of the
// dominant eigenvalue with respect to B^a is L^T A^a R / Tr(L^T R); each sweep
// tries the polar factor of that gradient (the maximiser of the linearisation)
// and backs off towards the current point until the fidelity improves.
RunResult polish(const Imps& left, std::vector<Matrix> b, const TruncationOptions& opts, std::uint64_t start_seed) {
  const Eigen::Index d = static_cast<Eigen::Index>(left.bond_dim());
  const Eigen::Index dt = b.front().rows();
  const std::size_t count = b.size();
  Rng rng(start_seed);
  Matrix right_vec = gaussian(rng, d, dt);
  Matrix left_vec = gaussian(rng, d, dt);

  auto solve_right = [&](const std::vector<Matrix>& cand, const Matrix& start) {
    const TransferMap map(left.tensors, cand);
    return leading_eigenpair([&](const Matrix& x) { return map.apply_right(x); }, start, opts.eigen);
  };

  RunResult out;
  auto r = solve_right(b, right_vec);
  right_vec = r.vector;
  out.tensors = b;
  out.fidelity = std::abs(r.value);
  out.initial = out.fidelity;
  out.nonreal = r.nonreal;

  constexpr int kBacktracks = 12;
  for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    out.sweeps = sweep;
    const TransferMap map(left.tensors, b);
    const auto l = leading_eigenpair([&](const Matrix& y) { return map.apply_left(y); }, left_vec, opts.eigen);
    left_vec = l.vector;
    if ((left_vec.array() * right_vec.array()).sum() < 0.0) left_vec = -left_vec;
    const double sign = r.value < 0.0 ? -1.0 : 1.0;
    Matrix grad(static_cast<Eigen::Index>(count) * dt, dt);
    for (std::size_t a = 0; a < count; ++a)
      grad.middleRows(static_cast<Eigen::Index>(a) * dt, dt).noalias() =
          sign * left_vec.transpose() * left.tensors[a] * right_vec;
    const double gnorm = grad.norm();
    if (gnorm == 0.0) {
      out.converged = true;
      break;
    }
    const Matrix current = stack(b);
    double tau = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k <= kBacktracks && !accepted; ++k) {
      const Matrix trial_stack =
          std::isinf(tau) ? polar_isometry(grad) : polar_isometry(current + (tau / gnorm) * grad);
      std::vector<Matrix> trial = unstack(trial_stack, count);
      auto tr = solve_right(trial, right_vec);
      const double f = std::abs(tr.value);
      if (f > out.fidelity) {
        const double gain = f - out.fidelity;
        b = std::move(trial);
        r = std::move(tr);
        right_vec = r.vector;
        out.tensors = b;
        out.fidelity = f;
        out.nonreal = r.nonreal || l.nonreal;
        accepted = true;
        if (gain < opts.tolerance) out.converged = true;
      }
      tau = std::isinf(tau) ? 1.0 : tau / 4.0;
    }
    if (!accepted || out.converged) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Rotate a left-isometric candidate into its Schmidt basis.
Imps finalise(const Imps& source, const std::vector<Matrix>& tensors, const EigenOptions& eig, std::string& warning) {
  Imps candidate;
  candidate.alphabet = source.alphabet;
  candidate.tensors = tensors;
  try {
    return left_canonical(candidate, eig);
  } catch (const Error& e) {
    warning += std::string(warning.empty() ? "" : "; ") + "truncated iMPS is not normal: " + e.what();
  }
  const Eigen::Index dt = tensors.front().rows();
  const TransferMap map(tensors, tensors);
  const auto rho = leading_eigenpair([&](const Matrix& x) { return map.apply_right(x); },
                                     Matrix::Identity(dt, dt) / static_cast<double>(dt), eig);
  Matrix state = 0.5 * (rho.vector + rho.vector.transpose());
  state /= state.trace();
  Eigen::SelfAdjointEigenSolver<Matrix> es(state);
  const Matrix u = es.eigenvectors().rowwise().reverse();
  for (auto& t : candidate.tensors) t = (u.transpose() * t * u).eval();
  candidate.gauge = Gauge::left;
  candidate.schmidt = normalise_spectrum(es.eigenvalues());
  return candidate;
}

}  // namespace

TruncationResult variational_truncate(const Imps& m, const TruncationOptions& opts) {
  const auto started = Clock::now();
  opts.validate(m.bond_dim());
  const Imps left = left_canonical(m, opts.eigen);
  const auto dt = static_cast<Eigen::Index>(opts.target_dim);

  TruncationResult result;
  // The canonical form may already be smaller than the target (redundant bond
  // directions); nothing is then discarded.
  if (opts.target_dim >= left.bond_dim()) {
    result.truncated = left;
    result.fidelity = 1.0;
    result.initial_fidelity = 1.0;
    result.converged = true;
    result.restart_fidelities = {1.0};
    result.wall_time_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return result;
  }

  std::vector<std::vector<Matrix>> starts;
  for (std::size_t run = 0; run < opts.restarts; ++run) {
    if (run == 0 && opts.init == TruncationInit::schmidt_projection)
      starts.push_back(schmidt_projection(left, dt));
    else
      starts.push_back(random_isometry(left.phys_dim(), dt, split_seed(opts.seed, "restart-" + std::to_string(run))));
  }
  if (opts.warm_start) {
    const Imps& w = *opts.warm_start;
    if (w.phys_dim() != left.phys_dim() || w.bond_dim() > opts.target_dim)
      throw InputError("warm start does not fit the target bond dimension");
    if (left_completeness_error(w) > 1e-9) throw GaugeError("warm start is not left-canonical");
    starts.push_back(embed(w, dt));
  }

  RunResult best;
  best.fidelity = -1.0;
  bool nonreal = false;
  for (std::size_t run = 0; run < starts.size(); ++run) {
    RunResult r = polish(left, starts[run], opts, split_seed(opts.seed, "start-" + std::to_string(run)));
    result.restart_fidelities.push_back(r.fidelity);
    if (run == 0) result.initial_fidelity = r.initial;
    if (r.fidelity > best.fidelity) {
      best = std::move(r);
      result.best_restart = run;
      nonreal = best.nonreal;
    }
  }

  result.fidelity = std::min(best.fidelity, 1.0);
  result.sweeps = best.sweeps;
  result.converged = best.converged;
  if (!best.converged)
    result.warning = "fidelity did not settle within " + std::to_string(opts.max_sweeps) + " sweeps";
  if (nonreal)
    result.warning += std::string(result.warning.empty() ? "" : "; ") + "mixed transfer eigenvalue looked non-real";
  result.truncated = finalise(m, best.tensors, opts.eigen, result.warning);
  result.fidelity_rate = result.fidelity > 0.0 ? -std::log2(result.fidelity) : std::numeric_limits<double>::infinity();
  result.wall_time_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return result;
}

double fidelity_per_site(const Imps& a, const Imps& b, const EigenOptions& opts) {
  if (a.alphabet != b.alphabet || a.phys_dim() != b.phys_dim())
    throw InputError("fidelity needs iMPS over the same physical alphabet");
  const auto da = static_cast<Eigen::Index>(a.bond_dim());
  const auto db = static_cast<Eigen::Index>(b.bond_dim());
  Rng rng(0xf1de11ULL);
  const TransferMap mixed(a.tensors, b.tensors);
  const auto mix = leading_eigenpair([&](const Matrix& x) { return mixed.apply_right(x); },
                                     gaussian(rng, da, db), opts);
  const auto self_eta = [&](const Imps& m) {
    const TransferMap map(m.tensors, m.tensors);
    const auto d = static_cast<Eigen::Index>(m.bond_dim());
    return std::abs(leading_eigenpair([&](const Matrix& x) { return map.apply_right(x); },
                                      Matrix::Identity(d, d) / static_cast<double>(d), opts)
                        .value);
  };
  return std::abs(mix.value) / std::sqrt(self_eta(a) * self_eta(b));
}

}  // namespace qcomp
