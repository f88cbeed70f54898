#include "qcomp/merge.hpp"

#include <cmath>
#include <limits>

#include "qcomp/errors.hpp"

namespace qcomp {

namespace {

// KL(p || q) in bits with 0 log 0 = 0 and p > 0, q = 0 -> +inf.
double kl_bits(const Hmm& model, std::size_t a, const Vector& mixture_cols) {
  double kl = 0.0;
  const auto n = static_cast<Eigen::Index>(model.num_states());
  for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double p = model.transition(x)(r, static_cast<Eigen::Index>(a));
      if (p <= 0.0) continue;
      const double q = mixture_cols(static_cast<Eigen::Index>(x) * n + r);
      if (q <= 0.0) return std::numeric_limits<double>::infinity();
      kl += p * std::log2(p / q);
    }
  }
  return kl;
}

Vector mixture(const Hmm& model, const Vector& pi, std::size_t a, std::size_t b) {
  const auto n = static_cast<Eigen::Index>(model.num_states());
  const double wa = pi(static_cast<Eigen::Index>(a));
  const double wb = pi(static_cast<Eigen::Index>(b));
  Vector m(static_cast<Eigen::Index>(model.alphabet_size()) * n);
  for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
    const Matrix& t = model.transition(x);
    m.segment(static_cast<Eigen::Index>(x) * n, n) =
        (wa * t.col(static_cast<Eigen::Index>(a)) + wb * t.col(static_cast<Eigen::Index>(b))) / (wa + wb);
  }
  return m;
}

}  // namespace

double merge_objective(const Hmm& model, const Vector& pi, std::size_t a, std::size_t b) {
  const Vector m = mixture(model, pi, a, b);
  const double ka = kl_bits(model, a, m);
  const double kb = kl_bits(model, b, m);
  return pi(static_cast<Eigen::Index>(a)) * ka + pi(static_cast<Eigen::Index>(b)) * kb;
}

Hmm merge_states(const Hmm& model, const Vector& pi, std::size_t a, std::size_t b) {
  if (a >= b || b >= model.num_states()) throw InputError("merge_states needs a < b < num_states");
  const auto n = static_cast<Eigen::Index>(model.num_states());
  const Vector m = mixture(model, pi, a, b);

  // Map old index -> new index; b disappears into a.
  std::vector<Eigen::Index> target(static_cast<std::size_t>(n));
  for (Eigen::Index s = 0, k = 0; s < n; ++s) {
    if (s == static_cast<Eigen::Index>(b)) {
      target[static_cast<std::size_t>(s)] = static_cast<Eigen::Index>(a);
    } else {
      target[static_cast<std::size_t>(s)] = k++;
    }
  }
  std::vector<Matrix> merged;
  for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
    Matrix t = model.transition(x);
    t.col(static_cast<Eigen::Index>(a)) = m.segment(static_cast<Eigen::Index>(x) * n, n);
    Matrix out = Matrix::Zero(n - 1, n - 1);
    for (Eigen::Index s = 0; s < n; ++s) {
      if (s == static_cast<Eigen::Index>(b)) continue;
      for (Eigen::Index r = 0; r < n; ++r) {
        out(target[static_cast<std::size_t>(r)], target[static_cast<std::size_t>(s)]) += t(r, s);
      }
    }
    merged.push_back(std::move(out));
  }
  // Re-normalise columns to absorb rounding from the mixture.
  for (Eigen::Index s = 0; s < n - 1; ++s) {
    double total = 0.0;
    for (const auto& t : merged) total += t.col(s).sum();
    for (auto& t : merged) t.col(s) /= total;
  }
  return Hmm(model.alphabet(), std::move(merged));
}

std::vector<MergeStep> greedy_merge_baseline(const Hmm& model, std::size_t target_states) {
  if (target_states < 1 || target_states >= model.num_states())
    throw InputError("merge target must satisfy 1 <= target < num_states");
  std::vector<MergeStep> steps;
  Hmm current = model;
  while (current.num_states() > target_states) {
    const Vector pi = stationary_distribution(current);
    const std::size_t n = current.num_states();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0;
    std::size_t best_b = 1;
    bool found = false;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double obj = merge_objective(current, pi, a, b);
        if (obj < best) {
          best = obj;
          best_a = a;
          best_b = b;
          found = true;
        }
      }
    }
    if (!found) {
      // Every pair has infinite objective: smallest combined stationary weight.
      double weight = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
          const double w = pi(static_cast<Eigen::Index>(a)) + pi(static_cast<Eigen::Index>(b));
          if (w < weight) {
            weight = w;
            best_a = a;
            best_b = b;
          }
        }
      }
    }
    current = merge_states(current, pi, best_a, best_b);
    steps.push_back(MergeStep{current.num_states(), current, best_a, best_b, best});
  }
  return steps;
}

}  // namespace qcomp
