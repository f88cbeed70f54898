#include "qcomp/dilation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcomp/errors.hpp"
#include "qcomp/random.hpp"

namespace qcomp {

LabellingStrategy LabellingStrategy::parse(const std::string& text) {
  if (text == "sequential") return {LabellingKind::sequential, 0};
  if (text == "probability-ascending") return {LabellingKind::probability_ascending, 0};
  if (text == "probability-descending") return {LabellingKind::probability_descending, 0};
  if (text.rfind("random:", 0) == 0) {
    try {
      std::size_t used = 0;
      const auto seed = std::stoull(text.substr(7), &used);
      if (used == text.size() - 7) return {LabellingKind::random, seed};
    } catch (const std::exception&) {
    }
  }
  throw InputError("unknown labelling strategy '" + text +
                   "' (expected sequential, probability-ascending, probability-descending or random:<seed>)");
}

std::string LabellingStrategy::name() const {
  switch (kind) {
    case LabellingKind::sequential:
      return "sequential";
    case LabellingKind::probability_ascending:
      return "probability-ascending";
    case LabellingKind::probability_descending:
      return "probability-descending";
    case LabellingKind::random:
      return "random:" + std::to_string(seed);
  }
  return "unknown";
}

Labelling::Labelling(std::size_t num_states, std::size_t alphabet_size, std::size_t aux_size)
    : num_states_(num_states),
      alphabet_size_(alphabet_size),
      aux_size_(aux_size),
      labels_(num_states * alphabet_size * num_states, kUnlabelled) {}

bool Labelling::is_injective() const {
  std::vector<bool> used(aux_size_);
  for (std::size_t s = 0; s < num_states_; ++s) {
    for (std::size_t x = 0; x < alphabet_size_; ++x) {
      std::fill(used.begin(), used.end(), false);
      for (std::size_t t = 0; t < num_states_; ++t) {
        const int y = at(s, t, x);
        if (y == kUnlabelled) continue;
        if (y < 0 || static_cast<std::size_t>(y) >= aux_size_ || used[static_cast<std::size_t>(y)]) return false;
        used[static_cast<std::size_t>(y)] = true;
      }
    }
  }
  return true;
}

Labelling make_labelling(const Hmm& model, const LabellingStrategy& strategy) {
  const auto profile = branching_profile(model);
  const std::size_t n = model.num_states();
  Labelling labelling(n, model.alphabet_size(), profile.aux_size);
  Rng rng(strategy.seed);
  std::vector<std::size_t> succ;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
      const Matrix& t = model.transition(x);
      const auto col = static_cast<Eigen::Index>(s);
      succ.clear();
      for (std::size_t r = 0; r < n; ++r)
        if (t(static_cast<Eigen::Index>(r), col) > 0.0) succ.push_back(r);
      // succ is in successor-index order; stable sorts keep that as the tie-break.
      switch (strategy.kind) {
        case LabellingKind::sequential:
          break;
        case LabellingKind::probability_ascending:
          std::stable_sort(succ.begin(), succ.end(), [&](std::size_t a, std::size_t b) {
            return t(static_cast<Eigen::Index>(a), col) < t(static_cast<Eigen::Index>(b), col);
          });
          break;
        case LabellingKind::probability_descending:
          std::stable_sort(succ.begin(), succ.end(), [&](std::size_t a, std::size_t b) {
            return t(static_cast<Eigen::Index>(a), col) > t(static_cast<Eigen::Index>(b), col);
          });
          break;
        case LabellingKind::random:
          for (std::size_t i = succ.size(); i > 1; --i) std::swap(succ[i - 1], succ[uniform_index(rng, i)]);
          break;
      }
      for (std::size_t y = 0; y < succ.size(); ++y) labelling.set(s, succ[y], x, static_cast<int>(y));
    }
  }
  return labelling;
}

std::string composite_label(const std::string& x, std::size_t y) { return x + "|" + std::to_string(y); }

std::vector<std::string> DilatedHmm::composite_alphabet() const {
  std::vector<std::string> out;
  for (const auto& x : base.alphabet())
    for (std::size_t y = 0; y < aux_size(); ++y) out.push_back(composite_label(x, y));
  return out;
}

Hmm DilatedHmm::as_hmm() const { return Hmm(composite_alphabet(), composite); }

LinearGenerator DilatedHmm::generator() const {
  LinearGenerator gen;
  gen.alphabet = composite_alphabet();
  gen.generators = composite;
  Matrix chain = Matrix::Zero(composite.front().rows(), composite.front().cols());
  for (const auto& t : composite) chain += t;
  gen.init = stationary_of(chain);
  gen.readout = Vector::Ones(chain.rows());
  return gen;
}

DilatedHmm dilate(const Hmm& model, const Labelling& labelling) {
  const std::size_t n = model.num_states();
  if (labelling.num_states() != n || labelling.alphabet_size() != model.alphabet_size())
    throw InputError("labelling does not match the model dimensions");
  const auto profile = branching_profile(model);
  if (labelling.aux_size() != profile.aux_size)
    throw InputError("auxiliary alphabet size must equal the maximal branching d_y = " +
                     std::to_string(profile.aux_size));
  if (!labelling.is_injective()) throw InputError("labelling is not injective for some (s, x)");

  const std::size_t dy = labelling.aux_size();
  const auto ni = static_cast<Eigen::Index>(n);
  std::vector<Matrix> composite(model.alphabet_size() * dy, Matrix::Zero(ni, ni));
  for (std::size_t x = 0; x < model.alphabet_size(); ++x) {
    const Matrix& t = model.transition(x);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t r = 0; r < n; ++r) {
        const double v = t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s));
        const int y = labelling.at(s, r, x);
        if (v > 0.0) {
          if (y == Labelling::kUnlabelled)
            throw InputError("labelling misses the supported transition (" + std::to_string(s) + " -> " +
                             std::to_string(r) + ", '" + model.alphabet()[x] + "')");
          composite[x * dy + static_cast<std::size_t>(y)](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = v;
        } else if (y != Labelling::kUnlabelled) {
          throw InputError("labelling assigns a label to an unsupported transition");
        }
      }
    }
  }
  return DilatedHmm{model, labelling, std::move(composite)};
}

namespace {

constexpr double kMarginalTolerance = 1e-12;
constexpr std::size_t kEnumerationBudget = std::size_t{1} << 18;

// X-marginal block distribution of the dilated model, by explicit enumeration
// of composite words when affordable.
void enumerate_marginal(const DilatedHmm& d, const Vector& v, std::size_t depth, std::size_t x_index,
                        std::vector<double>& out) {
  if (depth == 0) {
    out[x_index] += v.sum();
    return;
  }
  const std::size_t nx = d.base.alphabet_size();
  for (std::size_t c = 0; c < d.composite.size(); ++c) {
    Vector next = d.composite[c] * v;
    if (next.isZero(0.0)) continue;
    enumerate_marginal(d, next, depth - 1, x_index * nx + d.base_symbol(c), out);
  }
}

}  // namespace

DilationReport verify_dilation(const DilatedHmm& d, std::size_t max_word_len) {
  if (max_word_len > 6) throw InputError("verify_dilation supports word lengths up to 6");
  DilationReport report;
  const std::size_t n = d.base.num_states();
  const std::size_t nx = d.base.alphabet_size();
  const std::size_t dy = d.aux_size();
  if (d.composite.size() != nx * dy) return report;

  // (i) determinism.
  report.deterministic = true;
  for (const auto& t : d.composite) {
    for (std::size_t s = 0; s < n && report.deterministic; ++s) {
      std::size_t k = 0;
      for (std::size_t r = 0; r < n; ++r) k += t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) > 0.0;
      if (k > 1) report.deterministic = false;
    }
  }

  // (iii) ergodicity: the summed chain must be bit-identical to the original.
  const Matrix original_chain = d.base.state_chain();
  Matrix summed = Matrix::Zero(original_chain.rows(), original_chain.cols());
  for (std::size_t x = 0; x < nx; ++x) {
    Matrix sx = Matrix::Zero(original_chain.rows(), original_chain.cols());
    for (std::size_t y = 0; y < dy; ++y) sx += d.composite[x * dy + y];
    summed += sx;
  }
  report.ergodic = (summed.array() == original_chain.array()).all() && is_ergodic(summed);

  // (ii) marginal preservation.
  try {
    const LinearGenerator original = LinearGenerator::from_hmm(d.base);
    Matrix chain = Matrix::Zero(original_chain.rows(), original_chain.cols());
    for (const auto& t : d.composite) chain += t;
    const Vector pi = stationary_of(chain);

    LinearGenerator marginal;
    marginal.alphabet = d.base.alphabet();
    marginal.init = pi;
    marginal.readout = Vector::Ones(pi.size());
    for (std::size_t x = 0; x < nx; ++x) {
      Matrix sx = Matrix::Zero(chain.rows(), chain.cols());
      for (std::size_t y = 0; y < dy; ++y) sx += d.composite[x * dy + y];
      marginal.generators.push_back(std::move(sx));
    }

    double worst = 0.0;
    std::size_t composite_words = 1;
    for (std::size_t len = 1; len <= max_word_len; ++len) {
      composite_words *= nx * dy;
      const auto expected = block_distribution(original, len);
      std::vector<double> got;
      if (composite_words <= kEnumerationBudget) {
        got.assign(expected.size(), 0.0);
        enumerate_marginal(d, pi, len, 0, got);
      } else {
        got = block_distribution(marginal, len);
      }
      for (std::size_t i = 0; i < expected.size(); ++i) worst = std::max(worst, std::abs(expected[i] - got[i]));
    }
    report.max_marginal_error = worst;
    report.marginals_preserved = worst <= kMarginalTolerance;
  } catch (const Error&) {
    report.marginals_preserved = false;
  }
  return report;
}

}  // namespace qcomp
