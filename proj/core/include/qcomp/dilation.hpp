#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcomp/hmm.hpp"
#include "qcomp/linear_generator.hpp"

namespace qcomp {

enum class LabellingKind { sequential, probability_ascending, probability_descending, random };

struct LabellingStrategy {
  LabellingKind kind = LabellingKind::sequential;
  std::uint64_t seed = 0;  // only used by `random`

  /// "sequential", "probability-ascending", "probability-descending", "random:<seed>".
  static LabellingStrategy parse(const std::string& text);
  std::string name() const;
};

/// Partial map f(s, s', x) -> y, defined exactly on supported transitions.
class Labelling {
 public:
  static constexpr int kUnlabelled = -1;

  Labelling(std::size_t num_states, std::size_t alphabet_size, std::size_t aux_size);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  std::size_t aux_size() const noexcept { return aux_size_; }

  int at(std::size_t s, std::size_t s_next, std::size_t x) const { return labels_[index(s, s_next, x)]; }
  void set(std::size_t s, std::size_t s_next, std::size_t x, int y) { labels_[index(s, s_next, x)] = y; }

  /// Injective in s' for every fixed (s, x), and every label < aux_size.
  bool is_injective() const;

  bool operator==(const Labelling&) const = default;

 private:
  std::size_t index(std::size_t s, std::size_t s_next, std::size_t x) const {
    return (s * alphabet_size_ + x) * num_states_ + s_next;
  }

  std::size_t num_states_;
  std::size_t alphabet_size_;
  std::size_t aux_size_;
  std::vector<int> labels_;
};

Labelling make_labelling(const Hmm& model, const LabellingStrategy& strategy);

/// Deterministic HMM over the composite alphabet X x Y. Composite symbol
/// (x, y) has index x * aux_size + y and label "x|y".
struct DilatedHmm {
  Hmm base;
  Labelling labelling;
  std::vector<Matrix> composite;

  std::size_t aux_size() const noexcept { return labelling.aux_size(); }
  std::size_t composite_index(std::size_t x, std::size_t y) const { return x * aux_size() + y; }
  std::size_t base_symbol(std::size_t composite_index) const { return composite_index / aux_size(); }
  std::vector<std::string> composite_alphabet() const;

  /// Validated HMM view over the composite alphabet.
  Hmm as_hmm() const;
  LinearGenerator generator() const;
};

/// Composite label "x|y".
std::string composite_label(const std::string& x, std::size_t y);

DilatedHmm dilate(const Hmm& model, const Labelling& labelling);

struct DilationReport {
  bool deterministic = false;
  bool marginals_preserved = false;
  bool ergodic = false;
  double max_marginal_error = 0.0;

  bool passed() const noexcept { return deterministic && marginals_preserved && ergodic; }
};

/// Executable checks of determinism, X-marginal preservation (all words up to
/// max_word_len, tolerance 1e-12) and ergodicity of the dilation. Failures are
/// reported, never thrown.
DilationReport verify_dilation(const DilatedHmm& dilated, std::size_t max_word_len);

}  // namespace qcomp
