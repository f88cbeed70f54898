#include "qcomp/linear_generator.hpp"

#include <algorithm>
#include <cmath>

#include "qcomp/errors.hpp"
#include "qcomp/hmm.hpp"

namespace qcomp {

LinearGenerator LinearGenerator::from_hmm(const Hmm& model) {
  LinearGenerator gen;
  gen.alphabet = model.alphabet();
  gen.generators = model.transitions();
  gen.init = stationary_distribution(model);
  gen.readout = Vector::Ones(static_cast<Eigen::Index>(model.num_states()));
  return gen;
}

double LinearGenerator::word_probability(std::span<const std::size_t> word) const {
  Vector v = init;
  for (auto x : word) {
    if (x >= generators.size())
      throw InputError("symbol index " + std::to_string(x) + " outside alphabet of size " +
                       std::to_string(generators.size()));
    v = generators[x] * v;
  }
  return readout.dot(v);
}

Word LinearGenerator::encode(std::span<const std::string> labels) const {
  Word w;
  w.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = std::find(alphabet.begin(), alphabet.end(), l);
    if (it == alphabet.end()) throw InputError("unknown symbol '" + l + "'");
    w.push_back(static_cast<std::size_t>(it - alphabet.begin()));
  }
  return w;
}

double LinearGenerator::word_probability(std::span<const std::string> labels) const {
  const Word w = encode(labels);
  return word_probability(w);
}

namespace {

void expand(const LinearGenerator& gen, const Vector& v, std::size_t depth, std::size_t index,
            std::vector<double>& out) {
  const std::size_t nx = gen.alphabet_size();
  if (depth == 0) {
    out[index] = gen.readout.dot(v);
    return;
  }
  for (std::size_t x = 0; x < nx; ++x) {
    expand(gen, gen.generators[x] * v, depth - 1, index * nx + x, out);
  }
}

}  // namespace

std::vector<double> block_distribution(const LinearGenerator& gen, std::size_t length) {
  std::size_t count = 1;
  for (std::size_t i = 0; i < length; ++i) count *= gen.alphabet_size();
  std::vector<double> out(count, 0.0);
  expand(gen, gen.init, length, 0, out);
  return out;
}

GeneratorCheck validate_generator(const LinearGenerator& gen, std::size_t max_length) {
  GeneratorCheck check;
  for (std::size_t len = 1; len <= max_length; ++len) {
    const auto dist = block_distribution(gen, len);
    double sum = 0.0;
    for (double p : dist) {
      sum += p;
      if (p < -1e-9 || p > 1.0 + 1e-9) {
        check.probabilities_in_range = false;
        check.worst_deviation = std::max(check.worst_deviation, p < 0.0 ? -p : p - 1.0);
      }
    }
    const double dev = std::abs(sum - 1.0);
    check.worst_deviation = std::max(check.worst_deviation, dev);
    if (dev > 1e-9) check.normalised = false;
  }
  return check;
}

}  // namespace qcomp
