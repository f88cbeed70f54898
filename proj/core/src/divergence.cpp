#include "qcomp/divergence.hpp"

#include <cmath>
#include <limits>

#include "qcomp/errors.hpp"
#include "qcomp/hmm.hpp"

namespace qcomp {

namespace {

constexpr double kBoundSlack = 1e-12;

void check_generator(const LinearGenerator& g, const char* which) {
  if (g.generators.empty()) throw InputError(std::string(which) + " generator has no symbols");
  const auto d = g.generators.front().rows();
  for (const auto& m : g.generators)
    if (m.rows() != d || m.cols() != d) throw InputError(std::string(which) + " generator matrices must be square");
  if (g.init.size() != d || g.readout.size() != d)
    throw InputError(std::string(which) + " generator init/readout sizes do not match");
}

struct Modulus {
  double value;
  bool nonreal;
  std::size_t iterations;
};

Modulus dominant(const LinearGenerator& a, const LinearGenerator& b, const EigenOptions& opts) {
  const TransferMap map(a.generators, b.generators);
  // The product of the initial vectors overlaps the dominant mode whenever the
  // co-emission sums are nonzero.
  Matrix start = a.init * b.init.transpose();
  if (start.norm() == 0.0) start = Matrix::Ones(a.init.size(), b.init.size());
  const auto pair = leading_eigenpair([&](const Matrix& x) { return map.apply_right(x); }, start, opts);
  return {std::abs(pair.value), pair.nonreal, pair.iterations};
}

std::size_t checked_words(std::size_t alphabet, std::size_t length) {
  std::size_t words = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (words > kEnumerationWordBudget / alphabet)
      throw InputError("exhaustive enumeration of " + std::to_string(alphabet) + "^" + std::to_string(length) +
                       " words exceeds the budget; use a smaller L");
    words *= alphabet;
  }
  return words;
}

}  // namespace

CdrResult cdr(const LinearGenerator& p, const LinearGenerator& q, const EigenOptions& opts) {
  check_generator(p, "first");
  check_generator(q, "second");
  if (p.alphabet != q.alphabet) throw InputError("CDR needs generators over the same alphabet");
  const Modulus mp = dominant(p, p, opts);
  const Modulus mq = dominant(q, q, opts);
  const Modulus mpq = dominant(p, q, opts);
  CdrResult out;
  out.mu_p = mp.value;
  out.mu_q = mq.value;
  out.mu_pq = mpq.value;
  out.nonreal = mp.nonreal || mq.nonreal || mpq.nonreal;
  out.iterations = mp.iterations + mq.iterations + mpq.iterations;
  out.rate = out.mu_pq > 0.0 ? -0.5 * std::log2(out.mu_pq / std::sqrt(out.mu_p * out.mu_q))
                             : std::numeric_limits<double>::infinity();
  out.negative = out.rate < -1e-10;
  return out;
}

double bhattacharyya_coefficient(const LinearGenerator& p, const LinearGenerator& q, std::size_t length) {
  check_generator(p, "first");
  check_generator(q, "second");
  if (p.alphabet.size() != q.alphabet.size()) throw InputError("generators have different alphabet sizes");
  checked_words(p.alphabet.size(), length);
  const auto pw = block_distribution(p, length);
  const auto qw = block_distribution(q, length);
  double overlap = 0.0;
  double mass_p = 0.0;
  double mass_q = 0.0;
  for (std::size_t i = 0; i < pw.size(); ++i) {
    const double a = std::max(pw[i], 0.0);
    const double b = std::max(qw[i], 0.0);
    overlap += std::sqrt(a * b);
    mass_p += a;
    mass_q += b;
  }
  return overlap / std::sqrt(mass_p * mass_q);
}

double cfdr_finite_L(const LinearGenerator& p, const LinearGenerator& q, std::size_t length) {
  if (length == 0) throw InputError("word length must be at least 1");
  // Adding 0.0 turns the -0.0 of identical inputs into +0.0.
  return -std::log2(bhattacharyya_coefficient(p, q, length)) / (2.0 * static_cast<double>(length)) + 0.0;
}

std::vector<double> cfdr_sequence(const LinearGenerator& p, const LinearGenerator& q, std::size_t max_length) {
  std::vector<double> out;
  for (std::size_t l = 1; l <= max_length; ++l) out.push_back(cfdr_finite_L(p, q, l));
  return out;
}

BoundCertificate certify_bounds(const Vector& schmidt, std::size_t rank, std::size_t kept) {
  if (kept < 2) throw InputError("bound certificates need a kept dimension of at least 2");
  BoundCertificate c;
  c.kept = kept;
  c.tail = tail_weight(schmidt, kept);
  c.entropy = shannon_entropy_bits(schmidt);
  c.rank = rank;
  const double log_kept = std::log2(static_cast<double>(kept));
  c.entropy_bound = c.entropy / log_kept;
  c.rank_bound = rank > 0 ? std::log2(static_cast<double>(rank)) / log_kept : 0.0;
  c.tail_within_entropy_bound = c.tail <= c.entropy_bound + kBoundSlack;
  c.entropy_within_rank = rank > 0 && c.entropy <= std::log2(static_cast<double>(rank)) + kBoundSlack;
  return c;
}

BoundCertificate certify_bounds(const Imps& m, std::size_t kept) {
  const Vector lambda = m.schmidt ? *m.schmidt : canonical_form(m).schmidt;
  return certify_bounds(lambda, slice_rank(m), kept);
}

bool DataProcessingReport::passed() const noexcept {
  for (const auto& r : rows)
    if (!r.holds) return false;
  return !rows.empty();
}

LinearGenerator marginalise(const LinearGenerator& composite, std::size_t aux_size) {
  check_generator(composite, "composite");
  if (aux_size == 0 || composite.alphabet.size() % aux_size != 0)
    throw InputError("composite alphabet size is not a multiple of the auxiliary size");
  LinearGenerator out;
  out.init = composite.init;
  out.readout = composite.readout;
  const std::size_t nx = composite.alphabet.size() / aux_size;
  for (std::size_t x = 0; x < nx; ++x) {
    const std::string& first = composite.alphabet[x * aux_size];
    const auto bar = first.rfind('|');
    const std::string base = bar == std::string::npos ? first : first.substr(0, bar);
    Matrix sum = Matrix::Zero(composite.generators.front().rows(), composite.generators.front().cols());
    for (std::size_t y = 0; y < aux_size; ++y) {
      const std::string& label = composite.alphabet[x * aux_size + y];
      if (bar != std::string::npos && label.substr(0, label.rfind('|')) != base)
        throw InputError("composite symbol '" + label + "' is out of place for base symbol '" + base + "'");
      sum += composite.generators[x * aux_size + y];
    }
    out.alphabet.push_back(base);
    out.generators.push_back(std::move(sum));
  }
  return out;
}

DataProcessingReport data_processing_check(const LinearGenerator& p, const LinearGenerator& q, std::size_t aux_size,
                                           std::size_t max_length) {
  if (p.alphabet != q.alphabet) throw InputError("data-processing check needs a shared composite alphabet");
  const LinearGenerator px = marginalise(p, aux_size);
  const LinearGenerator qx = marginalise(q, aux_size);
  DataProcessingReport report;
  for (std::size_t l = 1; l <= max_length; ++l) {
    DataProcessingRow row;
    row.length = l;
    row.coefficient_x = bhattacharyya_coefficient(px, qx, l);
    row.coefficient_xy = bhattacharyya_coefficient(p, q, l);
    row.rate_x = -std::log2(row.coefficient_x) / (2.0 * static_cast<double>(l));
    row.rate_xy = -std::log2(row.coefficient_xy) / (2.0 * static_cast<double>(l));
    row.holds = row.coefficient_x >= row.coefficient_xy - kBoundSlack;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace qcomp
