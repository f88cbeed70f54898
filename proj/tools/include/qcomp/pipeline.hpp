#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcomp/dilation.hpp"
#include "qcomp/divergence.hpp"
#include "qcomp/hmm.hpp"
#include "qcomp/qhmm.hpp"
#include "qcomp/truncation.hpp"

namespace qcomp::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitVerification = 2;
inline constexpr int kExitSolver = 3;

inline constexpr const char* kSchemaVersion = "1";

/// Maps an exception to the CLI exit code.
int exit_code_for(const std::exception& e);

struct RowKey {
  std::string model_id;
  std::string labelling;
  std::size_t dim = 0;
  std::uint64_t seed = 0;

  auto operator<=>(const RowKey&) const = default;
};

/// One line of results.csv. Optional numbers are written as empty cells.
struct ResultRow {
  RowKey key;
  std::optional<std::size_t> n_states;
  std::optional<double> p;
  std::string status = "ok";
  std::optional<double> fidelity;
  std::optional<double> fidelity_rate;
  std::optional<double> rate;  // R_C against the original
  std::optional<double> c_q;
  std::optional<double> entropy;
  std::optional<double> tail;
  std::optional<std::size_t> rank;
  std::optional<double> entropy_bound;
  std::optional<double> rank_bound;
  std::optional<std::size_t> memory_dim;  // bond dimension actually used
  double wall_time = 0.0;
  std::string message;
};

std::string results_header();
std::string format_row(const ResultRow& row);
/// Rows of an existing results file, keyed; malformed lines are ignored.
std::vector<ResultRow> read_results(const std::filesystem::path& path);
std::string render_results(std::vector<ResultRow> rows);

struct RunSettings {
  std::uint64_t seed = 0;
  std::size_t restarts = 3;
  std::size_t max_sweeps = 500;
  double tolerance = 1e-12;
  std::size_t verify_length = 5;
  bool record_timing = false;
};

/// Everything the compression pipeline produces for one (model, labelling, d~).
struct CompressOutcome {
  DilatedHmm dilated;
  Imps qsample;
  Vector spectrum;  // Schmidt spectrum of the q-sample
  std::size_t slice_rank = 0;
  DilationReport dilation_report;
  TruncationResult truncation;
  QhmmModel qhmm;
  CdrResult cdr;
  std::optional<BoundCertificate> certificate;
  ResultRow row;
};

/// Dilate, build the q-sample, truncate to `dim`, reconstruct the instrument
/// and score it against the original. Throws VerificationError when the
/// dilation lemmas fail; a failed certificate is reported in the row status.
CompressOutcome compress(const Hmm& model, const std::string& model_id, const LabellingStrategy& labelling,
                         std::size_t dim, const RunSettings& settings, const std::optional<Imps>& warm_start = {});

/// Chained compression over increasing d~, each step warm-started from the last.
std::vector<CompressOutcome> compress_series(const Hmm& model, const std::string& model_id,
                                             const LabellingStrategy& labelling, std::vector<std::size_t> dims,
                                             const RunSettings& settings);

struct ComparisonRow {
  std::string method;  // "quantum" or "classical-merge"
  std::size_t memory_dim = 0;
  std::string status = "ok";
  std::optional<double> rate;
  std::optional<double> fidelity;
  std::string message;
};

/// Quantum compression over `dims` and greedy merging to each of `state_counts`,
/// both scored by R_C against `model`.
std::vector<ComparisonRow> compare_baseline(const Hmm& model, const std::vector<std::size_t>& dims,
                                            const std::vector<std::size_t>& state_counts,
                                            const LabellingStrategy& labelling, const RunSettings& settings);
std::string render_comparison(const std::vector<ComparisonRow>& rows);

/// "1,3,5-8" -> {1,3,5,6,7,8}, sorted and deduplicated.
std::vector<std::size_t> parse_index_list(const std::string& text);

/// In-process entry point: args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcomp::pipeline
