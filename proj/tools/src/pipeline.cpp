#include "qcomp/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/io.hpp"
#include "qcomp/merge.hpp"
#include "qcomp/random.hpp"
#include "qcomp/training.hpp"

namespace qcomp::pipeline {

namespace fs = std::filesystem;
using io::Json;
using Clock = std::chrono::steady_clock;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const VerificationError*>(&e)) return kExitVerification;
  if (dynamic_cast<const SolverError*>(&e) || dynamic_cast<const DegeneracyError*>(&e) ||
      dynamic_cast<const GaugeError*>(&e))
    return kExitSolver;
  return kExitInput;
}

namespace {

std::string status_for(const std::exception& e) {
  switch (exit_code_for(e)) {
    case kExitVerification:
      return "verification-failed";
    case kExitSolver:
      return "solver-error";
    default:
      return "input-error";
  }
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
std::string cell(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string file_token(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  return out;
}

const std::vector<std::string> kColumns = {
    "schema_version", "model_id", "n_states", "p",          "labelling",     "d_tilde",   "seed",
    "status",         "fidelity", "fidelity_rate", "R_C",   "C_q",           "H_lambda",  "tail",
    "rank_K",         "entropy_bound", "rank_bound", "memory_dim", "wall_time", "message"};

std::vector<std::string> row_cells(const ResultRow& r) {
  return {kSchemaVersion,
          r.key.model_id,
          cell(r.n_states),
          cell(r.p),
          r.key.labelling,
          std::to_string(r.key.dim),
          std::to_string(r.key.seed),
          r.status,
          cell(r.fidelity),
          cell(r.fidelity_rate),
          cell(r.rate),
          cell(r.c_q),
          cell(r.entropy),
          cell(r.tail),
          cell(r.rank),
          cell(r.entropy_bound),
          cell(r.rank_bound),
          cell(r.memory_dim),
          num(r.wall_time),
          r.message};
}

Json row_to_json(const ResultRow& r) {
  const auto cells = row_cells(r);
  Json j = Json::object();
  for (std::size_t i = 0; i < kColumns.size(); ++i) j[kColumns[i]] = cells[i];
  const auto put = [&](const char* k, const auto& v) { j[k] = v ? Json(*v) : Json(nullptr); };
  put("n_states", r.n_states);
  put("p", r.p);
  j["d_tilde"] = r.key.dim;
  j["seed"] = r.key.seed;
  put("fidelity", r.fidelity);
  put("fidelity_rate", r.fidelity_rate);
  put("R_C", r.rate);
  put("C_q", r.c_q);
  put("H_lambda", r.entropy);
  put("tail", r.tail);
  put("rank_K", r.rank);
  put("entropy_bound", r.entropy_bound);
  put("rank_bound", r.rank_bound);
  put("memory_dim", r.memory_dim);
  j["wall_time"] = r.wall_time;
  return j;
}

// Writes every file under a temporary name first so that a failing command
// leaves the output directory as it was.
class OutputSet {
 public:
  void add(const fs::path& path, std::string content) { files_.emplace_back(path, std::move(content)); }

  void commit() {
    std::vector<fs::path> temps;
    try {
      for (const auto& [path, content] : files_) {
        fs::path tmp = path;
        tmp += ".tmp";
        io::write_text_file(tmp, content);
        temps.push_back(tmp);
      }
      for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(temps[i], files_[i].first);
    } catch (...) {
      std::error_code ec;
      for (const auto& t : temps) fs::remove(t, ec);
      throw;
    }
    files_.clear();
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

void write_atomic(const fs::path& path, std::string content) {
  OutputSet out;
  out.add(path, std::move(content));
  out.commit();
}

std::string dilation_failure(const DilationReport& r) {
  std::ostringstream ss;
  ss << "dilation verification failed: deterministic=" << r.deterministic
     << " marginals_preserved=" << r.marginals_preserved << " ergodic=" << r.ergodic
     << " max_marginal_error=" << num(r.max_marginal_error);
  return ss.str();
}

std::string join_messages(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + "; " + b;
}

}  // namespace

std::string results_header() {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) out += (i ? "," : "") + kColumns[i];
  return out + "\n";
}

std::string format_row(const ResultRow& row) {
  const auto cells = row_cells(row);
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
  return out + "\n";
}

std::vector<ResultRow> read_results(const fs::path& path) {
  std::vector<ResultRow> rows;
  if (!fs::exists(path)) return rows;
  std::istringstream in(io::read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line + "\n" != results_header()) return rows;
  const auto opt_d = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  const auto opt_z = [](const std::string& s) -> std::optional<std::size_t> {
    if (s.empty()) return std::nullopt;
    return std::stoul(s);
  };
  while (std::getline(in, line)) {
    const auto c = csv_split(line);
    if (c.size() != kColumns.size() || c[0] != kSchemaVersion) continue;
    try {
      ResultRow r;
      r.key = {c[1], c[4], std::stoul(c[5]), std::stoull(c[6])};
      r.n_states = opt_z(c[2]);
      r.p = opt_d(c[3]);
      r.status = c[7];
      r.fidelity = opt_d(c[8]);
      r.fidelity_rate = opt_d(c[9]);
      r.rate = opt_d(c[10]);
      r.c_q = opt_d(c[11]);
      r.entropy = opt_d(c[12]);
      r.tail = opt_d(c[13]);
      r.rank = opt_z(c[14]);
      r.entropy_bound = opt_d(c[15]);
      r.rank_bound = opt_d(c[16]);
      r.memory_dim = opt_z(c[17]);
      r.wall_time = std::stod(c[18]);
      r.message = c[19];
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
    }
  }
  return rows;
}

std::string render_results(std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key < b.key; });
  std::string out = results_header();
  for (const auto& r : rows) out += format_row(r);
  return out;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::set<std::size_t> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    part.erase(0, part.find_first_not_of(' '));
    part.erase(part.find_last_not_of(' ') + 1);
    if (part.empty()) continue;
    try {
      const auto dash = part.find('-');
      std::size_t used = 0;
      if (dash == std::string::npos) {
        const auto v = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
        out.insert(v);
      } else {
        const auto lo = std::stoul(part.substr(0, dash), &used);
        if (used != dash) throw std::invalid_argument(part);
        const std::string rest = part.substr(dash + 1);
        const auto hi = std::stoul(rest, &used);
        if (used != rest.size() || hi < lo) throw std::invalid_argument(part);
        for (auto v = lo; v <= hi; ++v) out.insert(v);
      }
    } catch (const std::logic_error&) {
      throw InputError("bad index list entry '" + part + "' (expected e.g. 1,3,5-8)");
    }
  }
  if (out.empty()) throw InputError("empty index list '" + text + "'");
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Compression

namespace {

struct Prepared {
  DilatedHmm dilated;
  DilationReport report;
  Imps qsample;
  Vector spectrum;
  std::size_t slice_rank = 0;
};

Prepared prepare(const Hmm& model, const LabellingStrategy& labelling, std::size_t verify_length) {
  DilatedHmm dilated = dilate(model, make_labelling(model, labelling));
  const DilationReport report = verify_dilation(dilated, verify_length);
  if (!report.passed()) throw VerificationError(dilation_failure(report));
  Imps q = qsample_tensors(dilated);
  const auto cf = canonical_form(q);
  const std::size_t rank = slice_rank(q);
  return {std::move(dilated), report, std::move(q), cf.schmidt, rank};
}

std::string row_seed_key(const RowKey& k) { return k.model_id + "|" + k.labelling + "|" + std::to_string(k.dim); }

CompressOutcome compress_prepared(const Hmm& model, const Prepared& prep, const RowKey& key,
                                  const RunSettings& settings, const std::optional<Imps>& warm_start) {
  const auto started = Clock::now();
  TruncationOptions topt;
  topt.target_dim = key.dim;
  topt.max_sweeps = settings.max_sweeps;
  topt.tolerance = settings.tolerance;
  topt.restarts = settings.restarts;
  topt.seed = split_seed(key.seed, row_seed_key(key));
  topt.warm_start = warm_start;
  TruncationResult trunc = variational_truncate(prep.qsample, topt);
  QhmmModel qhmm = reconstruct_qhmm(trunc, model.alphabet(), prep.dilated.aux_size());
  const CdrResult rc = cdr(LinearGenerator::from_hmm(model), liouville_generators(qhmm));

  std::optional<BoundCertificate> cert;
  if (key.dim >= 2) cert = certify_bounds(prep.spectrum, prep.slice_rank, key.dim);

  ResultRow row;
  row.key = key;
  row.n_states = model.num_states();
  row.fidelity = trunc.fidelity;
  row.fidelity_rate = trunc.fidelity_rate;
  row.rate = rc.rate;
  row.c_q = quantum_memory(qhmm);
  row.entropy = shannon_entropy_bits(prep.spectrum);
  row.tail = tail_weight(prep.spectrum, key.dim);
  row.rank = prep.slice_rank;
  if (cert) {
    row.entropy_bound = cert->entropy_bound;
    row.rank_bound = cert->rank_bound;
    if (!cert->passed()) {
      row.status = "certificate-failed";
      row.message = join_messages(row.message, cert->tail_within_entropy_bound ? "entropy exceeds log2 rank K"
                                                                               : "tail exceeds entropy bound");
    }
  }
  row.memory_dim = qhmm.bond_dim();
  row.message = join_messages(row.message, trunc.warning);
  if (rc.nonreal) row.message = join_messages(row.message, "non-real dominant eigenvalue in CDR");
  if (rc.negative) row.message = join_messages(row.message, "negative CDR");
  if (settings.record_timing) row.wall_time = std::chrono::duration<double>(Clock::now() - started).count();

  return {prep.dilated, prep.qsample, prep.spectrum, prep.slice_rank, prep.report,
          std::move(trunc), std::move(qhmm), rc, cert, std::move(row)};
}

struct SeriesResult {
  std::vector<ResultRow> rows;
  std::optional<Vector> spectrum;
  std::size_t slice_rank = 0;
};

// Rows for each d~ in increasing order, warm-starting from the previous
// truncation. Per-row failures become status entries.
SeriesResult run_series(const Hmm& model, const std::string& model_id, std::optional<std::size_t> n_label,
                        std::optional<double> p_label, const LabellingStrategy& labelling,
                        const std::vector<std::size_t>& dims, std::uint64_t seed, const RunSettings& settings,
                        std::vector<CompressOutcome>* outcomes = nullptr) {
  SeriesResult out;
  const auto failed = [&](std::size_t dim, const std::exception& e) {
    ResultRow r;
    r.key = {model_id, labelling.name(), dim, seed};
    r.n_states = n_label;
    r.p = p_label;
    r.status = status_for(e);
    r.message = e.what();
    return r;
  };
  std::optional<Prepared> prep;
  try {
    prep = prepare(model, labelling, settings.verify_length);
    out.spectrum = prep->spectrum;
    out.slice_rank = prep->slice_rank;
  } catch (const std::exception& e) {
    for (auto d : dims) out.rows.push_back(failed(d, e));
    return out;
  }
  std::optional<Imps> warm;
  for (auto d : dims) {
    try {
      CompressOutcome o = compress_prepared(model, *prep, {model_id, labelling.name(), d, seed}, settings, warm);
      o.row.n_states = n_label;
      o.row.p = p_label;
      warm = o.truncation.truncated;
      out.rows.push_back(o.row);
      if (outcomes) outcomes->push_back(std::move(o));
    } catch (const std::exception& e) {
      out.rows.push_back(failed(d, e));
      warm.reset();
    }
  }
  return out;
}

}  // namespace

CompressOutcome compress(const Hmm& model, const std::string& model_id, const LabellingStrategy& labelling,
                         std::size_t dim, const RunSettings& settings, const std::optional<Imps>& warm_start) {
  const Prepared prep = prepare(model, labelling, settings.verify_length);
  return compress_prepared(model, prep, {model_id, labelling.name(), dim, settings.seed}, settings, warm_start);
}

std::vector<CompressOutcome> compress_series(const Hmm& model, const std::string& model_id,
                                             const LabellingStrategy& labelling, std::vector<std::size_t> dims,
                                             const RunSettings& settings) {
  std::sort(dims.begin(), dims.end());
  const Prepared prep = prepare(model, labelling, settings.verify_length);
  std::vector<CompressOutcome> out;
  std::optional<Imps> warm;
  for (auto d : dims) {
    out.push_back(compress_prepared(model, prep, {model_id, labelling.name(), d, settings.seed}, settings, warm));
    warm = out.back().truncation.truncated;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Baseline comparison

std::vector<ComparisonRow> compare_baseline(const Hmm& model, const std::vector<std::size_t>& dims,
                                            const std::vector<std::size_t>& state_counts,
                                            const LabellingStrategy& labelling, const RunSettings& settings) {
  const std::size_t n = model.num_states();
  for (auto d : dims)
    if (d < 1 || d > n) throw InputError("memory dimension " + std::to_string(d) + " is outside 1.." + std::to_string(n));
  for (auto c : state_counts)
    if (c < 1 || c > n) throw InputError("state count " + std::to_string(c) + " is outside 1.." + std::to_string(n));

  std::vector<ComparisonRow> rows;
  std::vector<std::size_t> sorted_dims = dims;
  std::sort(sorted_dims.begin(), sorted_dims.end());
  const auto series = run_series(model, "model", n, std::nullopt, labelling, sorted_dims, settings.seed, settings);
  for (const auto& r : series.rows) {
    ComparisonRow c;
    c.method = "quantum";
    c.memory_dim = r.key.dim;
    c.status = r.status;
    c.rate = r.rate;
    c.fidelity = r.fidelity;
    c.message = r.message;
    rows.push_back(std::move(c));
  }

  const LinearGenerator original = LinearGenerator::from_hmm(model);
  std::map<std::size_t, Hmm> merged;
  if (!state_counts.empty()) {
    const std::size_t lowest = *std::min_element(state_counts.begin(), state_counts.end());
    merged.emplace(n, model);
    if (lowest < n)
      for (auto& step : greedy_merge_baseline(model, lowest)) merged.emplace(step.state_count, std::move(step.model));
  }
  std::vector<std::size_t> counts = state_counts;
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  for (auto c : counts) {
    ComparisonRow row;
    row.method = "classical-merge";
    row.memory_dim = c;
    try {
      const CdrResult rc = cdr(original, LinearGenerator::from_hmm(merged.at(c)));
      row.rate = rc.rate;
      if (rc.nonreal) row.message = "non-real dominant eigenvalue in CDR";
    } catch (const std::exception& e) {
      row.status = status_for(e);
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    return std::tie(a.method, a.memory_dim) < std::tie(b.method, b.memory_dim);
  });
  return rows;
}

std::string render_comparison(const std::vector<ComparisonRow>& rows) {
  std::string out = "schema_version,method,memory_dim,status,R_C,fidelity,message\n";
  for (const auto& r : rows)
    out += std::string(kSchemaVersion) + "," + r.method + "," + std::to_string(r.memory_dim) + "," + r.status + "," +
           cell(r.rate) + "," + cell(r.fidelity) + "," + csv_escape(r.message) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

constexpr double kPlotFloor = 1e-9;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> threads;
  std::optional<double> tolerance;
  bool record_timing = false;
};

struct Resolved {
  std::uint64_t seed = 0;
  fs::path out_dir = "qcomp-out";
  std::size_t threads = 1;
  std::optional<double> tolerance;
  bool record_timing = false;
};

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::size_t parse_threads(const std::string& text, const std::string& source) {
  try {
    std::size_t used = 0;
    const auto v = std::stoul(text, &used);
    if (used == text.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  throw InputError(source + ": thread count must be a positive integer, got '" + text + "'");
}

// Flag > environment > config file > built-in default.
Resolved resolve(const Globals& g, const Json& config = Json::object()) {
  Resolved r;
  if (config.contains("seed")) r.seed = config.at("seed").get<std::uint64_t>();
  if (config.contains("out_dir")) r.out_dir = config.at("out_dir").get<std::string>();
  if (config.contains("threads")) r.threads = parse_threads(config.at("threads").dump(), "config threads");
  if (config.contains("tolerance")) r.tolerance = config.at("tolerance").get<double>();
  if (config.contains("record_timing")) r.record_timing = config.at("record_timing").get<bool>();
  if (auto v = env("QCOMP_OUT_DIR")) r.out_dir = *v;
  if (auto v = env("QCOMP_THREADS")) r.threads = parse_threads(*v, "QCOMP_THREADS");
  if (g.seed) r.seed = *g.seed;
  if (g.out_dir) r.out_dir = *g.out_dir;
  if (g.threads) {
    if (*g.threads < 1) throw InputError("--threads must be at least 1");
    r.threads = *g.threads;
  }
  if (g.tolerance) r.tolerance = *g.tolerance;
  if (r.tolerance && !(*r.tolerance > 0.0)) throw InputError("tolerance must be positive");
  r.record_timing = r.record_timing || g.record_timing;
  return r;
}

RunSettings settings_from(const Resolved& r, std::size_t restarts, std::size_t max_sweeps) {
  RunSettings s;
  s.seed = r.seed;
  s.restarts = restarts;
  s.max_sweeps = max_sweeps;
  if (r.tolerance) s.tolerance = *r.tolerance;
  s.record_timing = r.record_timing;
  return s;
}

Hmm load_hmm(const fs::path& path) {
  const Json j = io::read_json_file(path);
  try {
    return io::hmm_from_json(j);
  } catch (const Json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

std::string plot_curve(const std::vector<std::pair<double, double>>& pts) {
  std::string out;
  for (const auto& [x, y] : pts) out += num(x) + "," + num(y) + "\n";
  return out;
}

// --- compress -------------------------------------------------------------

struct CompressArgs {
  std::string model;
  std::string labelling = "sequential";
  std::size_t dim = 1;
  std::size_t restarts = 3;
  std::size_t max_sweeps = 500;
  std::string id;
};

int cmd_compress(const CompressArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(g);
  const Hmm model = load_hmm(a.model);
  const auto strategy = LabellingStrategy::parse(a.labelling);
  const std::string id = a.id.empty() ? fs::path(a.model).stem().string() : a.id;
  const RunSettings s = settings_from(r, a.restarts, a.max_sweeps);
  if (a.dim < 1 || a.dim > model.num_states())
    throw InputError("--dim must lie in 1.." + std::to_string(model.num_states()));
  const CompressOutcome o = compress(model, id, strategy, a.dim, s);
  if (o.row.status != "ok") {
    err << "verification failed:\n" << io::dump(row_to_json(o.row));
    return kExitVerification;
  }
  const std::string stem = file_token(id) + "." + file_token(strategy.name());
  const std::string dstem = stem + ".d" + std::to_string(a.dim);
  OutputSet files;
  files.add(r.out_dir / (stem + ".dilated.json"), io::dump(io::dilated_to_json(o.dilated)));
  files.add(r.out_dir / (dstem + ".imps.json"), io::dump(io::truncation_to_json(o.truncation, r.record_timing)));
  files.add(r.out_dir / (dstem + ".qhmm.json"), io::dump(io::qhmm_to_json(o.qhmm)));
  files.add(r.out_dir / (dstem + ".results.csv"), render_results({o.row}));
  files.commit();
  out << "fidelity " << num(o.truncation.fidelity) << "\nR_C " << num(o.cdr.rate) << "\nwrote " << dstem
      << ".* to " << r.out_dir.string() << "\n";
  return kExitOk;
}

// --- sweep ----------------------------------------------------------------

struct ModelSpec {
  std::string id;
  Hmm model;
  std::optional<std::size_t> n;
  std::optional<double> p;
};

struct SweepPlan {
  std::vector<ModelSpec> models;
  std::vector<LabellingStrategy> labellings;
  std::optional<std::vector<std::size_t>> dims;
  std::vector<std::uint64_t> seeds;
  std::size_t restarts = 3;
  std::size_t max_sweeps = 500;
};

template <class T>
std::vector<T> list_of(const Json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("sweep config: missing '") + key + "'");
  const Json& v = j.at(key);
  std::vector<T> out;
  if (v.is_array())
    for (const auto& e : v) out.push_back(e.get<T>());
  else
    out.push_back(v.get<T>());
  if (out.empty()) throw InputError(std::string("sweep config: '") + key + "' must be nonempty");
  return out;
}

Hmm train_model(const std::vector<Word>& seqs, const std::vector<std::string>& alphabet, std::size_t states,
                std::size_t max_iterations, double tolerance, std::uint64_t seed, TrainingResult* log = nullptr);

struct TrainInput {
  std::vector<Word> sequences;
  std::vector<std::string> alphabet;
  std::optional<KMeansResult> quantizer;
};

TrainInput load_training_data(const fs::path& path, const std::string& format, bool header, std::size_t clusters,
                              std::uint64_t seed);

SweepPlan plan_from(const Json& cfg, const fs::path& base, const Resolved& r) {
  SweepPlan plan;
  if (!cfg.contains("models") || !cfg.at("models").is_object()) throw InputError("sweep config: missing 'models'");
  const Json& models = cfg.at("models");
  if (models.contains("tns")) {
    const Json& t = models.at("tns");
    for (auto n : list_of<std::size_t>(t, "N"))
      for (auto p : list_of<double>(t, "p"))
        plan.models.push_back({"tns-N" + std::to_string(n) + "-p" + short_num(p), build_tns(n, p), n, p});
  }
  if (models.contains("hmm_files"))
    for (const auto& f : list_of<std::string>(models, "hmm_files")) {
      Hmm m = load_hmm(base / f);
      plan.models.push_back({fs::path(f).stem().string(), m, m.num_states(), std::nullopt});
    }
  if (models.contains("train")) {
    const Json& t = models.at("train");
    const auto file = t.at("data_file").get<std::string>();
    const auto states = t.at("num_states").get<std::size_t>();
    const auto format = t.value("format", std::string("sequences"));
    const auto clusters = t.value("alphabet_size", std::size_t{0});
    const TrainInput data = load_training_data(base / file, format, t.value("header", false), clusters, r.seed);
    Hmm m = train_model(data.sequences, data.alphabet, states, t.value("max_iterations", std::size_t{200}),
                        t.value("tolerance", 1e-8), r.seed);
    plan.models.push_back({"trained-" + fs::path(file).stem().string() + "-n" + std::to_string(states), m,
                           m.num_states(), std::nullopt});
  }
  if (plan.models.empty()) throw InputError("sweep config: 'models' lists no model");
  for (const auto& l : list_of<std::string>(cfg, "labellings")) plan.labellings.push_back(LabellingStrategy::parse(l));
  if (!cfg.contains("dims") || (cfg.at("dims").is_string() && cfg.at("dims").get<std::string>() == "all")) {
    plan.dims.reset();
  } else if (cfg.at("dims").is_string()) {
    plan.dims = parse_index_list(cfg.at("dims").get<std::string>());
  } else {
    auto d = list_of<std::size_t>(cfg, "dims");
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    plan.dims = d;
  }
  if (plan.dims) {
    if (plan.dims->front() < 1) throw InputError("sweep config: d~ values start at 1");
    for (const auto& m : plan.models)
      if (plan.dims->back() > m.model.num_states())
        throw InputError("sweep config: d~ = " + std::to_string(plan.dims->back()) + " exceeds the " +
                         std::to_string(m.model.num_states()) + " states of '" + m.id + "'");
  }
  plan.seeds = cfg.contains("seeds") ? list_of<std::uint64_t>(cfg, "seeds") : std::vector<std::uint64_t>{r.seed};
  plan.restarts = cfg.value("restarts", std::size_t{3});
  plan.max_sweeps = cfg.value("max_sweeps", std::size_t{500});
  return plan;
}

int cmd_sweep(const std::string& config_path, const Globals& g, std::ostream& out) {
  Json cfg = io::read_json_file(config_path);
  if (!cfg.is_object()) throw InputError("sweep config must be a JSON object");
  const Resolved r = resolve(g, cfg);
  SweepPlan plan;
  try {
    plan = plan_from(cfg, fs::path(config_path).parent_path(), r);
  } catch (const Json::exception& e) {
    throw InputError(std::string("sweep config: ") + e.what());
  }
  const RunSettings base = settings_from(r, plan.restarts, plan.max_sweeps);

  struct Task {
    const ModelSpec* model;
    LabellingStrategy labelling;
    std::uint64_t seed;
    std::vector<std::size_t> dims;
  };
  std::vector<Task> tasks;
  for (const auto& m : plan.models)
    for (const auto& l : plan.labellings)
      for (auto seed : plan.seeds) {
        std::vector<std::size_t> dims;
        if (plan.dims)
          dims = *plan.dims;
        else
          for (std::size_t d = 1; d <= m.model.num_states(); ++d) dims.push_back(d);
        tasks.push_back({&m, l, seed, std::move(dims)});
      }

  const fs::path results_path = r.out_dir / "results.csv";
  std::map<RowKey, ResultRow> rows;
  for (auto& row : read_results(results_path)) {
    const RowKey k = row.key;
    rows.emplace(k, std::move(row));
  }
  const std::size_t resumed = rows.size();

  std::map<std::pair<std::string, std::string>, std::pair<Vector, std::size_t>> spectra;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::vector<std::string> failures;

  const auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      RunSettings s = base;
      s.seed = t.seed;
      bool complete = true;
      {
        std::lock_guard lock(mutex);
        for (auto d : t.dims)
          complete = complete && rows.count({t.model->id, t.labelling.name(), d, t.seed}) > 0;
      }
      SeriesResult res;
      if (complete) {
        try {
          const Prepared prep = prepare(t.model->model, t.labelling, s.verify_length);
          res.spectrum = prep.spectrum;
          res.slice_rank = prep.slice_rank;
        } catch (const std::exception&) {
        }
      } else {
        res = run_series(t.model->model, t.model->id, t.model->n, t.model->p, t.labelling, t.dims, t.seed, s);
      }
      std::lock_guard lock(mutex);
      for (auto& row : res.rows) rows.emplace(row.key, std::move(row));
      if (res.spectrum) spectra[{t.model->id, t.labelling.name()}] = {*res.spectrum, res.slice_rank};
      std::vector<ResultRow> all;
      for (const auto& [k, row] : rows) all.push_back(row);
      write_atomic(results_path, render_results(std::move(all)));
    }
  };
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(r.threads, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  OutputSet files;
  std::string spec_csv = "schema_version,model_id,labelling,slice_rank,index,lambda\n";
  for (const auto& [key, value] : spectra) {
    std::vector<std::pair<double, double>> pts;
    for (Eigen::Index i = 0; i < value.first.size(); ++i) {
      spec_csv += std::string(kSchemaVersion) + "," + key.first + "," + key.second + "," +
                  std::to_string(value.second) + "," + std::to_string(i + 1) + "," + num(value.first(i)) + "\n";
      pts.emplace_back(static_cast<double>(i + 1), value.first(i));
    }
    files.add(r.out_dir / "plots" / ("spectrum__" + file_token(key.first) + "__" + file_token(key.second) + ".csv"),
              plot_curve(pts));
  }
  files.add(r.out_dir / "spectra.csv", spec_csv);

  std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<std::pair<double, double>>> curves;
  std::size_t ok = 0;
  for (const auto& [k, row] : rows) {
    if (row.status != "ok") {
      failures.push_back(k.model_id + " " + k.labelling + " d=" + std::to_string(k.dim) + ": " + row.status);
      continue;
    }
    ++ok;
    if (row.rate) curves[{k.model_id, k.labelling, k.seed}].emplace_back(static_cast<double>(k.dim), *row.rate);
  }
  for (const auto& [key, pts] : curves)
    files.add(r.out_dir / "plots" /
                  ("cdr__" + file_token(std::get<0>(key)) + "__" + file_token(std::get<1>(key)) + "__s" +
                   std::to_string(std::get<2>(key)) + ".csv"),
              plot_curve(pts));
  files.commit();

  out << rows.size() << " rows (" << resumed << " resumed, " << ok << " ok) in " << results_path.string() << "\n";
  for (const auto& f : failures) out << "  " << f << "\n";
  return kExitOk;
}

// --- compare-baseline -------------------------------------------------------

struct CompareArgs {
  std::string model;
  std::string dims;
  std::string states;
  std::string labelling = "sequential";
  std::size_t restarts = 3;
  std::size_t max_sweeps = 500;
};

int cmd_compare(const CompareArgs& a, const Globals& g, std::ostream& out) {
  const Resolved r = resolve(g);
  const Hmm model = load_hmm(a.model);
  const auto rows = compare_baseline(model, parse_index_list(a.dims), parse_index_list(a.states),
                                     LabellingStrategy::parse(a.labelling), settings_from(r, a.restarts, a.max_sweeps));
  OutputSet files;
  files.add(r.out_dir / "comparison.csv", render_comparison(rows));
  std::map<std::string, std::vector<std::pair<double, double>>> curves;
  for (const auto& row : rows)
    if (row.status == "ok" && row.rate)
      curves[row.method].emplace_back(static_cast<double>(row.memory_dim), std::max(*row.rate, kPlotFloor));
  for (const auto& [method, pts] : curves)
    files.add(r.out_dir / "plots" / ("compare__" + method + ".csv"), plot_curve(pts));
  files.commit();
  for (const auto& row : rows)
    out << row.method << " " << row.memory_dim << " " << (row.rate ? num(*row.rate) : row.status) << "\n";
  return kExitOk;
}

// --- train ------------------------------------------------------------------

std::vector<std::string> ordered_alphabet(const std::set<std::string>& labels) {
  std::vector<std::string> out(labels.begin(), labels.end());
  const bool numeric = std::all_of(out.begin(), out.end(), [](const std::string& s) {
    return !s.empty() && s.size() < 19 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  });
  if (numeric)
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return std::stoull(a) < std::stoull(b);
    });
  return out;
}

TrainInput load_training_data(const fs::path& path, const std::string& format, bool header, std::size_t clusters,
                              std::uint64_t seed) {
  TrainInput in;
  if (format == "sequences") {
    const auto seqs = io::read_sequences(path);
    std::set<std::string> labels;
    for (const auto& s : seqs) labels.insert(s.begin(), s.end());
    in.alphabet = ordered_alphabet(labels);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < in.alphabet.size(); ++i) index[in.alphabet[i]] = i;
    for (const auto& s : seqs) {
      Word w;
      for (const auto& x : s) w.push_back(index.at(x));
      in.sequences.push_back(std::move(w));
    }
  } else if (format == "features") {
    if (clusters < 1) throw InputError("feature input needs a quantizer size (--clusters / alphabet_size)");
    const Matrix features = io::read_features_csv(path, header);
    KMeansResult km = kmeans_quantize(features, clusters, split_seed(seed, "kmeans"));
    for (std::size_t k = 0; k < clusters; ++k) in.alphabet.push_back(std::to_string(k));
    in.sequences.push_back(Word(km.labels.begin(), km.labels.end()));
    in.quantizer = std::move(km);
  } else {
    throw InputError("unknown data format '" + format + "' (expected sequences or features)");
  }
  return in;
}

Hmm train_model(const std::vector<Word>& seqs, const std::vector<std::string>& alphabet, std::size_t states,
                std::size_t max_iterations, double tolerance, std::uint64_t seed, TrainingResult* log) {
  TrainingConfig cfg;
  cfg.num_states = states;
  cfg.max_iterations = max_iterations;
  cfg.tolerance = tolerance;
  cfg.seed = split_seed(seed, "baum-welch");
  TrainingResult res = baum_welch_train(seqs, alphabet, cfg);
  Hmm m = res.model;
  if (log) *log = std::move(res);
  return m;
}

struct TrainArgs {
  std::string data;
  std::string format = "sequences";
  bool header = false;
  std::size_t states = 2;
  std::size_t clusters = 0;
  std::size_t max_iterations = 200;
  std::string name;
};

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out) {
  const Resolved r = resolve(g);
  const TrainInput data = load_training_data(a.data, a.format, a.header, a.clusters, r.seed);
  TrainingResult log{Hmm({"0"}, {Matrix::Ones(1, 1)}), {}, 0, false, false, false, 0};
  train_model(data.sequences, data.alphabet, a.states, a.max_iterations, r.tolerance.value_or(1e-8), r.seed, &log);
  const std::string name = a.name.empty() ? fs::path(a.data).stem().string() + "-n" + std::to_string(a.states) : a.name;
  Json report;
  report["num_symbols"] = log.num_symbols;
  report["e_steps"] = log.log_likelihood.size();
  report["converged"] = log.converged;
  report["log_likelihood_bits"] = log.log_likelihood;
  report["per_symbol_log_likelihood_bits"] = log.per_symbol_log_likelihood();
  Json warnings = Json::array();
  if (!log.converged) warnings.push_back("did not converge within " + std::to_string(a.max_iterations) + " iterations");
  if (log.floored_columns) warnings.push_back("unoccupied states had their columns floored");
  if (log.ergodicity_floor) warnings.push_back("fitted chain was not ergodic; all entries floored");
  if (log.monotonicity_violations)
    warnings.push_back(std::to_string(log.monotonicity_violations) + " likelihood decreases");
  report["warnings"] = warnings;

  OutputSet files;
  files.add(r.out_dir / (file_token(name) + ".hmm.json"), io::dump(io::hmm_to_json(log.model)));
  files.add(r.out_dir / (file_token(name) + ".training.json"), io::dump(report));
  if (data.quantizer) {
    Json q;
    q["codebook"] = io::matrix_to_json(data.quantizer->codebook);
    q["iterations"] = data.quantizer->iterations;
    q["wcss_history"] = data.quantizer->wcss_history;
    files.add(r.out_dir / (file_token(name) + ".codebook.json"), io::dump(q));
  }
  files.commit();
  out << "trained " << a.states << "-state model, " << num(log.per_symbol_log_likelihood())
      << " bits/symbol, wrote " << file_token(name) << ".hmm.json\n";
  return kExitOk;
}

// --- certify ----------------------------------------------------------------

struct CertifyArgs {
  std::string model;
  std::string labelling = "sequential";
  std::string dims;
};

int cmd_certify(const CertifyArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Resolved r = resolve(g);
  const Hmm model = load_hmm(a.model);
  const auto strategy = LabellingStrategy::parse(a.labelling);
  const auto dims = parse_index_list(a.dims);
  if (dims.front() < 2) throw InputError("certificates need d~ >= 2 (log2 1 = 0)");
  if (dims.back() > model.num_states())
    throw InputError("d~ = " + std::to_string(dims.back()) + " exceeds the state count");
  const Prepared prep = prepare(model, strategy, 5);
  const std::string id = fs::path(a.model).stem().string();
  Json rows = Json::array();
  bool all = true;
  for (auto d : dims) {
    const BoundCertificate c = certify_bounds(prep.spectrum, prep.slice_rank, d);
    ResultRow row;
    row.key = {id, strategy.name(), d, r.seed};
    row.n_states = model.num_states();
    row.status = c.passed() ? "ok" : "certificate-failed";
    row.entropy = c.entropy;
    row.tail = c.tail;
    row.rank = c.rank;
    row.entropy_bound = c.entropy_bound;
    row.rank_bound = c.rank_bound;
    Json j = row_to_json(row);
    j["tail_within_entropy_bound"] = c.tail_within_entropy_bound;
    j["entropy_within_rank"] = c.entropy_within_rank;
    rows.push_back(std::move(j));
    all = all && c.passed();
    out << "d=" << d << " tail " << num(c.tail) << " <= " << num(c.entropy_bound) << " : "
        << (c.passed() ? "pass" : "FAIL") << "\n";
  }
  write_atomic(r.out_dir / (file_token(id) + "." + file_token(strategy.name()) + ".certificates.json"),
               io::dump(rows));
  if (!all) {
    err << "bound certificate violated\n";
    return kExitVerification;
  }
  return kExitOk;
}

// --- sample -----------------------------------------------------------------

struct SampleArgs {
  std::string qhmm;
  std::size_t length = 1000;
  std::size_t count = 1;
  std::string name;
};

int cmd_sample(const SampleArgs& a, const Globals& g, std::ostream& out) {
  const Resolved r = resolve(g);
  QhmmModel q;
  try {
    q = io::qhmm_from_json(io::read_json_file(a.qhmm));
  } catch (const Json::exception& e) {
    throw InputError("'" + a.qhmm + "': " + e.what());
  }
  const QhmmCheck check = check_qhmm(q);
  if (check.completeness_error > 1e-9) throw GaugeError("instrument is not trace preserving");
  std::vector<std::vector<std::string>> seqs;
  for (std::size_t i = 0; i < a.count; ++i) {
    const Word w = sample_sequence(q, a.length, split_seed(r.seed, "sample-" + std::to_string(i)));
    std::vector<std::string> labels;
    for (auto x : w) labels.push_back(q.alphabet[x]);
    seqs.push_back(std::move(labels));
  }
  std::string text;
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.size(); ++i) text += (i ? " " : "") + s[i];
    text += "\n";
  }
  const std::string name = a.name.empty() ? fs::path(a.qhmm).stem().string() : a.name;
  write_atomic(r.out_dir / (file_token(name) + ".samples.txt"), text);
  out << "wrote " << a.count << " x " << a.length << " symbols\n";
  return kExitOk;
}

// --- cdr --------------------------------------------------------------------

LinearGenerator load_generator(const fs::path& path) {
  const Json j = io::read_json_file(path);
  try {
    if (j.contains("kraus")) return liouville_generators(io::qhmm_from_json(j));
    return LinearGenerator::from_hmm(io::hmm_from_json(j));
  } catch (const Json::exception& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

struct CdrArgs {
  std::string p;
  std::string q;
  std::size_t cfdr_length = 0;
};

int cmd_cdr(const CdrArgs& a, const Globals& g, std::ostream& out) {
  const Resolved r = resolve(g);
  const LinearGenerator p = load_generator(a.p);
  const LinearGenerator q = load_generator(a.q);
  if (p.alphabet != q.alphabet) throw InputError("models are over different alphabets");
  const CdrResult c = cdr(p, q);
  Json j;
  j["R_C"] = c.rate;
  j["mu_p"] = c.mu_p;
  j["mu_q"] = c.mu_q;
  j["mu_pq"] = c.mu_pq;
  j["nonreal"] = c.nonreal;
  j["negative"] = c.negative;
  if (a.cfdr_length > 0) j["cfdr"] = cfdr_sequence(p, q, a.cfdr_length);
  write_atomic(r.out_dir / (file_token(fs::path(a.p).stem().string()) + "__" +
                            file_token(fs::path(a.q).stem().string()) + ".cdr.json"),
               io::dump(j));
  out << "R_C " << num(c.rate) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum compression of hidden Markov models", "qcomp"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t threads = 0;
  double tolerance = 0.0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed")->group("Global");
  auto* out_opt = app.add_option("--out-dir", out_dir, "Output directory (env QCOMP_OUT_DIR)")->group("Global");
  auto* thr_opt = app.add_option("--threads", threads, "Worker threads (env QCOMP_THREADS)")->group("Global");
  auto* tol_opt =
      app.add_option("--tolerance", tolerance, "Convergence tolerance of the optimiser / trainer")->group("Global");
  app.add_flag("--record-timing", g.record_timing, "Write wall times instead of 0")->group("Global");

  CompressArgs ca;
  auto* compress_cmd = app.add_subcommand("compress", "Dilate, truncate and reconstruct one model");
  compress_cmd->add_option("--model", ca.model, "HMM JSON")->required();
  compress_cmd->add_option("--labelling", ca.labelling, "Labelling strategy");
  compress_cmd->add_option("--dim", ca.dim, "Target bond dimension")->required();
  compress_cmd->add_option("--restarts", ca.restarts, "Optimiser runs");
  compress_cmd->add_option("--max-sweeps", ca.max_sweeps, "Sweeps per run");
  compress_cmd->add_option("--id", ca.id, "Model id (default: file stem)");

  std::string config;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a configured experiment sweep");
  sweep_cmd->add_option("config", config, "Sweep config JSON")->required();

  CompareArgs cmp;
  auto* compare_cmd = app.add_subcommand("compare-baseline", "Quantum truncation vs greedy state merging");
  compare_cmd->add_option("--model", cmp.model, "HMM JSON")->required();
  compare_cmd->add_option("--dims", cmp.dims, "Bond dimensions, e.g. 2-29")->required();
  compare_cmd->add_option("--states", cmp.states, "Merge targets, e.g. 2-29")->required();
  compare_cmd->add_option("--labelling", cmp.labelling, "Labelling strategy");
  compare_cmd->add_option("--restarts", cmp.restarts, "Optimiser runs");
  compare_cmd->add_option("--max-sweeps", cmp.max_sweeps, "Sweeps per run");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Fit an HMM to symbol sequences or features");
  train_cmd->add_option("--data", ta.data, "Data file")->required();
  train_cmd->add_option("--format", ta.format, "sequences or features");
  train_cmd->add_flag("--header", ta.header, "Feature CSV has a header row");
  train_cmd->add_option("--states", ta.states, "Hidden states")->required();
  train_cmd->add_option("--clusters", ta.clusters, "Quantizer size for feature input");
  train_cmd->add_option("--max-iterations", ta.max_iterations, "EM iterations");
  train_cmd->add_option("--name", ta.name, "Output name");

  CertifyArgs ce;
  auto* certify_cmd = app.add_subcommand("certify", "Tail and rank bound certificates");
  certify_cmd->add_option("--model", ce.model, "HMM JSON")->required();
  certify_cmd->add_option("--labelling", ce.labelling, "Labelling strategy");
  certify_cmd->add_option("--dims", ce.dims, "Bond dimensions >= 2")->required();

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Sample sequences from a QHMM");
  sample_cmd->add_option("--qhmm", sa.qhmm, "QHMM JSON")->required();
  sample_cmd->add_option("--length", sa.length, "Symbols per sequence");
  sample_cmd->add_option("--count", sa.count, "Number of sequences");
  sample_cmd->add_option("--name", sa.name, "Output name");

  CdrArgs cd;
  auto* cdr_cmd = app.add_subcommand("cdr", "Co-emission divergence rate of two models");
  cdr_cmd->add_option("--p", cd.p, "HMM or QHMM JSON")->required();
  cdr_cmd->add_option("--q", cd.q, "HMM or QHMM JSON")->required();
  cdr_cmd->add_option("--cfdr-length", cd.cfdr_length, "Also report finite-L Bhattacharyya rates up to L");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  if (*seed_opt) g.seed = seed;
  if (*out_opt) g.out_dir = out_dir;
  if (*thr_opt) g.threads = threads;
  if (*tol_opt) g.tolerance = tolerance;

  try {
    if (*compress_cmd) return cmd_compress(ca, g, out, err);
    if (*sweep_cmd) return cmd_sweep(config, g, out);
    if (*compare_cmd) return cmd_compare(cmp, g, out);
    if (*train_cmd) return cmd_train(ta, g, out);
    if (*certify_cmd) return cmd_certify(ce, g, out, err);
    if (*sample_cmd) return cmd_sample(sa, g, out);
    if (*cdr_cmd) return cmd_cdr(cd, g, out);
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitInput;
}

}  // namespace qcomp::pipeline
