#include "qcomp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "qcomp/errors.hpp"

namespace qcomp::io {

namespace {

void emit(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        emit(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalars = true;
      for (const auto& e : j) scalars = scalars && !e.is_structured();
      if (scalars) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          emit(j[i], out, indent + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        emit(j[i], out, indent + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

[[noreturn]] void bad(const std::string& what) { throw InputError(what); }

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) bad(what + ": missing field '" + key + "'");
  return j.at(key);
}

std::vector<std::string> labels_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) bad(what + ": alphabet must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) bad(what + ": alphabet entries must be strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::size_t size_from_json(const Json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) bad(what + " must be a non-negative integer");
  return j.get<std::size_t>();
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump(const Json& j) {
  std::string out;
  emit(j, out, 0);
  out += "\n";
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) bad(what + ": expected a nonempty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) bad(what + ": rows must be nonempty arrays");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) bad(what + ": ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) bad(what + ": matrix entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) bad(what + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad(what + ": entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json hmm_to_json(const Hmm& model) {
  Json j;
  j["alphabet"] = model.alphabet();
  j["num_states"] = model.num_states();
  Json t = Json::object();
  for (std::size_t x = 0; x < model.alphabet_size(); ++x) t[model.alphabet()[x]] = matrix_to_json(model.transition(x));
  j["transitions"] = std::move(t);
  return j;
}

Hmm hmm_from_json(const Json& j) {
  const std::string what = "HMM JSON";
  const auto alphabet = labels_from_json(field(j, "alphabet", what), what);
  const std::size_t n = size_from_json(field(j, "num_states", what), what + " num_states");
  const Json& t = field(j, "transitions", what);
  if (!t.is_object()) bad(what + ": transitions must be an object keyed by symbol");
  if (t.size() != alphabet.size()) bad(what + ": transitions and alphabet list different symbols");
  std::vector<Matrix> mats;
  for (const auto& x : alphabet) {
    if (!t.contains(x)) bad(what + ": no transition matrix for symbol '" + x + "'");
    Matrix m = matrix_from_json(t.at(x), what + " transition '" + x + "'");
    if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n)
      bad(what + ": transition '" + x + "' is not " + std::to_string(n) + "x" + std::to_string(n));
    mats.push_back(std::move(m));
  }
  return Hmm(alphabet, std::move(mats));
}

Json dilated_to_json(const DilatedHmm& d) {
  Json j = hmm_to_json(d.as_hmm());
  j["base_alphabet"] = d.base.alphabet();
  j["aux_size"] = d.aux_size();
  Json lab = Json::object();
  const std::size_t n = d.base.num_states();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t x = 0; x < d.base.alphabet_size(); ++x) {
        const int y = d.labelling.at(s, t, x);
        if (y != Labelling::kUnlabelled)
          lab[std::to_string(s) + "," + std::to_string(t) + "," + d.base.alphabet()[x]] = y;
      }
  j["labelling"] = std::move(lab);
  return j;
}

DilatedHmm dilated_from_json(const Json& j) {
  const std::string what = "dilated HMM JSON";
  const Hmm composite = hmm_from_json(j);
  const auto base_alphabet = labels_from_json(field(j, "base_alphabet", what), what);
  const std::size_t dy = size_from_json(field(j, "aux_size", what), what + " aux_size");
  if (dy == 0 || composite.alphabet_size() != base_alphabet.size() * dy)
    bad(what + ": composite alphabet size does not equal |X| * aux_size");
  const std::size_t n = composite.num_states();
  std::vector<Matrix> base(base_alphabet.size(), Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  for (std::size_t x = 0; x < base_alphabet.size(); ++x)
    for (std::size_t y = 0; y < dy; ++y) {
      if (composite.alphabet()[x * dy + y] != composite_label(base_alphabet[x], y))
        bad(what + ": composite symbols are not in (x, y) order");
      base[x] += composite.transition(x * dy + y);
    }
  const Hmm base_model(base_alphabet, std::move(base));

  Labelling labelling(n, base_alphabet.size(), dy);
  const Json& lab = field(j, "labelling", what);
  if (!lab.is_object()) bad(what + ": labelling must be an object");
  for (auto it = lab.begin(); it != lab.end(); ++it) {
    const std::string& key = it.key();
    const auto c1 = key.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : key.find(',', c1 + 1);
    if (c2 == std::string::npos) bad(what + ": labelling key '" + key + "' is not 's,s',x'");
    std::size_t s = 0;
    std::size_t t = 0;
    try {
      s = std::stoul(key.substr(0, c1));
      t = std::stoul(key.substr(c1 + 1, c2 - c1 - 1));
    } catch (const std::exception&) {
      bad(what + ": labelling key '" + key + "' has non-numeric states");
    }
    const std::size_t x = base_model.symbol_index(key.substr(c2 + 1));
    if (s >= n || t >= n) bad(what + ": labelling key '" + key + "' names an unknown state");
    if (!it.value().is_number_integer()) bad(what + ": labels must be integers");
    labelling.set(s, t, x, it.value().get<int>());
  }
  DilatedHmm d = dilate(base_model, labelling);
  for (std::size_t c = 0; c < d.composite.size(); ++c)
    if (d.composite[c] != composite.transition(c)) bad(what + ": composite matrices disagree with the labelling");
  return d;
}

Json imps_to_json(const Imps& m) {
  Json j;
  j["alphabet"] = m.alphabet;
  j["bond_dim"] = m.bond_dim();
  j["gauge"] = to_string(m.gauge);
  Json t = Json::object();
  for (std::size_t a = 0; a < m.tensors.size(); ++a) t[m.alphabet.at(a)] = matrix_to_json(m.tensors[a]);
  j["tensors"] = std::move(t);
  j["schmidt"] = m.schmidt ? vector_to_json(*m.schmidt) : Json(nullptr);
  return j;
}

Imps imps_from_json(const Json& j) {
  const std::string what = "iMPS JSON";
  Imps m;
  m.alphabet = labels_from_json(field(j, "alphabet", what), what);
  const std::size_t d = size_from_json(field(j, "bond_dim", what), what + " bond_dim");
  const Json& g = field(j, "gauge", what);
  if (!g.is_string()) bad(what + ": gauge must be a string");
  m.gauge = parse_gauge(g.get<std::string>());
  const Json& t = field(j, "tensors", what);
  if (!t.is_object() || t.size() != m.alphabet.size()) bad(what + ": tensors must match the alphabet");
  for (const auto& a : m.alphabet) {
    if (!t.contains(a)) bad(what + ": no tensor for symbol '" + a + "'");
    Matrix mat = matrix_from_json(t.at(a), what + " tensor '" + a + "'");
    if (static_cast<std::size_t>(mat.rows()) != d || static_cast<std::size_t>(mat.cols()) != d)
      bad(what + ": tensor '" + a + "' is not bond_dim x bond_dim");
    m.tensors.push_back(std::move(mat));
  }
  if (j.contains("schmidt") && !j.at("schmidt").is_null()) m.schmidt = vector_from_json(j.at("schmidt"), what + " schmidt");
  return m;
}

Json qhmm_to_json(const QhmmModel& q) {
  Json j;
  j["alphabet"] = q.alphabet;
  j["bond_dim"] = q.bond_dim();
  Json k = Json::object();
  for (std::size_t x = 0; x < q.alphabet.size(); ++x) {
    Json family = Json::array();
    for (const auto& op : q.kraus[x]) family.push_back(matrix_to_json(op));
    k[q.alphabet[x]] = std::move(family);
  }
  j["kraus"] = std::move(k);
  j["rho_star"] = matrix_to_json(q.rho_star);
  return j;
}

QhmmModel qhmm_from_json(const Json& j) {
  const std::string what = "QHMM JSON";
  QhmmModel q;
  q.alphabet = labels_from_json(field(j, "alphabet", what), what);
  const std::size_t d = size_from_json(field(j, "bond_dim", what), what + " bond_dim");
  const Json& k = field(j, "kraus", what);
  if (!k.is_object() || k.size() != q.alphabet.size()) bad(what + ": kraus must match the alphabet");
  for (const auto& x : q.alphabet) {
    if (!k.contains(x) || !k.at(x).is_array()) bad(what + ": no Kraus family for symbol '" + x + "'");
    std::vector<Matrix> family;
    for (const auto& op : k.at(x)) {
      Matrix m = matrix_from_json(op, what + " Kraus operator for '" + x + "'");
      if (static_cast<std::size_t>(m.rows()) != d || static_cast<std::size_t>(m.cols()) != d)
        bad(what + ": Kraus operator is not bond_dim x bond_dim");
      family.push_back(std::move(m));
    }
    if (family.empty()) bad(what + ": empty Kraus family for symbol '" + x + "'");
    q.kraus.push_back(std::move(family));
  }
  q.rho_star = matrix_from_json(field(j, "rho_star", what), what + " rho_star");
  if (static_cast<std::size_t>(q.rho_star.rows()) != d || static_cast<std::size_t>(q.rho_star.cols()) != d)
    bad(what + ": rho_star is not bond_dim x bond_dim");
  return q;
}

Json truncation_to_json(const TruncationResult& t, bool record_timing) {
  Json j;
  j["fidelity"] = t.fidelity;
  j["fidelity_rate"] = t.fidelity_rate;
  j["initial_fidelity"] = t.initial_fidelity;
  j["sweeps"] = t.sweeps;
  j["best_restart"] = t.best_restart;
  j["converged"] = t.converged;
  j["warning"] = t.warning;
  j["restart_fidelities"] = t.restart_fidelities;
  j["wall_time_seconds"] = record_timing ? t.wall_time_seconds : 0.0;
  j["imps"] = imps_to_json(t.truncated);
  return j;
}

std::vector<std::vector<std::string>> read_sequences(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> seq;
    for (std::string tok; ls >> tok;) seq.push_back(tok);
    if (!seq.empty()) out.push_back(std::move(seq));
  }
  if (out.empty()) throw InputError("'" + path.string() + "' contains no symbols");
  return out;
}

void write_sequences(const std::filesystem::path& path, const std::vector<std::vector<std::string>>& sequences) {
  std::string text;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) text += ' ';
      text += seq[i];
    }
    text += '\n';
  }
  write_text_file(path, text);
}

Matrix read_features_csv(const std::filesystem::path& path, bool has_header) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool skipped = !has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!skipped) {
      skipped = true;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(v))
        throw InputError(path.string() + ":" + std::to_string(lineno) + ": '" + cell + "' is not a finite number");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(rows.front().size()) + " columns");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("'" + path.string() + "' contains no feature rows");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return out;
}

}  // namespace qcomp::io
