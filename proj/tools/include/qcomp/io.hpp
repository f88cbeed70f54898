#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcomp/dilation.hpp"
#include "qcomp/hmm.hpp"
#include "qcomp/imps.hpp"
#include "qcomp/qhmm.hpp"
#include "qcomp/truncation.hpp"

namespace qcomp::io {

using Json = nlohmann::json;

/// Pretty JSON with 17-significant-digit floats (read -> write is bit-stable).
/// Non-finite floats are written as null.
std::string dump(const Json& j);
std::string format_double(double v);

Json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

Json hmm_to_json(const Hmm& model);
Hmm hmm_from_json(const Json& j);

/// HMM JSON over the composite alphabet plus "base_alphabet" and a
/// "labelling" object mapping "s,s',x" to y.
Json dilated_to_json(const DilatedHmm& d);
DilatedHmm dilated_from_json(const Json& j);

Json imps_to_json(const Imps& m);
Imps imps_from_json(const Json& j);

Json qhmm_to_json(const QhmmModel& q);
QhmmModel qhmm_from_json(const Json& j);

/// Wall time is written as 0 unless `record_timing` is set.
Json truncation_to_json(const TruncationResult& t, bool record_timing);

/// One sequence per line, whitespace-separated labels; blank lines skipped.
std::vector<std::vector<std::string>> read_sequences(const std::filesystem::path& path);
void write_sequences(const std::filesystem::path& path, const std::vector<std::vector<std::string>>& sequences);

/// Numeric CSV, one point per row.
Matrix read_features_csv(const std::filesystem::path& path, bool has_header);

}  // namespace qcomp::io
