#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "models.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/io.hpp"
#include "qcomp/truncation.hpp"

using namespace qcomp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "qcomp-io-test" / name;
  fs::create_directories(p.parent_path());
  return p;
}

}  // namespace

TEST_CASE("float formatting keeps every bit") {
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 123456.789}) CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "null");
  CHECK(io::format_double(std::nan("")) == "null");
}

TEST_CASE("hmm json round-trips bit-identically") {
  const Hmm m = testing::random_hmm(4, 3, 7);
  const std::string text = io::dump(io::hmm_to_json(m));
  const Hmm back = io::hmm_from_json(io::Json::parse(text));
  for (std::size_t x = 0; x < 3; ++x) CHECK(back.transition(x) == m.transition(x));
  CHECK(io::dump(io::hmm_to_json(back)) == text);
}

TEST_CASE("dilated, imps and qhmm json round-trip") {
  const Hmm m = testing::random_hmm(3, 2, 2);
  const DilatedHmm d = dilate(m, make_labelling(m, LabellingStrategy::parse("random:4")));
  const std::string dt = io::dump(io::dilated_to_json(d));
  const DilatedHmm d2 = io::dilated_from_json(io::Json::parse(dt));
  CHECK(d2.labelling == d.labelling);
  CHECK(io::dump(io::dilated_to_json(d2)) == dt);

  const Imps left = left_canonical(qsample_tensors(d));
  const std::string it = io::dump(io::imps_to_json(left));
  const Imps left2 = io::imps_from_json(io::Json::parse(it));
  CHECK(left2.gauge == Gauge::left);
  CHECK(io::dump(io::imps_to_json(left2)) == it);

  const QhmmModel q = reconstruct_qhmm(left, m.alphabet(), d.aux_size());
  const std::string qt = io::dump(io::qhmm_to_json(q));
  CHECK(io::dump(io::qhmm_to_json(io::qhmm_from_json(io::Json::parse(qt)))) == qt);
}

TEST_CASE("dilated json must agree with its labelling") {
  const Hmm m = testing::b2();
  const DilatedHmm d = dilate(m, make_labelling(m, LabellingStrategy::parse("sequential")));
  io::Json j = io::dilated_to_json(d);
  j["labelling"]["0,0,0"] = 1;
  j["labelling"]["0,1,0"] = 0;
  CHECK_THROWS_AS(io::dilated_from_json(j), InputError);
}

TEST_CASE("malformed model files") {
  const fs::path p = scratch("bad.json");
  io::write_text_file(p, "{\"alphabet\": [\"a\"], ");
  CHECK_THROWS_AS(io::read_json_file(p), InputError);
  CHECK_THROWS_AS(io::read_json_file(scratch("missing.json")), InputError);
  CHECK_THROWS_AS(io::hmm_from_json(io::Json::parse(R"({"alphabet":["a"],"num_states":1})")), InputError);
  CHECK_THROWS_AS(
      io::hmm_from_json(io::Json::parse(R"({"alphabet":["a"],"num_states":2,"transitions":{"a":[[1]]}})")),
      InputError);
  CHECK_THROWS_AS(io::hmm_from_json(io::Json::parse(R"({"alphabet":["a"],"num_states":1,"transitions":{"a":[[0.5]]}})")),
                  InputError);
}

TEST_CASE("sequence and feature files") {
  const fs::path s = scratch("seq.txt");
  io::write_sequences(s, {{"a", "b", "a"}, {"b"}});
  const auto seqs = io::read_sequences(s);
  REQUIRE(seqs.size() == 2);
  CHECK(seqs[0] == std::vector<std::string>{"a", "b", "a"});

  const fs::path f = scratch("feat.csv");
  io::write_text_file(f, "x,y\n1,2\n3.5,-4\n");
  const Matrix m = io::read_features_csv(f, true);
  CHECK(m.rows() == 2);
  CHECK(m(1, 1) == -4.0);
  CHECK_THROWS_AS(io::read_features_csv(f, false), InputError);
  io::write_text_file(f, "1,2\n3\n");
  CHECK_THROWS_AS(io::read_features_csv(f, false), InputError);
  io::write_text_file(f, "1,nan\n");
  CHECK_THROWS_AS(io::read_features_csv(f, false), InputError);
}
