#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "models.hpp"
#include "qcomp/errors.hpp"
#include "qcomp/io.hpp"
#include "qcomp/pipeline.hpp"

using namespace qcomp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "qcomp-pipeline-test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = pipeline::run_cli(args, o, e);
  if (out) *out = o.str() + e.str();
  return code;
}

std::size_t file_count(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) n += e.is_regular_file() ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("index lists") {
  CHECK(pipeline::parse_index_list("1,3,5-7") == std::vector<std::size_t>{1, 3, 5, 6, 7});
  CHECK(pipeline::parse_index_list("4, 2,2") == std::vector<std::size_t>{2, 4});
  CHECK_THROWS_AS(pipeline::parse_index_list("3-1"), InputError);
  CHECK_THROWS_AS(pipeline::parse_index_list("a"), InputError);
  CHECK_THROWS_AS(pipeline::parse_index_list(""), InputError);
}

TEST_CASE("result rows round-trip through csv") {
  pipeline::ResultRow r;
  r.key = {"m", "random:3", 2, 5};
  r.fidelity = 0.1;
  r.message = "a, \"quoted\" note";
  const fs::path dir = fresh_dir("rows");
  io::write_text_file(dir / "r.csv", pipeline::render_results({r}));
  const auto back = pipeline::read_results(dir / "r.csv");
  REQUIRE(back.size() == 1);
  CHECK(back[0].key == r.key);
  CHECK(*back[0].fidelity == 0.1);
  CHECK(back[0].message == r.message);
  CHECK_FALSE(back[0].rate.has_value());
}

TEST_CASE("compress writes artifacts and is lossless at full dimension") {
  const fs::path dir = fresh_dir("compress");
  io::write_text_file(dir / "b2.json", io::dump(io::hmm_to_json(testing::b2())));
  const fs::path out = dir / "out";
  CHECK(run({"compress", "--model", (dir / "b2.json").string(), "--dim", "2", "--out-dir", out.string()}) == 0);
  const auto rows = pipeline::read_results(out / "b2.sequential.d2.results.csv");
  REQUIRE(rows.size() == 1);
  CHECK(*rows[0].fidelity == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(*rows[0].rate) <= 1e-8);
  CHECK(fs::exists(out / "b2.sequential.dilated.json"));
  CHECK(fs::exists(out / "b2.sequential.d2.qhmm.json"));
  CHECK(fs::exists(out / "b2.sequential.d2.imps.json"));
}

TEST_CASE("compress of a bernoulli source at d=1") {
  const fs::path dir = fresh_dir("bern");
  io::write_text_file(dir / "bern.json", io::dump(io::hmm_to_json(build_bernoulli(0.5))));
  CHECK(run({"compress", "--model", (dir / "bern.json").string(), "--dim", "1", "--out-dir", dir.string()}) == 0);
  const auto rows = pipeline::read_results(dir / "bern.sequential.d1.results.csv");
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(*rows[0].rate) <= 1e-10);
}

TEST_CASE("error contract") {
  const fs::path dir = fresh_dir("errors");
  io::write_text_file(dir / "bad.json", "{\"alphabet\": [");
  const fs::path out = dir / "out";
  CHECK(run({"compress", "--model", (dir / "bad.json").string(), "--dim", "1", "--out-dir", out.string()}) == 1);
  CHECK(file_count(out) == 0);
  io::write_text_file(dir / "b2.json", io::dump(io::hmm_to_json(testing::b2())));
  CHECK(run({"compress", "--model", (dir / "b2.json").string(), "--dim", "3", "--out-dir", out.string()}) == 1);
  CHECK(run({"compress", "--model", (dir / "b2.json").string(), "--dim", "1", "--labelling", "zigzag",
             "--out-dir", out.string()}) == 1);
  CHECK(run({"frobnicate"}) == 1);
  CHECK(run({"certify", "--model", (dir / "b2.json").string(), "--dims", "1", "--out-dir", out.string()}) == 1);
  CHECK(file_count(out) == 0);
}

TEST_CASE("output directory precedence") {
  const fs::path dir = fresh_dir("precedence");
  io::write_text_file(dir / "b2.json", io::dump(io::hmm_to_json(testing::b2())));
  const std::string model = (dir / "b2.json").string();
  ::setenv("QCOMP_OUT_DIR", (dir / "from-env").string().c_str(), 1);
  CHECK(run({"certify", "--model", model, "--dims", "2"}) == 0);
  CHECK(fs::exists(dir / "from-env" / "b2.sequential.certificates.json"));
  CHECK(run({"certify", "--model", model, "--dims", "2", "--out-dir", (dir / "from-flag").string()}) == 0);
  CHECK(fs::exists(dir / "from-flag" / "b2.sequential.certificates.json"));
  ::setenv("QCOMP_THREADS", "0", 1);
  CHECK(run({"certify", "--model", model, "--dims", "2"}) == 1);
  ::unsetenv("QCOMP_THREADS");
  ::unsetenv("QCOMP_OUT_DIR");
}

TEST_CASE("sweep is deterministic and resumable") {
  const fs::path dir = fresh_dir("sweep");
  io::write_text_file(dir / "cfg.json", R"({"models": {"tns": {"N": [3], "p": [0.3, 0.7]}},
    "labellings": ["sequential", "probability-descending"], "dims": "all", "restarts": 2, "seeds": [1]})");
  const std::string cfg = (dir / "cfg.json").string();
  REQUIRE(run({"sweep", cfg, "--out-dir", (dir / "a").string()}) == 0);
  REQUIRE(run({"sweep", cfg, "--out-dir", (dir / "b").string(), "--threads", "2"}) == 0);
  const std::string a = io::read_text_file(dir / "a" / "results.csv");
  CHECK(a == io::read_text_file(dir / "b" / "results.csv"));
  CHECK(io::read_text_file(dir / "a" / "spectra.csv") == io::read_text_file(dir / "b" / "spectra.csv"));
  const auto rows = pipeline::read_results(dir / "a" / "results.csv");
  CHECK(rows.size() == 12);
  for (const auto& r : rows) {
    CHECK(r.status == "ok");
    CHECK(r.wall_time == 0.0);
  }
  // drop a row and resume
  std::string truncated = a.substr(0, a.rfind('\n', a.size() - 2) + 1);
  io::write_text_file(dir / "a" / "results.csv", truncated);
  std::string log;
  REQUIRE(run({"sweep", cfg, "--out-dir", (dir / "a").string()}, &log) == 0);
  CHECK(log.find("11 resumed") != std::string::npos);
  CHECK(io::read_text_file(dir / "a" / "results.csv") == a);
}

TEST_CASE("sweep config errors") {
  const fs::path dir = fresh_dir("sweep-bad");
  io::write_text_file(dir / "cfg.json", R"({"models": {"tns": {"N": [3], "p": [0.3]}}, "labellings": ["sequential"],
    "dims": [1, 4]})");
  CHECK(run({"sweep", (dir / "cfg.json").string(), "--out-dir", dir.string()}) == 1);
  io::write_text_file(dir / "cfg.json", R"({"labellings": ["sequential"]})");
  CHECK(run({"sweep", (dir / "cfg.json").string(), "--out-dir", dir.string()}) == 1);
}

TEST_CASE("compare-baseline on a model with duplicate states") {
  Matrix t0(3, 3), t1(3, 3);
  t0 << 0.3, 0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1;
  t1 << 0.2, 0.3, 0.3, 0.2, 0.15, 0.15, 0.1, 0.15, 0.15;
  const Hmm m({"a", "b"}, {t0, t1});
  pipeline::RunSettings s;
  s.restarts = 2;
  const auto rows = pipeline::compare_baseline(m, {1, 2, 3}, {2, 3}, LabellingStrategy::parse("sequential"), s);
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) {
    CHECK(r.status == "ok");
    if (r.method == "classical-merge") CHECK(std::abs(*r.rate) <= 1e-10);
    if (r.memory_dim == 3) CHECK(std::abs(*r.rate) <= 1e-8);
  }
  const fs::path dir = fresh_dir("compare");
  io::write_text_file(dir / "m.json", io::dump(io::hmm_to_json(m)));
  CHECK(run({"compare-baseline", "--model", (dir / "m.json").string(), "--dims", "1-3", "--states", "2-3",
             "--restarts", "2", "--out-dir", dir.string()}) == 0);
  CHECK(fs::exists(dir / "comparison.csv"));
  const std::string plot = io::read_text_file(dir / "plots" / "compare__classical-merge.csv");
  CHECK(plot.find("1.0000000000000001e-09") != std::string::npos);
}

TEST_CASE("train, sample and cdr commands") {
  const fs::path dir = fresh_dir("train");
  const Word w = sample_hmm(build_bernoulli(0.5), 10000, 5);
  std::vector<std::string> labels;
  for (auto x : w) labels.push_back(x ? "T" : "H");
  io::write_sequences(dir / "coin.txt", {labels});
  const std::string data = (dir / "coin.txt").string();
  REQUIRE(run({"train", "--data", data, "--states", "1", "--out-dir", (dir / "a").string()}) == 0);
  REQUIRE(run({"train", "--data", data, "--states", "1", "--out-dir", (dir / "b").string()}) == 0);
  const std::string model = io::read_text_file(dir / "a" / "coin-n1.hmm.json");
  CHECK(model == io::read_text_file(dir / "b" / "coin-n1.hmm.json"));
  const Hmm fit = io::hmm_from_json(io::Json::parse(model));
  CHECK(std::abs(fit.transition(0)(0, 0) - 0.5) < 0.02);

  io::write_text_file(dir / "feat.csv", "0,0\n0.1,0\n5,5\n5.1,5\n0,5\n0,5.1\n5,0\n5.1,0\n0,0.1\n5,5.1\n");
  REQUIRE(run({"train", "--data", (dir / "feat.csv").string(), "--format", "features", "--clusters", "4", "--states",
               "1", "--out-dir", dir.string()}) == 0);
  const Hmm q = io::hmm_from_json(io::read_json_file(dir / "feat-n1.hmm.json"));
  CHECK(q.alphabet() == std::vector<std::string>{"0", "1", "2", "3"});

  io::write_text_file(dir / "b2.json", io::dump(io::hmm_to_json(testing::b2())));
  REQUIRE(run({"compress", "--model", (dir / "b2.json").string(), "--dim", "1", "--out-dir", dir.string()}) == 0);
  const std::string qhmm = (dir / "b2.sequential.d1.qhmm.json").string();
  REQUIRE(run({"sample", "--qhmm", qhmm, "--length", "50", "--count", "3", "--out-dir", dir.string()}) == 0);
  const auto seqs = io::read_sequences(dir / "b2.sequential.d1.qhmm.samples.txt");
  CHECK(seqs.size() == 3);
  REQUIRE(run({"cdr", "--p", (dir / "b2.json").string(), "--q", qhmm, "--cfdr-length", "3", "--out-dir",
               dir.string()}) == 0);
  const auto j = io::read_json_file(dir / "b2__b2.sequential.d1.qhmm.cdr.json");
  CHECK(j.at("R_C").get<double>() > 0.0);
  CHECK(j.at("cfdr").size() == 3);
}
