#include <benchmark/benchmark.h>

#include "qcomp/dilation.hpp"
#include "qcomp/divergence.hpp"
#include "qcomp/imps.hpp"
#include "qcomp/qhmm.hpp"
#include "qcomp/random.hpp"
#include "qcomp/training.hpp"
#include "qcomp/truncation.hpp"

using namespace qcomp;

namespace {

Hmm dense_model(std::size_t n, std::size_t x, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Matrix> t(x, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  for (auto& m : t)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 0.05 + uniform01(rng);
  for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(n); ++s) {
    double total = 0.0;
    for (const auto& m : t) total += m.col(s).sum();
    for (auto& m : t) m.col(s) /= total;
  }
  std::vector<std::string> alphabet;
  for (std::size_t i = 0; i < x; ++i) alphabet.push_back(std::to_string(i));
  return Hmm(alphabet, std::move(t));
}

Imps qsample(const Hmm& m) {
  return qsample_tensors(dilate(m, make_labelling(m, LabellingStrategy::parse("sequential"))));
}

void BM_TransferApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Imps q = qsample(dense_model(n, 3, 1));
  const TransferMap map(q.tensors, q.tensors);
  Matrix x = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (auto _ : state) {
    x = map.apply_right(x);
    x /= x.trace();
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_TransferApply)->Arg(10)->Arg(30);

void BM_CanonicalForm(benchmark::State& state) {
  const Imps q = qsample(dense_model(static_cast<std::size_t>(state.range(0)), 3, 2));
  for (auto _ : state) benchmark::DoNotOptimize(canonical_form(q).schmidt.data());
}
BENCHMARK(BM_CanonicalForm)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_Truncate(benchmark::State& state) {
  const Imps q = qsample(dense_model(20, 3, 3));
  TruncationOptions opt;
  opt.target_dim = static_cast<std::size_t>(state.range(0));
  opt.restarts = 1;
  for (auto _ : state) benchmark::DoNotOptimize(variational_truncate(q, opt).fidelity);
}
BENCHMARK(BM_Truncate)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_CdrQuantum(benchmark::State& state) {
  const Hmm m = dense_model(20, 3, 4);
  const auto d = dilate(m, make_labelling(m, LabellingStrategy::parse("sequential")));
  TruncationOptions opt;
  opt.target_dim = static_cast<std::size_t>(state.range(0));
  opt.restarts = 1;
  const QhmmModel q = reconstruct_qhmm(variational_truncate(qsample_tensors(d), opt), m.alphabet(), d.aux_size());
  const LinearGenerator p = LinearGenerator::from_hmm(m);
  const LinearGenerator g = liouville_generators(q);
  for (auto _ : state) benchmark::DoNotOptimize(cdr(p, g).rate);
}
BENCHMARK(BM_CdrQuantum)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_BaumWelchIteration(benchmark::State& state) {
  const Hmm m = dense_model(static_cast<std::size_t>(state.range(0)), 3, 5);
  const Word data = sample_hmm(m, 20000, 6);
  TrainingConfig cfg;
  cfg.num_states = m.num_states();
  cfg.max_iterations = 1;
  for (auto _ : state) benchmark::DoNotOptimize(baum_welch_train({data}, m.alphabet(), cfg).log_likelihood.back());
}
BENCHMARK(BM_BaumWelchIteration)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
