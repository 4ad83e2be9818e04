#include <benchmark/benchmark.h>

#include "nldpe/acam.hpp"
#include "nldpe/crossbar.hpp"
#include "nldpe/dtcompile.hpp"
#include "nldpe/functions.hpp"
#include "nldpe/naf.hpp"
#include "nldpe/pipelines.hpp"

using namespace nldpe;

namespace {
NoiseSpec noisy() { return default_noise_spec(7); }
NoiseSpec off() {
  NoiseSpec s = default_noise_spec();
  s.scale = 0.0;
  return s;
}
}  // namespace

static void BM_Quantize(benchmark::State& state) {
  QuantSpec q;
  q.n_bits = 8;
  double x = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantize_level(x, q));
    x += 1e-6;
    if (x > 1.0) x = 0.0;
  }
}
BENCHMARK(BM_Quantize);

static void BM_CompileFunction(benchmark::State& state) {
  const auto& f = builtin("sigmoid");
  CompileOptions opts;
  opts.grid_points = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compile_function(f.fn, f.qspec, "sigmoid", opts));
  }
}
BENCHMARK(BM_CompileFunction)->Arg(1 << 14)->Arg(1 << 18);

static void BM_EvalUnit(benchmark::State& state) {
  const bool with_noise = state.range(0) != 0;
  auto c = compile_builtin("sigmoid");
  NoiseSpec spec = with_noise ? noisy() : off();
  AcamUnit u = program_unit(c, spec, 1);
  SearchContext ctx;
  if (with_noise) ctx.noise = &spec;
  double x = -8.0;
  std::uint64_t i = 0;
  for (auto _ : state) {
    ctx.search_index = ++i;
    benchmark::DoNotOptimize(eval_unit_level(u, x, ctx));
    x += 3e-4;
    if (x > 8.0) x = -8.0;
  }
}
BENCHMARK(BM_EvalUnit)->Arg(0)->Arg(1);

static void BM_Vmm(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Matrix w(n, n);
  for (std::size_t i = 0; i < w.data.size(); ++i)
    w.data[i] = uniform_at(1, 2, i, 3) * 2.0 - 1.0;
  NoiseSpec spec = noisy();
  CrossbarImage img = program_asl(w, spec, 2);
  std::vector<double> x(n, 0.5);
  std::uint64_t r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vmm(img, x, spec, 1, ++r));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Vmm)->Arg(16)->Arg(64)->Arg(256);

static void BM_SoftmaxPipeline(benchmark::State& state) {
  const std::size_t len = static_cast<std::size_t>(state.range(0));
  SoftmaxUnits su = make_softmax_units(len, off());
  std::vector<double> y(len);
  for (std::size_t i = 0; i < len; ++i) y[i] = uniform_at(4, 5, i, 6) * 4.0 - 2.0;
  SearchContext ctx;
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax_logexp(y, su, ctx));
  }
}
BENCHMARK(BM_SoftmaxPipeline)->Arg(16)->Arg(64);

static void BM_FinetuneEpoch(benchmark::State& state) {
  auto c = compile_builtin("sigmoid");
  NoiseSpec spec = noisy();
  NafConfig cfg;
  cfg.epochs = 1;
  cfg.samples_per_dt = 5000;
  cfg.batch = 5000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(finetune_dt(c, 7, spec, cfg));
  }
}
BENCHMARK(BM_FinetuneEpoch);

BENCHMARK_MAIN();
