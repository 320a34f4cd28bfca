#include <benchmark/benchmark.h>

#include "fedhin/metapath.hpp"
#include "fedhin/synthetic.hpp"

using namespace fedhin;

namespace {

void BM_MetapathAdjacency(benchmark::State& state, const char* spec) {
  SyntheticConfig sc;
  sc.authors = static_cast<std::size_t>(state.range(0));
  sc.papers = sc.authors;
  auto g = synthetic_hin(sc);
  const auto mp = parse_metapath(spec);
  for (auto _ : state) benchmark::DoNotOptimize(metapath_adjacency(g, mp).matrix.nonZeros());
}

void BM_SyntheticHin(benchmark::State& state) {
  SyntheticConfig sc;
  sc.authors = static_cast<std::size_t>(state.range(0));
  sc.papers = sc.authors;
  for (auto _ : state) benchmark::DoNotOptimize(synthetic_hin(sc).edge_count());
}

}  // namespace

BENCHMARK_CAPTURE(BM_MetapathAdjacency, APA, "APA")->Arg(400)->Arg(2000);
BENCHMARK_CAPTURE(BM_MetapathAdjacency, APPA, "APPA")->Arg(400)->Arg(2000);
BENCHMARK_CAPTURE(BM_MetapathAdjacency, APVPA, "APVPA")->Arg(400)->Arg(2000);
BENCHMARK(BM_SyntheticHin)->Arg(400)->Arg(2000);
