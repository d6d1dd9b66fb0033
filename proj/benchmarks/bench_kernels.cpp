#include <benchmark/benchmark.h>

#include <random>

#include "cenic/codec.hpp"
#include "cenic/conv.hpp"
#include "cenic/entropy.hpp"
#include "cenic/gdn.hpp"
#include "cenic/image.hpp"

using namespace cenic;

namespace {

template <typename T>
BasicTensor<T> noise(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  BasicTensor<T> t(s);
  for (auto& v : t.data()) v = static_cast<T>(d(rng));
  return t;
}

// args: channels, spatial size
void BM_Conv5x5s2(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), hw = static_cast<int>(state.range(1));
  const auto x = noise<float>({1, c, hw, hw}, 1);
  const BasicConvWeights<float> w{noise<float>({c, c, 5, 5}, 2), noise<float>({c, 1, 1, 1}, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, 2));
  state.counters["flops"] =
      benchmark::Counter(2.0 * 25 * c * c * (hw / 2) * (hw / 2), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv5x5s2)->Args({64, 64})->Args({192, 32})->Unit(benchmark::kMillisecond);

void BM_Deconv5x5s2(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), hw = static_cast<int>(state.range(1));
  const auto x = noise<float>({1, c, hw, hw}, 1);
  const BasicConvWeights<float> w{noise<float>({c, c, 5, 5}, 2), noise<float>({c, 1, 1, 1}, 3)};
  for (auto _ : state) benchmark::DoNotOptimize(deconv2d(x, w, 2));
  state.counters["flops"] =
      benchmark::Counter(2.0 * 25 * c * c * hw * hw, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Deconv5x5s2)->Args({64, 32})->Args({192, 16})->Unit(benchmark::kMillisecond);

// arg: 0 classic, 1 simplified. Third decoder layer shape at 512x768.
void BM_Igdn(benchmark::State& state) {
  const GdnMode mode = state.range(0) == 0 ? GdnMode::classic : GdnMode::simplified;
  const auto x = noise<float>({1, 320, 128, 192}, 4);
  const auto p = gdn_init(320, mode, GdnDirection::multiply).cast<float>();
  for (auto _ : state) benchmark::DoNotOptimize(gdn_eval(x, p));
  state.SetLabel(std::string(to_string(mode)));
}
BENCHMARK(BM_Igdn)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BuildCdf(benchmark::State& state) {
  double s = 0.11;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_cdf(0.0, s));
    s = s > 30 ? 0.11 : s * 1.01;
  }
}
BENCHMARK(BM_BuildCdf);

void BM_RangeCoder(benchmark::State& state) {
  const std::size_t n = 1 << 16;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0, 3);
  std::vector<CdfTable> tables;
  for (int i = 0; i < 16; ++i) tables.push_back(build_cdf(0, 0.5 + i));
  std::vector<CdfTable> per_symbol;
  std::vector<int> symbols;
  for (std::size_t i = 0; i < n; ++i) {
    per_symbol.push_back(tables[i % 16]);
    symbols.push_back(static_cast<int>(std::lround(d(rng) * (0.5 + i % 16) / 3)));
  }
  const bool decode = state.range(0) == 1;
  const auto bytes = rc_encode(symbols, per_symbol);
  for (auto _ : state) {
    if (decode)
      benchmark::DoNotOptimize(rc_decode(bytes, per_symbol));
    else
      benchmark::DoNotOptimize(rc_encode(symbols, per_symbol));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
  state.SetLabel(decode ? "decode" : "encode");
}
BENCHMARK(BM_RangeCoder)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DecodeTiny(benchmark::State& state) {
  const CodecF codec(init_model(tiny_spec(), 1).cast<float>());
  const Bitstream bs = codec.encode(synthetic_images(1, 256, 256, 1)[0]);
  for (auto _ : state) benchmark::DoNotOptimize(codec.decode(bs));
}
BENCHMARK(BM_DecodeTiny)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
