// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the listed numbers. Exit status is non-zero
// when any selected criterion fails or overruns its time budget.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cenic/archspec.hpp"
#include "cenic/bench.hpp"
#include "cenic/codec.hpp"
#include "cenic/conv.hpp"
#include "cenic/entropy.hpp"
#include "cenic/gdn.hpp"
#include "cenic/image.hpp"
#include "cenic/metrics.hpp"
#include "cenic/shrink.hpp"
#include "cenic/timing.hpp"
#include "cenic/trainer.hpp"
#include "cenic/two_phase.hpp"
#include "oracles.hpp"

using namespace cenic;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records a sub-check; the first failure keeps its message at the front.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "FAILED " << what << "; ";
    }
  }
};

std::string g(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ------------------------------------------------------------------ 1

CdfTable random_table(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 300);
  std::exponential_distribution<double> mass(1.0);
  std::vector<double> m(size(rng));
  for (double& v : m) v = mass(rng);
  m[rng() % m.size()] *= 1e-12;
  const auto counts = quantize_masses(m);
  CdfTable t;
  t.min_symbol = static_cast<int>(rng() % 201) - 100;
  t.cdf.push_back(0);
  for (auto c : counts) t.cdf.push_back(t.cdf.back() + c);
  t.escape = rng() % 2 == 0;  // the last entry becomes the escape
  t.validate();
  return t;
}

void range_coder(Outcome& o) {
  std::mt19937_64 rng(101);
  std::vector<CdfTable> pool;
  for (int i = 0; i < 1000; ++i) pool.push_back(random_table(rng));
  const int n = 100000;
  std::vector<CdfTable> tables;
  std::vector<int> symbols;
  tables.reserve(n);
  symbols.reserve(n);
  int escapes = 0;
  for (int i = 0; i < n; ++i) {
    const CdfTable& t = pool[rng() % pool.size()];
    tables.push_back(t);
    if (t.escape && rng() % 100 == 0) {
      const int off = 1 + static_cast<int>(rng() % 500);
      symbols.push_back(rng() % 2 ? t.max_symbol() + off : t.min_symbol - off);
      ++escapes;
    } else {
      symbols.push_back(t.min_symbol + static_cast<int>(rng() % t.alphabet_size()));
    }
  }
  const auto bytes = rc_encode(symbols, tables);
  const auto back = rc_decode(bytes, tables);
  o.check(back == symbols, "random-table round trip");
  o.detail << n << " symbols (" << escapes << " escaped) -> " << bytes.size() << " B exact=" << (back == symbols);

  const std::vector<double> flat(256, 1.0);
  CdfTable u;
  u.cdf.push_back(0);
  for (auto c : quantize_masses(flat)) u.cdf.push_back(u.cdf.back() + c);
  std::vector<int> us(10000);
  for (int& s : us) s = static_cast<int>(rng() % 256);
  const std::vector<CdfTable> ut(us.size(), u);
  const auto ub = rc_encode(us, ut);
  o.check(ub.size() >= 9700 && ub.size() <= 10300, "uniform-256 length " + std::to_string(ub.size()));
  o.check(rc_decode(ub, ut) == us, "uniform-256 round trip");
  o.detail << "; uniform 256 x 1e4 -> " << ub.size() << " B";
}

// ------------------------------------------------------------------ 2

void conv_correctness(Outcome& o) {
  std::mt19937_64 rng(202);
  double worst_conv = 0, worst_deconv = 0, worst_adj = 0;
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> c(1, 8), hw(1, 16), s(1, 3), kk(0, 2);
    const int k = 1 + 2 * kk(rng);
    const int stride = s(rng);
    const int cin = c(rng), cout = c(rng);
    TensorF x = oracle::random_tensor<float>({1 + t % 3, cin, hw(rng), hw(rng)}, rng);
    const auto w = oracle::random_weights<float>(cout, cin, k, rng);
    auto rel = [](const TensorF& a, const TensorF& b) {
      double m = 0;
      for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(double(a[i]) - b[i]) / std::max(1.0, std::abs(double(b[i]))));
      return m;
    };
    worst_conv = std::max(worst_conv, rel(conv2d(x, w, stride), oracle::conv_loops(x, w, stride)));
    worst_deconv = std::max(worst_deconv, rel(deconv2d(x, w, stride), oracle::deconv_loops(x, w, stride)));

    // <conv(x), y> == <x, deconv(y)> with the kernel read transposed.
    TensorF xa = oracle::random_tensor<float>({1, cin, stride * (1 + t % 7), stride * (1 + t % 5)}, rng);
    const BasicConvWeights<float> fwd{w.kernel, TensorF({cout, 1, 1, 1})};
    const TensorF y = oracle::random_tensor<float>(conv2d(xa, fwd, stride).shape(), rng);
    TensorF kt({cin, cout, k, k});
    for (int a = 0; a < cout; ++a)
      for (int b = 0; b < cin; ++b)
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) kt.at(b, a, dy, dx) = w.kernel.at(a, b, dy, dx);
    const BasicConvWeights<float> adj{kt, TensorF({cin, 1, 1, 1})};
    const TensorF cx = conv2d(xa, fwd, stride);
    const TensorF dy = deconv2d(y, adj, stride);
    double lhs = 0, rhs = 0;
    for (std::size_t i = 0; i < cx.size(); ++i) lhs += double(cx[i]) * y[i];
    for (std::size_t i = 0; i < xa.size(); ++i) rhs += double(xa[i]) * dy[i];
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  o.check(worst_conv <= 1e-6, "conv vs loops " + g(worst_conv));
  o.check(worst_deconv <= 1e-6, "deconv vs loops " + g(worst_deconv));
  o.check(worst_adj <= 1e-4, "adjoint " + g(worst_adj));
  o.detail << "100 f32 instances: conv err " << g(worst_conv) << ", deconv err " << g(worst_deconv)
           << ", adjoint rel err " << g(worst_adj);
}

// ------------------------------------------------------------------ 3

// Central-difference check of d<f(x), w>/dx for a tape-built f.
double fd_unary(const std::function<Var(Tape&, Var)>& f, const Tensor& x0, std::mt19937_64& rng, int probes = 12) {
  Tensor w;
  {
    Tape t;
    w = oracle::random_tensor<double>(f(t, t.constant(x0)).shape(), rng);
  }
  Tape t;
  Var x = t.leaf(x0);
  t.backward(f(t, x), w);
  auto value = [&](const Tensor& xv) {
    Tape s;
    return dot(f(s, s.constant(xv)).value(), w);
  };
  return oracle::fd_check(value, x0, t.grad(x), probes, rng);
}

void gradient_suite(Outcome& o) {
  std::mt19937_64 rng(303);
  auto report = [&](const std::string& name, double err) {
    o.check(err < 1e-3, name + " " + g(err));
    o.detail << name << " " << g(err, 2) << "  ";
  };
  double worst = 0;

  const Tensor x = oracle::random_tensor<double>({2, 3, 7, 6}, rng);
  const auto w = oracle::random_weights<double>(4, 3, 5, rng);
  for (int stride : {1, 2}) {
    worst = std::max({worst,
                      fd_unary([&](Tape& t, Var v) { return ad::conv2d(v, t.constant(w.kernel), t.constant(w.bias), stride); }, x, rng),
                      fd_unary([&](Tape& t, Var k) { return ad::conv2d(t.constant(x), k, t.constant(w.bias), stride); }, w.kernel, rng),
                      fd_unary([&](Tape& t, Var b) { return ad::conv2d(t.constant(x), t.constant(w.kernel), b, stride); }, w.bias, rng)});
  }
  report("conv2d", worst);

  worst = 0;
  const Tensor xd = oracle::random_tensor<double>({1, 3, 4, 5}, rng);
  for (int stride : {1, 2}) {
    worst = std::max({worst,
                      fd_unary([&](Tape& t, Var v) { return ad::deconv2d(v, t.constant(w.kernel), t.constant(w.bias), stride); }, xd, rng),
                      fd_unary([&](Tape& t, Var k) { return ad::deconv2d(t.constant(xd), k, t.constant(w.bias), stride); }, w.kernel, rng),
                      fd_unary([&](Tape& t, Var b) { return ad::deconv2d(t.constant(xd), t.constant(w.kernel), b, stride); }, w.bias, rng)});
  }
  report("deconv2d", worst);

  worst = 0;
  for (GdnMode m : {GdnMode::classic, GdnMode::simplified})
    for (GdnDirection d : {GdnDirection::divide, GdnDirection::multiply}) {
      Tensor xg = oracle::random_tensor<double>({1, 4, 5, 5}, rng, 0.1, 1.0);
      for (std::size_t i = 0; i < xg.size(); i += 2) xg[i] = -xg[i];
      const Tensor beta = oracle::random_tensor<double>({4, 1, 1, 1}, rng, 0.5, 1.5);
      const Tensor gamma = oracle::random_tensor<double>({4, 4, 1, 1}, rng, 0.01, 0.3);
      worst = std::max({worst,
                        fd_unary([&](Tape& t, Var v) { return ad::gdn(v, t.constant(beta), t.constant(gamma), m, d); }, xg, rng),
                        fd_unary([&](Tape& t, Var b) { return ad::gdn(t.constant(xg), b, t.constant(gamma), m, d); }, beta, rng),
                        fd_unary([&](Tape& t, Var gm) { return ad::gdn(t.constant(xg), t.constant(beta), gm, m, d); }, gamma, rng)});
    }
  report("gdn", worst);

  const auto gw = oracle::random_weights<double>(6, 4, 3, rng);
  worst = std::max(fd_unary([&](Tape& t, Var k) { return ad::group_lasso(k, t.constant(gw.bias)); }, gw.kernel, rng),
                   fd_unary([&](Tape& t, Var b) { return ad::group_lasso(t.constant(gw.kernel), b); }, gw.bias, rng));
  report("group_lasso", worst);

  const Tensor a = oracle::random_tensor<double>({1, 3, 48, 48}, rng, 0, 1);
  Tensor b = a;
  std::normal_distribution<double> nd(0, 0.1);
  for (double& v : b.data()) v = std::clamp(v + nd(rng), 0.0, 1.0);
  report("ms_ssim", fd_unary([&](Tape& t, Var v) { return ad::ms_ssim(v, t.constant(b), 3); }, a, rng, 20));

  // The assembled objective D lambda + R + F alpha on a small model.
  const CodecModel m = init_model(tiny_spec(2, 2, 2, 2), 3);
  const Tensor batch = oracle::random_tensor<double>({1, 3, 64, 64}, rng, 0, 1);
  TrainConfig cfg;
  cfg.lambda = 0.05;
  cfg.alpha = 0.01;
  auto loss_at = [&](std::size_t which, const Tensor& replaced) {
    CodecModel c = m;
    *c.parameters()[which].tensor = replaced;
    Tape t;
    std::vector<Var> vars;
    for (const auto& p : c.parameters()) vars.push_back(t.constant(*p.tensor));
    std::mt19937_64 noise(9);
    return rd_objective(t, c, vars, batch, cfg, noise).parts.L;
  };
  Tape t;
  std::vector<Var> vars;
  for (const auto& p : m.parameters()) vars.push_back(t.leaf(*p.tensor));
  std::mt19937_64 noise(9);
  const Objective obj = rd_objective(t, m, vars, batch, cfg, noise);
  t.backward(obj.L);
  worst = 0;
  const auto named = m.parameters();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const Tensor& p = *named[i].tensor;
    worst = std::max(worst, oracle::fd_check([&](const Tensor& v) { return loss_at(i, v); }, p, t.grad(vars[i]),
                                             std::min<int>(4, static_cast<int>(p.size())), rng, 1e-6, 1e-7));
  }
  report("rd_loss", worst);
}

// ------------------------------------------------------------------ 4

void gdn_identity_speed(Outcome& o) {
  std::mt19937_64 rng(404);
  double worst = 0;
  for (GdnDirection d : {GdnDirection::divide, GdnDirection::multiply}) {
    const Tensor x = oracle::random_tensor<double>({2, 8, 6, 7}, rng, -3, 3);
    GdnParams p{oracle::random_tensor<double>({8, 1, 1, 1}, rng, 0.2, 2.0),
                oracle::random_tensor<double>({8, 8, 1, 1}, rng, 0.0, 0.5), GdnMode::simplified, d};
    worst = std::max(worst, max_abs_diff(gdn_eval_generic(x, p, 1.0, 1.0), gdn_eval(x, p)));
  }
  o.check(worst <= 1e-6, "generic vs simplified " + g(worst));
  GdnBenchConfig cfg;  // 320 channels, 128 x 192, 30 reps, f32
  const GdnBenchReport r = gdn_microbench(cfg);
  o.check(r.speedup() >= 0.10, "speedup " + g(100 * r.speedup(), 3) + "% < 10%");
  o.detail << "identity err " << g(worst) << "; classic " << g(r.classic_median_ms) << " ms, simplified "
           << g(r.simplified_median_ms) << " ms (median of " << cfg.reps << "), speedup "
           << g(100 * r.speedup(), 3) << "%";
}

// ------------------------------------------------------------------ 5

void flop_ratios(Outcome& o) {
  const NetworkSpec ref = preset(Preset::larger_mean_scale);
  const NetworkSpec c1 = preset(Preset::cenic_1);
  const NetworkSpec c2 = preset(Preset::cenic_2_t3);
  double r1 = 0, r2 = 0, drift = 0;
  bool first = true;
  for (auto [h, w] : {std::pair{256, 256}, std::pair{512, 768}, std::pair{64, 64}, std::pair{1024, 640}}) {
    const double a = *flops_network(c1, h, w, FlopScope::decode_side, &ref).ratio;
    const double b = *flops_network(c2, h, w, FlopScope::decode_side, &ref).ratio;
    if (first) {
      r1 = a;
      r2 = b;
      first = false;
    }
    drift = std::max({drift, std::abs(a - r1), std::abs(b - r2)});
  }
  o.check(std::abs(r1 - 0.16) <= 0.03, "cenic_1 ratio " + g(r1));
  o.check(std::abs(r2 - 0.067) <= 0.02, "cenic_2 ratio " + g(r2));
  o.check(drift < 1e-12, "resolution drift " + g(drift));
  o.detail << "cenic_1 " << g(r1) << " (0.16 +- 0.03), cenic_2 " << g(r2) << " (0.067 +- 0.02), drift over 4 sizes "
           << g(drift);
}

// ------------------------------------------------------------------ 6

void sweep_grid_values(Outcome& o) {
  const SweepGrids mse = sweep_grids(Metric::mse);
  const SweepGrids ms = sweep_grids(Metric::msssim);
  bool ok = mse.lambdas.size() == 8 && ms.lambdas.size() == 8 && mse.alphas.size() == 12 && ms.alphas == mse.alphas;
  for (int t = 0; ok && t < 8; ++t) {
    ok = ok && mse.lambdas[t] == 0.1 * std::pow(2.0, t - 6);
    ok = ok && ms.lambdas[t] == std::pow(2.0, t - 1);
  }
  for (int t = 0; ok && t < 12; ++t) ok = ok && mse.alphas[t] == 0.001 * std::pow(0.2, t);
  o.check(ok, "grid values");
  o.detail << "mse lambda " << g(mse.lambdas.front()) << ".." << g(mse.lambdas.back()) << ", msssim lambda "
           << g(ms.lambdas.front()) << ".." << g(ms.lambdas.back()) << ", alpha " << g(mse.alphas.front()) << ".."
           << g(mse.alphas.back());
}

// ------------------------------------------------------------------ 7

void two_phase(Outcome& o) {
  const Dataset data = Dataset::synthetic(8, 64, 64, 7);
  const std::vector<double> alphas = {8e-6, 4e-5, 2e-4, 1e-3};
  TwoPhaseConfig cfg;
  cfg.spec = tiny_spec();  // widths 16
  cfg.train.lambda = sweep_grids(Metric::mse).lambdas[4];
  cfg.train.lr = 1e-3;
  cfg.train.batch = 4;
  cfg.train.crop = 64;
  cfg.train.log_every = 10;
  cfg.train.seed = 7;
  cfg.phase1_steps = 1000;
  cfg.phase2_steps = 500;

  const auto baseline = flops_network(cfg.spec, 256, 256, FlopScope::decode_side).total;
  std::vector<std::uint64_t> flops;
  bool halves = true, towers = true;
  std::mt19937_64 rng(70);
  o.detail << "baseline " << baseline;
  for (double a : alphas) {
    cfg.alpha = a;
    const TwoPhaseResult r = two_phase_run(cfg, data);
    const auto f = flops_network(r.shrunk, 256, 256, FlopScope::decode_side).total;
    flops.push_back(f);
    const double l0 = r.phase2.front().loss.L, l1 = smoothed_final(r.phase2);
    halves = halves && l1 < 0.5 * l0;
    const CodecModel probe = init_model(r.shrunk, 1);
    const Tensor z = oracle::random_tensor<double>({1, r.shrunk.hyper_latent_channels, 4, 6}, rng);
    towers = towers && run_section(probe, Section::hyper_decoder_mean, z).shape() ==
                           run_section(probe, Section::hyper_decoder_scale, z).shape();
    o.detail << "; a=" << g(a, 2) << " flops " << f << " L2 " << g(l0, 3) << "->" << g(l1, 3);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < flops.size(); ++i) monotone = monotone && flops[i] <= flops[i - 1];
  o.check(monotone, "flops non-increasing in alpha");
  o.check(flops.back() < baseline, "largest alpha shrinks the decoder");
  o.check(halves, "phase-2 halves L");
  o.check(towers, "hyper towers matched");
}

// ------------------------------------------------------------------ 8

void codec_integrity(Outcome& o) {
  std::mt19937_64 rng(808);
  const Codec codec(init_model(tiny_spec(), 8));
  std::vector<Tensor> images;
  std::uniform_int_distribution<int> dim(16, 160);
  for (int i = 0; i < 20; ++i) {
    Tensor t({1, 3, dim(rng), dim(rng)});
    for (double& v : t.data()) v = static_cast<double>(rng() % 256) / 255.0;
    images.push_back(std::move(t));
  }
  for (auto& t : synthetic_images(8, 96, 128, 9)) images.push_back(std::move(t));

  bool deterministic = true, within = true;
  double worst_gap = 0;
  std::vector<std::uint8_t> sample;
  for (const Tensor& img : images) {
    const auto e1 = codec.encode_analyze(img);
    const auto bytes = serialize(e1.bitstream);
    deterministic = deterministic && serialize(codec.encode(img)) == bytes;
    const auto d1 = codec.decode(deserialize(bytes));
    const auto d2 = codec.decode(deserialize(bytes));
    deterministic = deterministic && d1.image == d2.image && d1.y_hat == e1.y_hat;
    const double est = e1.estimated_hyper_bits + e1.estimated_latent_bits;
    const double actual = 8.0 * static_cast<double>(e1.bitstream.payload_bytes());
    within = within && std::abs(actual - est) <= 0.02 * est + 128 * 8;
    worst_gap = std::max(worst_gap, std::abs(actual - est) / std::max(est, 1.0));
    if (bytes.size() > sample.size()) sample = bytes;
  }
  o.check(deterministic, "byte-for-byte determinism");
  o.check(within, "rate estimate agreement");

  int caught = 0;
  const std::size_t payload = sample.size() - kBitstreamHeaderBytes;
  for (int i = 0; i < 100; ++i) {
    auto bad = sample;
    bad[kBitstreamHeaderBytes + rng() % payload] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    try {
      codec.decode(deserialize(bad));
    } catch (const Error& e) {
      caught += e.kind() == ErrorKind::CorruptStream;
    }
  }
  o.check(caught == 100, "tamper detection " + std::to_string(caught) + "/100");
  o.detail << images.size() << " images deterministic=" << deterministic << ", worst rate gap "
           << g(100 * worst_gap, 3) << "%, tamper caught " << caught << "/100";
}

// ------------------------------------------------------------------ 9

void metrics_checks(Outcome& o) {
  std::mt19937_64 rng(909);
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    const Tensor a = oracle::random_tensor<double>({1, 3, 256, 256}, rng, 0, 1);
    Tensor b = a;
    std::normal_distribution<double> nd(0, 0.02 + 0.03 * i);
    for (double& v : b.data()) v = std::clamp(v + nd(rng), 0.0, 1.0);
    worst = std::max(worst, std::abs(ms_ssim(a, b, 5) - oracle::ms_ssim_direct(a, b, 5)));
  }
  Tensor x({1, 3, 8, 8}, 100.0), y({1, 3, 8, 8}, 101.0);
  const double psnr = mse_psnr(x, y, 255.0).psnr_db;
  const double d0 = db_msssim(1.0, DbConvention::paper_literal);
  const double d20 = db_msssim(0.99, DbConvention::one_minus);
  o.check(worst <= 1e-6, "ms_ssim vs direct " + g(worst));
  o.check(std::abs(psnr - 48.1308) < 5e-5, "psnr " + g(psnr, 8));
  o.check(d0 == 0.0, "db(1) " + g(d0));
  o.check(std::abs(d20 - 20.0) < 1e-9, "db(0.99) " + g(d20, 12));
  o.detail << "ms_ssim err " << g(worst) << " over 10 pairs; psnr(mse 1) " << g(psnr, 7) << " dB; db(1) " << d0
           << "; db(0.99, 1-m) " << g(d20, 10);
}

// ------------------------------------------------------------------ 10

void bench_harness(Outcome& o) {
  const CodecModel base = init_model(preset(Preset::cenic_1), 10);
  const CodecF classic(with_gdn_mode(base, GdnMode::classic).cast<float>());
  const CodecF simplified(with_gdn_mode(base, GdnMode::simplified).cast<float>());
  const auto imgs = synthetic_images(2, 512, 768, 10);
  BenchOptions opt;
  opt.reps = 5;
  opt.warmup = 1;
  // Short alternating runs, pooled per mode, so bursts of host load land on
  // both modes alike.
  const int rounds = 8;

  std::vector<BenchRecord> all;
  double t_classic = 0, t_simplified = 0, worst_gap = 0;
  bool stable = true;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const std::vector<BenchImage> one = {{"kodak_size_" + std::to_string(i), imgs[i]}};
    std::vector<BenchRecord> runs_c, runs_s;
    for (int round = 0; round < rounds; ++round) {
      for (int k = 0; k < 2; ++k) {
        const bool use_classic = (k == 0) == (round % 2 == 0);
        opt.label = use_classic ? "classic" : "simplified";
        (use_classic ? runs_c : runs_s).push_back(bench_decode(use_classic ? classic : simplified, one, opt)[0]);
      }
    }
    const BenchRecord rc = pool_records(runs_c);
    const BenchRecord rs = pool_records(runs_s);
    t_classic += rc.median.total_ms;
    t_simplified += rs.median.total_ms;
    for (const auto* r : {&rc, &rs}) {
      worst_gap = std::max(worst_gap, std::abs(r->median.stage_sum() - r->median.total_ms) / r->median.total_ms);
      stable = stable && r->deterministic;
      all.push_back(*r);
    }
  }
  // Quality is a function of the decoded image, which is identical across reps.
  const auto again = bench_decode(classic, {{"kodak_size_0", imgs[0]}}, [&] {
    BenchOptions b = opt;
    b.label = "classic";
    b.reps = 5;
    return b;
  }());
  stable = stable && again[0].psnr_db == all[0].psnr_db && again[0].ms_ssim == all[0].ms_ssim &&
           again[0].bytes == all[0].bytes;

  const auto parsed = parse_bench_csv(bench_csv(all));
  bool round = parsed.size() == all.size();
  auto printed = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::strtod(buf, nullptr);
  };
  for (std::size_t i = 0; round && i < all.size(); ++i)
    round = parsed[i].image == all[i].image && parsed[i].label == all[i].label && parsed[i].bytes == all[i].bytes &&
            parsed[i].bpp == printed(all[i].bpp) && parsed[i].psnr_db == printed(all[i].psnr_db) &&
            parsed[i].ms_ssim == printed(all[i].ms_ssim) &&
            parsed[i].median.total_ms == printed(all[i].median.total_ms);

  o.check(worst_gap <= 0.05, "stage medians sum to total, worst gap " + g(100 * worst_gap) + "%");
  o.check(stable, "quality identical across reps");
  o.check(round, "csv round trip");
  o.check(t_simplified <= t_classic, "simplified " + g(t_simplified) + " ms > classic " + g(t_classic) + " ms");
  o.detail << "cenic_1 f32 512x768 x2: classic " << g(t_classic) << " ms, simplified " << g(t_simplified)
           << " ms (sum of per-image medians over " << all[0].reps << " pooled reps); worst stage-sum gap "
           << g(100 * worst_gap, 2) << "%; pinned=" << all[0].pinned;
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  void (*run)(Outcome&);
};

const Criterion kCriteria[] = {
    {1, "range coder exactness", 10, range_coder},
    {2, "conv/deconv correctness", 30, conv_correctness},
    {3, "gradient suite", 120, gradient_suite},
    {4, "GDN identity and speed", 120, gdn_identity_speed},
    {5, "FLOP-ratio reproduction", 1, flop_ratios},
    {6, "sweep grids", 1, sweep_grid_values},
    {7, "two-phase pipeline", 1200, two_phase},
    {8, "codec integrity", 300, codec_integrity},
    {9, "metrics", 60, metrics_checks},
    {10, "bench harness", 600, bench_harness},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Outcome o;
    Stopwatch sw;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = sw.elapsed_ms() / 1000.0;
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s  %2d  %-26s %7.2f s / %g s  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.title, secs, c.budget_s,
                in_time ? "" : "[over budget] ", o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
