#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cenic/entropy.hpp"
#include "oracles.hpp"

using namespace cenic;

namespace {

Tensor row(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({1, 1, 1, n}, std::move(v));
}

CdfTable random_table(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 40);
  std::exponential_distribution<double> mass(1.0);
  std::vector<double> m(size(rng));
  for (double& v : m) v = mass(rng);
  m[rng() % m.size()] *= 1e-9;
  const auto counts = quantize_masses(m);
  CdfTable t;
  t.min_symbol = static_cast<int>(rng() % 21) - 10;
  t.cdf.push_back(0);
  for (auto c : counts) t.cdf.push_back(t.cdf.back() + c);
  t.escape = rng() % 2 == 0;
  return t;
}

int expect_error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return static_cast<int>(e.kind());
  }
  return -1;
}

}  // namespace

TEST(Quantize, RoundIsMeanCentered) {
  const Tensor y = row({2.4, 2.4, -1.6, 0.5});
  const Tensor mu = row({0.0, 2.3, 0.0, 0.2});
  const Tensor q = quantize(y, mu, QuantMode::round);
  EXPECT_DOUBLE_EQ(q[0], 2.0);
  EXPECT_NEAR(q[1], 2.3, 1e-15);
  EXPECT_DOUBLE_EQ(q[2], -2.0);
  EXPECT_NEAR(q[3], 0.2, 1e-15);
}

TEST(Quantize, NoiseStaysWithinHalf) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor y = oracle::random_tensor<double>({1, 4, 8, 8}, rng, -5, 5);
    const Tensor q = quantize(y, Tensor(y.shape()), QuantMode::noise, &rng);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LT(std::abs(q[i] - y[i]), 0.5);
  }
}

TEST(Quantize, NoiseIsUnbiased) {
  std::mt19937_64 rng(11);
  const int n = 1000000;
  const Tensor u = uniform_noise({1, 1, 1, n}, rng);
  double sum = 0;
  for (double v : u.data()) sum += v;
  const double sd = std::sqrt(1.0 / 12.0);
  EXPECT_LT(std::abs(sum / n), 3 * sd / std::sqrt(double(n)));
}

TEST(Quantize, NoiseIsSeeded) {
  std::mt19937_64 a(5), b(5);
  EXPECT_EQ(uniform_noise({1, 2, 3, 4}, a), uniform_noise({1, 2, 3, 4}, b));
}

TEST(Gaussian, CenterMass) {
  GaussianCond m{row({1.7}), row({1.0})};
  const Tensor p = gaussian_likelihood(row({1.7}), m);
  EXPECT_NEAR(p[0], oracle::phi(0.5) - oracle::phi(-0.5), 1e-14);
  EXPECT_NEAR(p[0], 0.38292, 5e-6);
}

TEST(Gaussian, NormalizedAndSymmetric) {
  std::vector<double> ks;
  for (int k = -50; k <= 50; ++k) ks.push_back(0.3 + k);
  const Tensor q = row(ks);
  GaussianCond m{Tensor(q.shape(), 0.3), Tensor(q.shape(), 1.0)};
  const Tensor p = gaussian_likelihood(q, m);
  double sum = 0, clamped_sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += gaussian_bin(q[i] - 0.3, 1.0);
    clamped_sum += p[i];
    EXPECT_NEAR(p[i], p[p.size() - 1 - i], 1e-12);
  }
  EXPECT_NEAR(sum, 1.0, 1e-6);
  // The 2^-24 floor lifts the far tail bins.
  EXPECT_NEAR(clamped_sum, 1.0, 1e-6 + 101 * kLikelihoodFloor);
}

TEST(Gaussian, ScaleFloorAndClamp) {
  GaussianCond m{row({0.0, 0.0}), row({1e-4, kScaleFloor})};
  const Tensor p = gaussian_likelihood(row({0.0, 0.0}), m);
  EXPECT_DOUBLE_EQ(p[0], p[1]);
  GaussianCond far{row({0.0}), row({0.2})};
  EXPECT_DOUBLE_EQ(gaussian_likelihood(row({40.0}), far)[0], kLikelihoodFloor);
}

TEST(Logistic, CenterMassNormalizationSymmetry) {
  FactorizedPrior prior = FactorizedPrior::init(2);
  prior.location[1] = 0.4;
  prior.log_scale[1] = std::log(2.5);
  Tensor q({1, 2, 1, 101});
  for (int c = 0; c < 2; ++c)
    for (int k = -50; k <= 50; ++k) q.at(0, c, 0, k + 50) = k + (c ? 0.4 : 0.0);
  const Tensor p = factorized_likelihood(q, prior);
  EXPECT_NEAR(p.at(0, 0, 0, 50), 2 * oracle::sigmoid(0.5) - 1, 1e-14);
  EXPECT_NEAR(p.at(0, 0, 0, 50), 0.24492, 5e-6);
  for (int c = 0; c < 2; ++c) {
    const double scale = std::exp(prior.log_scale[c]);
    double sum = 0, clamped_sum = 0;
    for (int i = 0; i < 101; ++i) {
      sum += logistic_bin(i - 50, scale);
      clamped_sum += p.at(0, c, 0, i);
      EXPECT_NEAR(p.at(0, c, 0, i), p.at(0, c, 0, 100 - i), 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    EXPECT_NEAR(clamped_sum, 1.0, 1e-6 + 101 * kLikelihoodFloor);
  }
}

TEST(Logistic, ChannelMismatch) {
  EXPECT_EQ(expect_error_kind([] { factorized_likelihood(Tensor({1, 3, 2, 2}), FactorizedPrior::init(2)); }),
            static_cast<int>(ErrorKind::ChannelMismatch));
}

TEST(Rate, Examples) {
  EXPECT_DOUBLE_EQ(rate_bits(row({0.5})), 1.0);
  EXPECT_DOUBLE_EQ(rate_bits(Tensor({1, 2, 3, 3}, 1.0)), 0.0);
  const Tensor a = row({0.25, 0.125});
  const Tensor b = row({0.5});
  EXPECT_DOUBLE_EQ(rate_bits(row({0.25, 0.125, 0.5})), rate_bits(a) + rate_bits(b));
  for (double bad : {0.0, -0.1, std::nan("")})
    EXPECT_EQ(expect_error_kind([&] { rate_bits(row({0.5, bad})); }), static_cast<int>(ErrorKind::DomainError));
}

TEST(Rate, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  const Shape s{1, 2, 3, 3};
  const Tensor mu = oracle::random_tensor<double>(s, rng, -2, 2);
  Tensor sc = oracle::random_tensor<double>(s, rng, 0.3, 3.0);
  sc[0] = 0.05;  // below the floor: no scale gradient
  Tensor q(s);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::round(mu[i] + 2 * (rng() % 3) - 2.0) + 0.1;
  auto rate = [&](const Tensor& qq, const Tensor& mm, const Tensor& ss) {
    return rate_bits(gaussian_likelihood(qq, GaussianCond{mm, ss}));
  };
  Tape t;
  Var vq = t.leaf(q), vm = t.leaf(mu), vs = t.leaf(sc);
  Var r = ad::rate_bits(ad::gaussian_likelihood(vq, vm, vs));
  EXPECT_DOUBLE_EQ(r.value()[0], rate(q, mu, sc));
  t.backward(r);
  const Tensor gs = t.grad(vs);
  EXPECT_EQ(gs[0], 0.0);
  EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return rate(x, mu, sc); }, q, t.grad(vq), 10, rng), 1e-4);
  EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return rate(q, x, sc); }, mu, t.grad(vm), 10, rng), 1e-4);
  EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return rate(q, mu, x); }, sc, gs, 10, rng), 1e-4);

  FactorizedPrior prior = FactorizedPrior::init(2, 0.3);
  prior.location[0] = 0.2;
  Tensor z(s);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = double(rng() % 5) - 2.0 + 0.05;
  auto zrate = [&](const Tensor& zz, const Tensor& loc, const Tensor& ls) {
    return rate_bits(factorized_likelihood(zz, FactorizedPrior{loc, ls}));
  };
  Tape u;
  Var vz = u.leaf(z), vl = u.leaf(prior.location), vls = u.leaf(prior.log_scale);
  Var rz = ad::rate_bits(ad::factorized_likelihood(vz, vl, vls));
  EXPECT_DOUBLE_EQ(rz.value()[0], zrate(z, prior.location, prior.log_scale));
  u.backward(rz);
  EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return zrate(x, prior.location, prior.log_scale); }, z,
                             u.grad(vz), 10, rng),
            1e-4);
  EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return zrate(z, x, prior.log_scale); }, prior.location,
                             u.grad(vl), 2, rng),
            1e-4);
  EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return zrate(z, prior.location, x); }, prior.log_scale,
                             u.grad(vls), 2, rng),
            1e-4);
}

TEST(CdfTables, Invariants) {
  for (double sigma : {kScaleFloor, 0.5, 1.0, 7.3, 40.0, 1e4})
    for (double mu : {0.0, 0.37, -0.5})
      for (int L : {1, 4, 64}) {
        const CdfTable t = build_cdf(mu, sigma, L);
        EXPECT_NO_THROW(t.validate());
        EXPECT_EQ(t.num_entries(), 2 * L + 2);
        EXPECT_EQ(t.min_symbol, -L);
        EXPECT_TRUE(t.escape);
        EXPECT_GE(t.count(t.escape_index()), 1u);
        EXPECT_NO_THROW(build_logistic_cdf(mu, sigma, L).validate());
      }
}

TEST(CdfTables, NarrowScaleConcentrates) {
  const CdfTable t = build_cdf(0.0, kScaleFloor, 1);
  EXPECT_GT(t.count(1), 0.99 * kCdfTotal);
}

TEST(CdfTables, SymmetricAndProportional) {
  const CdfTable t = build_cdf(0.0, 3.0);
  const CdfTable g = build_cdf(1e-300, 3.0);  // general path
  for (int k = 1; k <= kAlphabetBound; ++k) EXPECT_EQ(t.count(kAlphabetBound + k), t.count(kAlphabetBound - k));
  for (int i = 0; i < t.num_entries(); ++i) EXPECT_NEAR(double(t.count(i)), double(g.count(i)), 1.0);
  // Every entry holds 1 + floor(share of the remaining counts), plus at most one spare.
  const double avail = kCdfTotal - t.num_entries();
  for (int k = -5; k <= 5; ++k) {
    const double mass = oracle::phi((k + 0.5) / 3) - oracle::phi((k - 0.5) / 3);
    EXPECT_NEAR(double(t.count(k + kAlphabetBound)), 1 + mass * avail, 1.0);
  }
}

TEST(CdfTables, LargestRemainder) {
  const std::vector<double> m = {1.0, 1.0, 1.0};
  const auto c = quantize_masses(m);
  // 65533 shares: 21844.33 each, one spare count goes to the lowest index.
  EXPECT_EQ(c[0], 21846u);
  EXPECT_EQ(c[1], 21845u);
  EXPECT_EQ(c[2], 21845u);
  const std::vector<double> z = {0.0, 5.0, 0.0};
  const auto cz = quantize_masses(z);
  EXPECT_EQ(cz[0], 1u);
  EXPECT_EQ(cz[2], 1u);
  EXPECT_EQ(cz[1], kCdfTotal - 2);
}

TEST(ScaleTables, LevelsAndLookup) {
  const ScaleTables& st = ScaleTables::instance();
  EXPECT_EQ(st.scale(0), kScaleFloor);
  EXPECT_EQ(st.scale(kScaleLevels - 1), kScaleCeiling);
  const double ratio = std::pow(kScaleCeiling / kScaleFloor, 1.0 / (kScaleLevels - 1));
  for (int i = 1; i < kScaleLevels; ++i) EXPECT_NEAR(st.scale(i) / st.scale(i - 1), ratio, 1e-9);
  EXPECT_EQ(st.index(0.0), 0);
  EXPECT_EQ(st.index(kScaleFloor), 0);
  EXPECT_EQ(st.index(1e9), kScaleLevels - 1);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> logs(std::log(kScaleFloor), std::log(kScaleCeiling));
  for (int n = 0; n < 2000; ++n) {
    const double s = std::exp(logs(rng));
    const int i = st.index(s);
    EXPECT_GE(st.scale(i), s);
    if (i > 0) EXPECT_LT(st.scale(i - 1), s);
  }
  for (int i = 0; i < kScaleLevels; i += 37) {
    EXPECT_EQ(st.index(st.scale(i)), i);
    EXPECT_EQ(st.table(i).cdf, build_cdf(0.0, st.scale(i)).cdf);
  }
}

TEST(ScaleTables, CodingOverheadIsSmall) {
  // Cross entropy of the true Gaussian bins under the next level's table.
  const ScaleTables& st = ScaleTables::instance();
  for (double s : {0.2, 0.7, 1.9, 5.3, 21.0}) {
    const CdfTable own = build_cdf(0.0, s);
    const CdfTable& lvl = st.for_scale(s);
    double h_own = 0, h_lvl = 0;
    for (int k = -kAlphabetBound; k <= kAlphabetBound; ++k) {
      const double p = oracle::phi((k + 0.5) / s) - oracle::phi((k - 0.5) / s);
      if (p <= 0) continue;
      h_own -= p * std::log2(own.count(k + kAlphabetBound) / double(kCdfTotal));
      h_lvl -= p * std::log2(lvl.count(k + kAlphabetBound) / double(kCdfTotal));
    }
    EXPECT_LT(h_lvl - h_own, 2e-3) << s;
  }
}

TEST(CdfTables, ValidateRejects) {
  CdfTable t;
  t.cdf = {0, 100, 100, 65536};
  EXPECT_EQ(expect_error_kind([&] { t.validate(); }), static_cast<int>(ErrorKind::DomainError));
  t.cdf = {0, 100, 65535};
  EXPECT_EQ(expect_error_kind([&] { t.validate(); }), static_cast<int>(ErrorKind::DomainError));
}

TEST(RangeCoder, TwoSymbolTable) {
  CdfTable t;
  t.cdf = {0, 32768, 65536};
  const std::vector<int> s = {0};
  const std::vector<CdfTable> tables = {t};
  const auto bytes = rc_encode(s, tables);
  EXPECT_EQ(rc_decode(bytes, tables), s);
}

TEST(RangeCoder, EmptyRoundTrip) {
  const auto bytes = rc_encode({}, {});
  EXPECT_TRUE(bytes.empty());
  EXPECT_TRUE(rc_decode(bytes, {}).empty());
}

TEST(RangeCoder, RandomTablesRoundTrip) {
  std::mt19937_64 rng(2024);
  std::vector<CdfTable> pool;
  for (int i = 0; i < 64; ++i) pool.push_back(random_table(rng));
  const int n = 100000;
  std::vector<CdfTable> tables;
  std::vector<int> symbols;
  for (int i = 0; i < n; ++i) {
    const CdfTable& t = pool[rng() % pool.size()];
    tables.push_back(t);
    int s;
    if (t.escape && rng() % 50 == 0) {
      s = static_cast<int>(rng() % 60001) - 30000;
    } else {
      // sample from the table itself
      const std::uint32_t v = rng() % kCdfTotal;
      int idx = 0;
      while (t.cdf[idx + 1] <= v) ++idx;
      if (t.escape && idx == t.escape_index()) idx = 0;
      s = t.min_symbol + idx;
    }
    symbols.push_back(s);
  }
  const auto bytes = rc_encode(symbols, tables);
  EXPECT_EQ(rc_decode(bytes, tables), symbols);
  const double info = table_information_bits(symbols, tables);
  EXPECT_GE(bytes.size() * 8.0, info - 1);
  EXPECT_LE(bytes.size() * 8.0, info + 32 * 8);
}

TEST(RangeCoder, GaussianTablesRoundTripWithEscapes) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<CdfTable> tables;
  std::vector<int> symbols;
  for (int i = 0; i < 5000; ++i) {
    const double sigma = kScaleFloor + std::abs(nd(rng)) * 30;
    tables.push_back(build_cdf(0.0, sigma));
    symbols.push_back(static_cast<int>(std::lround(nd(rng) * sigma * 1.5)));
  }
  symbols[17] = 32767;
  symbols[18] = -32768;
  const auto bytes = rc_encode(symbols, tables);
  EXPECT_EQ(rc_decode(bytes, tables), symbols);
  const double info = table_information_bits(symbols, tables);
  EXPECT_GE(bytes.size() * 8.0, info - 1);
  EXPECT_LE(bytes.size() * 8.0, info + 32 * 8);
}

TEST(RangeCoder, UniformByteAlphabetLength) {
  std::mt19937_64 rng(99);
  const std::vector<double> flat(256, 1.0);
  const auto counts = quantize_masses(flat);
  CdfTable t;
  t.cdf.push_back(0);
  for (auto c : counts) t.cdf.push_back(t.cdf.back() + c);
  const std::vector<CdfTable> tables(10000, t);
  std::vector<int> symbols(10000);
  for (int& s : symbols) s = static_cast<int>(rng() % 256);
  const auto bytes = rc_encode(symbols, tables);
  EXPECT_GE(bytes.size(), 9800u);
  EXPECT_LE(bytes.size(), 10300u);
  EXPECT_EQ(rc_decode(bytes, tables), symbols);
}

TEST(RangeCoder, Errors) {
  CdfTable plain;
  plain.min_symbol = -1;
  plain.cdf = {0, 1000, 60000, 65536};
  const std::vector<CdfTable> one = {plain};
  EXPECT_EQ(expect_error_kind([&] { rc_encode(std::vector<int>{2}, one); }),
            static_cast<int>(ErrorKind::EncodeError));
  const std::vector<CdfTable> esc = {build_cdf(0, 1)};
  EXPECT_EQ(expect_error_kind([&] { rc_encode(std::vector<int>{40000}, esc); }),
            static_cast<int>(ErrorKind::EncodeError));
  EXPECT_EQ(expect_error_kind([&] { rc_encode(std::vector<int>{0, 0}, esc); }),
            static_cast<int>(ErrorKind::EncodeError));

  std::mt19937_64 rng(1);
  std::vector<CdfTable> tables(2000, build_cdf(0, 4.0));
  std::vector<int> symbols(2000);
  for (int& s : symbols) s = static_cast<int>(rng() % 9) - 4;
  auto bytes = rc_encode(symbols, tables);
  bytes.resize(bytes.size() / 2);
  EXPECT_EQ(expect_error_kind([&] { rc_decode(bytes, tables); }), static_cast<int>(ErrorKind::DecodeError));
}

TEST(RangeCoder, CorruptionIsDetectedOrChangesOutput) {
  std::mt19937_64 rng(4);
  std::vector<CdfTable> tables(3000, build_cdf(0, 2.0));
  std::vector<int> symbols(3000);
  for (int& s : symbols) s = static_cast<int>(rng() % 7) - 3;
  const auto clean = rc_encode(symbols, tables);
  for (int trial = 0; trial < 20; ++trial) {
    auto bytes = clean;
    bytes[bytes.size() / 3 + trial] ^= 0x5A;
    try {
      EXPECT_NE(rc_decode(bytes, tables), symbols);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DecodeError);
    }
  }
}
