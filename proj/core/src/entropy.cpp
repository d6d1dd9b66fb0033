#include "cenic/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace cenic {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLn2 = 0.69314718055994530942;

double phi_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double phi_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logistic_pdf(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

}  // namespace

template <typename T>
BasicTensor<T> quantize(const BasicTensor<T>& y, const BasicTensor<T>& means, QuantMode mode,
                        std::mt19937_64* rng) {
  BasicTensor<T> out(y.shape());
  if (mode == QuantMode::noise) {
    if (!rng) fail(ErrorKind::DomainError, "noise quantization needs a random generator");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      double r = 0;
      while (r == 0) r = u(*rng);
      out[i] = y[i] + static_cast<T>(r - 0.5);
    }
    return out;
  }
  if (means.shape() != y.shape())
    fail(ErrorKind::ShapeError, "quantize: means " + means.shape().str() + " vs " + y.shape().str());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = std::round(y[i] - means[i]) + means[i];
  return out;
}

template TensorF quantize(const TensorF&, const TensorF&, QuantMode, std::mt19937_64*);
template Tensor quantize(const Tensor&, const Tensor&, QuantMode, std::mt19937_64*);

Tensor uniform_noise(Shape shape, std::mt19937_64& rng) {
  Tensor z(shape);
  return quantize(z, z, QuantMode::noise, &rng);
}

double gaussian_bin(double d, double sigma) {
  const double a = std::abs(d);
  return phi_cdf((0.5 - a) / sigma) - phi_cdf((-0.5 - a) / sigma);
}

Tensor gaussian_likelihood(const Tensor& q, const GaussianCond& m) {
  if (m.means.shape() != q.shape() || m.scales.shape() != q.shape())
    fail(ErrorKind::ShapeError, "gaussian_likelihood: parameter shapes differ from " + q.shape().str());
  Tensor p(q.shape());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double s = std::max(m.scales[i], m.scale_floor);
    p[i] = std::max(gaussian_bin(q[i] - m.means[i], s), kLikelihoodFloor);
  }
  return p;
}

FactorizedPrior FactorizedPrior::init(int channels, double log_scale) {
  return {Tensor({channels, 1, 1, 1}), Tensor({channels, 1, 1, 1}, log_scale)};
}

double logistic_bin(double d, double scale) {
  const double a = std::abs(d);
  return sigmoid((0.5 - a) / scale) - sigmoid((-0.5 - a) / scale);
}

Tensor factorized_likelihood(const Tensor& q, const FactorizedPrior& prior) {
  if (q.c() != prior.channels())
    fail(ErrorKind::ChannelMismatch, "factorized prior has " + std::to_string(prior.channels()) +
                                         " channels, input " + std::to_string(q.c()));
  Tensor p(q.shape());
  const std::size_t plane = q.shape().plane();
  for (int b = 0; b < q.n(); ++b)
    for (int c = 0; c < q.c(); ++c) {
      const double loc = prior.location[c];
      const double s = std::exp(prior.log_scale[c]);
      const double* src = q.plane(b, c);
      double* dst = p.plane(b, c);
      for (std::size_t i = 0; i < plane; ++i)
        dst[i] = std::max(logistic_bin(src[i] - loc, s), kLikelihoodFloor);
    }
  return p;
}

double rate_bits(const Tensor& p) {
  double bits = 0;
  for (double v : p.data()) {
    if (!(v > 0) || !std::isfinite(v)) fail(ErrorKind::DomainError, "rate_bits: probability must be in (0, 1]");
    bits -= std::log2(v);
  }
  return bits;
}

namespace ad {

Var gaussian_likelihood(Var q, Var means, Var scales, double scale_floor) {
  const Shape s = q.shape();
  if (means.shape() != s || scales.shape() != s)
    fail(ErrorKind::ShapeError, "gaussian_likelihood: parameter shapes differ from " + s.str());
  GaussianCond m{means.value(), scales.value(), scale_floor};
  Tensor p = cenic::gaussian_likelihood(q.value(), m);
  return q.tape()->record(
      "gaussian_likelihood", std::move(p), {q, means, scales},
      [q, means, scales, scale_floor](Tape& tp, const Tensor& g) {
        const Tensor& qv = tp.value(q);
        const Tensor& mv = tp.value(means);
        const Tensor& sv = tp.value(scales);
        Tensor dq(qv.shape());
        Tensor ds(qv.shape());
        for (std::size_t i = 0; i < qv.size(); ++i) {
          const bool floored = sv[i] < scale_floor;
          const double sig = floored ? scale_floor : sv[i];
          const double d = qv[i] - mv[i];
          if (gaussian_bin(d, sig) < kLikelihoodFloor) continue;
          const double u = (d + 0.5) / sig;
          const double l = (d - 0.5) / sig;
          dq[i] = g[i] * (phi_pdf(u) - phi_pdf(l)) / sig;
          if (!floored) ds[i] = g[i] * (-u * phi_pdf(u) + l * phi_pdf(l)) / sig;
        }
        Tensor dm = dq;
        for (double& v : dm.data()) v = -v;
        tp.accumulate(q, dq);
        tp.accumulate(means, dm);
        tp.accumulate(scales, ds);
      });
}

Var factorized_likelihood(Var q, Var location, Var log_scale) {
  FactorizedPrior prior{location.value(), log_scale.value()};
  Tensor p = cenic::factorized_likelihood(q.value(), prior);
  return q.tape()->record(
      "factorized_likelihood", std::move(p), {q, location, log_scale},
      [q, location, log_scale](Tape& tp, const Tensor& g) {
        const Tensor& qv = tp.value(q);
        const Tensor& loc = tp.value(location);
        const Tensor& ls = tp.value(log_scale);
        Tensor dq(qv.shape());
        Tensor dloc(loc.shape());
        Tensor dls(ls.shape());
        const std::size_t plane = qv.shape().plane();
        for (int b = 0; b < qv.n(); ++b)
          for (int c = 0; c < qv.c(); ++c) {
            const double s = std::exp(ls[c]);
            for (std::size_t i = 0; i < plane; ++i) {
              const std::size_t k = qv.index(b, c, 0, 0) + i;
              const double d = qv[k] - loc[c];
              if (logistic_bin(d, s) < kLikelihoodFloor) continue;
              const double u = (d + 0.5) / s;
              const double l = (d - 0.5) / s;
              const double dp_dq = (logistic_pdf(u) - logistic_pdf(l)) / s;
              dq[k] = g[k] * dp_dq;
              dloc[c] -= g[k] * dp_dq;
              dls[c] += g[k] * (-u * logistic_pdf(u) + l * logistic_pdf(l));
            }
          }
        tp.accumulate(q, dq);
        tp.accumulate(location, dloc);
        tp.accumulate(log_scale, dls);
      });
}

Var rate_bits(Var p) {
  const double bits = cenic::rate_bits(p.value());
  return p.tape()->record("rate_bits", Tensor::scalar(bits), {p}, [p](Tape& tp, const Tensor& g) {
    const Tensor& pv = tp.value(p);
    Tensor d(pv.shape());
    for (std::size_t i = 0; i < pv.size(); ++i) d[i] = -g[0] / (pv[i] * kLn2);
    tp.accumulate(p, d);
  });
}

}  // namespace ad

void CdfTable::validate() const {
  if (cdf.size() < 2) fail(ErrorKind::DomainError, "CDF table needs at least one symbol");
  if (cdf.front() != 0 || cdf.back() != kCdfTotal)
    fail(ErrorKind::DomainError, "CDF table must run from 0 to 65536");
  for (std::size_t i = 1; i < cdf.size(); ++i)
    if (cdf[i] <= cdf[i - 1]) fail(ErrorKind::DomainError, "CDF table must be strictly increasing");
}

std::vector<std::uint32_t> quantize_masses(std::span<const double> masses) {
  const std::size_t n = masses.size();
  if (n == 0 || n > kCdfTotal) fail(ErrorKind::DomainError, "cannot build a table over " + std::to_string(n) + " symbols");
  double total = 0;
  for (double m : masses) total += (m > 0 && std::isfinite(m)) ? m : 0.0;
  const std::uint32_t avail = kCdfTotal - static_cast<std::uint32_t>(n);
  std::vector<std::uint32_t> counts(n, 1);
  std::vector<double> frac(n, 0.0);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = (masses[i] > 0 && std::isfinite(masses[i])) ? masses[i] : 0.0;
    const double raw = total > 0 ? m / total * avail : static_cast<double>(avail) / n;
    const double fl = std::floor(raw);
    counts[i] += static_cast<std::uint32_t>(fl);
    frac[i] = raw - fl;
    assigned += static_cast<std::uint64_t>(fl);
  }
  std::uint64_t rem = avail - std::min<std::uint64_t>(assigned, avail);
  if (rem > 0) {
    // Spare counts go to the largest fractions, ties to the lower index.
    // Selecting the cut value keeps this linear in n.
    const std::size_t r = static_cast<std::size_t>(std::min<std::uint64_t>(rem, n));
    std::vector<double> sorted = frac;
    std::nth_element(sorted.begin(), sorted.begin() + (r - 1), sorted.end(), std::greater<>());
    const double cut = sorted[r - 1];
    std::size_t above = 0;
    for (double f : frac) above += f > cut;
    std::size_t ties = r - above;
    for (std::size_t i = 0; i < n; ++i) {
      if (frac[i] > cut) {
        ++counts[i];
      } else if (frac[i] == cut && ties > 0) {
        ++counts[i];
        --ties;
      }
    }
  }
  return counts;
}

namespace {

CdfTable table_from_counts(int min_symbol, const std::vector<std::uint32_t>& counts, bool escape) {
  CdfTable t;
  t.min_symbol = min_symbol;
  t.escape = escape;
  t.cdf.resize(counts.size() + 1);
  t.cdf[0] = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t.cdf[i + 1] = t.cdf[i] + counts[i];
  return t;
}

}  // namespace

CdfTable build_cdf(double mu, double sigma, int L) {
  if (L < 1) fail(ErrorKind::DomainError, "alphabet bound must be >= 1");
  const double s = std::max(sigma, kScaleFloor);
  const int n = 2 * L + 1;
  std::vector<double> masses(n + 1);
  if (mu == 0.0) {
    // upper[j] = P(X > j + 0.5)
    std::vector<double> upper(L + 1);
    for (int j = 0; j <= L; ++j) upper[j] = phi_cdf(-(j + 0.5) / s);
    masses[L] = 1.0 - 2.0 * upper[0];
    for (int k = 1; k <= L; ++k) masses[L + k] = masses[L - k] = upper[k - 1] - upper[k];
    masses[n] = 2.0 * upper[L];
  } else {
    for (int k = -L; k <= L; ++k) masses[k + L] = gaussian_bin(k - mu, s);
    masses[n] = phi_cdf((-L - 0.5 - mu) / s) + phi_cdf((-L - 0.5 + mu) / s);
  }
  return table_from_counts(-L, quantize_masses(masses), true);
}

CdfTable build_logistic_cdf(double mu, double scale, int L) {
  if (L < 1) fail(ErrorKind::DomainError, "alphabet bound must be >= 1");
  const int n = 2 * L + 1;
  std::vector<double> masses(n + 1);
  for (int k = -L; k <= L; ++k) masses[k + L] = logistic_bin(k - mu, scale);
  masses[n] = sigmoid((-L - 0.5 - mu) / scale) + sigmoid((-L - 0.5 + mu) / scale);
  return table_from_counts(-L, quantize_masses(masses), true);
}

ScaleTables::ScaleTables() : log_step_(std::log(kScaleCeiling / kScaleFloor) / (kScaleLevels - 1)) {
  for (int i = 0; i < kScaleLevels; ++i) {
    const double s = i + 1 == kScaleLevels ? kScaleCeiling : kScaleFloor * std::exp(i * log_step_);
    scales_.push_back(s);
    tables_.push_back(build_cdf(0.0, s));
  }
}

const ScaleTables& ScaleTables::instance() {
  static const ScaleTables t;
  return t;
}

int ScaleTables::index(double sigma) const {
  if (!(sigma > kScaleFloor)) return 0;
  int i = std::clamp(static_cast<int>(std::ceil(std::log(sigma / kScaleFloor) / log_step_)), 0, kScaleLevels - 1);
  // Guard the rounding of log at level boundaries.
  while (i > 0 && scales_[i - 1] >= sigma) --i;
  while (i + 1 < kScaleLevels && scales_[i] < sigma) ++i;
  return i;
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const std::uint8_t carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      // The very first byte is always zero (low + range never exceeds 2^32
      // at the start), so it is not stored.
      if (!first_) out_.push_back(static_cast<std::uint8_t>(temp + carry));
      first_ = false;
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::put(std::uint32_t start, std::uint32_t size) {
  range_ >>= kCdfBits;
  low_ += static_cast<std::uint64_t>(start) * range_;
  range_ *= size;
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode(int symbol, const CdfTable& t) {
  int index = symbol - t.min_symbol;
  const bool in_alphabet = index >= 0 && index < t.alphabet_size();
  if (!in_alphabet) {
    if (!t.escape)
      fail(ErrorKind::EncodeError, "symbol " + std::to_string(symbol) + " outside table alphabet [" +
                                       std::to_string(t.min_symbol) + ", " +
                                       std::to_string(t.max_symbol()) + "]");
    const long raw = static_cast<long>(symbol) + kEscapeOffset;
    if (raw < 0 || raw >= (1L << kEscapeBits))
      fail(ErrorKind::EncodeError, "symbol " + std::to_string(symbol) + " exceeds the escape range");
    index = t.escape_index();
    put(t.cdf[index], t.count(index));
    encode_raw(static_cast<std::uint32_t>(raw), kEscapeBits);
    return;
  }
  put(t.cdf[index], t.count(index));
}

void RangeEncoder::encode_raw(std::uint32_t value, int bits) {
  // Raw fields are at most 16 bits wide and sent as one uniform symbol.
  range_ >>= bits;
  low_ += static_cast<std::uint64_t>(value) * range_;
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    shift_low();
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  std::vector<std::uint8_t> out = std::move(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next();
}

std::uint8_t RangeDecoder::next() {
  if (pos_ >= in_.size()) fail(ErrorKind::DecodeError, "range coder stream truncated");
  return in_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < (1u << 24)) {
    range_ <<= 8;
    code_ = (code_ << 8) | next();
  }
}

int RangeDecoder::decode(const CdfTable& t) {
  range_ >>= kCdfBits;
  const std::uint32_t value = code_ / range_;
  if (value >= kCdfTotal) fail(ErrorKind::DecodeError, "range coder stream inconsistent with table");
  const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), value);
  const int index = static_cast<int>(it - t.cdf.begin()) - 1;
  code_ -= t.cdf[index] * range_;
  range_ *= t.count(index);
  normalize();
  if (t.escape && index == t.escape_index())
    return static_cast<int>(decode_raw(kEscapeBits)) - kEscapeOffset;
  return t.min_symbol + index;
}

std::uint32_t RangeDecoder::decode_raw(int bits) {
  range_ >>= bits;
  const std::uint32_t value = code_ / range_;
  if (value >= (1u << bits)) fail(ErrorKind::DecodeError, "range coder raw field out of range");
  code_ -= value * range_;
  normalize();
  return value;
}

std::vector<std::uint8_t> rc_encode(std::span<const int> symbols, std::span<const CdfTable> tables) {
  if (symbols.size() != tables.size())
    fail(ErrorKind::EncodeError, "rc_encode needs one table per symbol");
  if (symbols.empty()) return {};
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode(symbols[i], tables[i]);
  return enc.finish();
}

std::vector<int> rc_decode(std::span<const std::uint8_t> bytes, std::span<const CdfTable> tables) {
  std::vector<int> out;
  if (tables.empty()) return out;
  RangeDecoder dec(bytes);
  out.reserve(tables.size());
  for (const CdfTable& t : tables) out.push_back(dec.decode(t));
  return out;
}

double table_information_bits(std::span<const int> symbols, std::span<const CdfTable> tables) {
  double bits = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const CdfTable& t = tables[i];
    int index = symbols[i] - t.min_symbol;
    if (index < 0 || index >= t.alphabet_size()) {
      index = t.escape_index();
      bits += kEscapeBits;
    }
    bits -= std::log2(static_cast<double>(t.count(index)) / kCdfTotal);
  }
  return bits;
}

}  // namespace cenic
