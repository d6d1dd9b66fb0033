#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cenic/autodiff.hpp"
#include "cenic/tensor.hpp"

namespace cenic {

inline constexpr double kScaleFloor = 0.11;
inline constexpr int kAlphabetBound = 64;
inline constexpr int kCdfBits = 16;
inline constexpr std::uint32_t kCdfTotal = 1u << kCdfBits;
inline constexpr double kLikelihoodFloor = 1.0 / 16777216.0;  // 2^-24
inline constexpr int kEscapeBits = 16;
inline constexpr int kEscapeOffset = 1 << (kEscapeBits - 1);

enum class QuantMode { noise, round };

// noise: y + U(-0.5, 0.5) drawn from `rng` (means ignored).
// round: round(y - mu) + mu.
template <typename T>
BasicTensor<T> quantize(const BasicTensor<T>& y, const BasicTensor<T>& means, QuantMode mode,
                        std::mt19937_64* rng = nullptr);

// Fresh U(-0.5, 0.5) samples, exclusive at both ends.
Tensor uniform_noise(Shape shape, std::mt19937_64& rng);

struct GaussianCond {
  Tensor means;
  Tensor scales;
  double scale_floor = kScaleFloor;
};

// Mass of the unit bin centred at offset d from the mean, for a Gaussian of
// scale sigma. Computed on |d| so far tails keep their precision.
double gaussian_bin(double d, double sigma);

// Phi((t-mu+0.5)/s) - Phi((t-mu-0.5)/s), s = max(scale, floor), clamped to >= 2^-24.
Tensor gaussian_likelihood(const Tensor& q, const GaussianCond& model);

// Per-channel logistic over unit bins. location and log_scale are (C, 1, 1, 1).
struct FactorizedPrior {
  Tensor location;
  Tensor log_scale;

  int channels() const { return location.n(); }
  static FactorizedPrior init(int channels, double log_scale = 0.0);
};

double logistic_bin(double d, double scale);

Tensor factorized_likelihood(const Tensor& q, const FactorizedPrior& prior);

// -sum log2 p. DomainError when any p <= 0 or is not finite.
double rate_bits(const Tensor& p);

namespace ad {
// Gradients flow to q, means and scales (zero where the scale sits below the
// floor or the mass is clamped).
Var gaussian_likelihood(Var q, Var means, Var scales, double scale_floor = kScaleFloor);
Var factorized_likelihood(Var q, Var location, Var log_scale);
Var rate_bits(Var p);
}  // namespace ad

// Integer cumulative frequencies over symbols min_symbol .. min_symbol+n-1,
// optionally followed by an escape entry. cdf.front() == 0, cdf.back() == 2^16.
struct CdfTable {
  int min_symbol = 0;
  std::vector<std::uint32_t> cdf;
  bool escape = false;

  int num_entries() const { return static_cast<int>(cdf.size()) - 1; }
  int alphabet_size() const { return num_entries() - (escape ? 1 : 0); }
  int max_symbol() const { return min_symbol + alphabet_size() - 1; }
  int escape_index() const { return num_entries() - 1; }
  std::uint32_t count(int index) const { return cdf[index + 1] - cdf[index]; }

  // Throws DomainError unless the table is a valid 16-bit CDF.
  void validate() const;
};

// Largest-remainder rounding of `masses` to 2^16 counts with every entry >= 1.
std::vector<std::uint32_t> quantize_masses(std::span<const double> masses);

// Gaussian table over -L..L plus escape, for offsets from mu.
CdfTable build_cdf(double mu, double sigma, int L = kAlphabetBound);
// Logistic table over -L..L plus escape, centred at mu.
CdfTable build_logistic_cdf(double mu, double scale, int L = kAlphabetBound);

// Zero-mean Gaussian tables at log-spaced scales from kScaleFloor to
// kScaleCeiling, built once. A predicted scale codes with the first level at
// or above it.
inline constexpr double kScaleCeiling = 256.0;
inline constexpr int kScaleLevels = 320;

class ScaleTables {
 public:
  static const ScaleTables& instance();

  int index(double sigma) const;
  double scale(int i) const { return scales_[i]; }
  const CdfTable& table(int i) const { return tables_[i]; }
  const CdfTable& for_scale(double sigma) const { return tables_[index(sigma)]; }

 private:
  ScaleTables();
  double log_step_ = 0;
  std::vector<double> scales_;
  std::vector<CdfTable> tables_;
};

// Byte-oriented range coder: 64-bit low with carry propagation, 32-bit range,
// 16-bit frequencies. Escaped symbols are followed by 16 raw bits holding
// symbol + 32768.
class RangeEncoder {
 public:
  void encode(int symbol, const CdfTable& table);
  void encode_raw(std::uint32_t value, int bits);
  std::vector<std::uint8_t> finish();

 private:
  void put(std::uint32_t start, std::uint32_t size);
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  bool first_ = true;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  int decode(const CdfTable& table);
  std::uint32_t decode_raw(int bits);

 private:
  std::uint8_t next();
  void normalize();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

// One table per symbol. EncodeError for unescapable out-of-alphabet symbols.
std::vector<std::uint8_t> rc_encode(std::span<const int> symbols, std::span<const CdfTable> tables);
// DecodeError when the stream ends early or is inconsistent with the tables.
std::vector<int> rc_decode(std::span<const std::uint8_t> bytes, std::span<const CdfTable> tables);

// Ideal code length of `symbols` under the integer tables, in bits
// (escapes include their raw bits).
double table_information_bits(std::span<const int> symbols, std::span<const CdfTable> tables);

}  // namespace cenic
